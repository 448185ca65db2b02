"""Uniform staggered grids, discrete operators, states and scenarios.

Layout
------
``u`` and ``v`` live at cell centres, shape ``cells``.  Stress and plastic
strain are stored one array per axis; the array for axis ``a`` lives on the
faces normal to ``e_a`` and has ``cells[a] + 1`` entries along that axis, the
first and last of which are boundary faces.  A boundary face holds the
normal flux imposed by the boundary condition, interior faces hold the
genuine stress component.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .constitutive import PsiFamily

__all__ = [
    "BC_MODES",
    "Box",
    "CompatibilityReport",
    "Grid",
    "PulseSource",
    "Scenario",
    "State",
    "TabulatedSource",
    "bump",
    "check_compatibility",
    "checkerboard",
    "compact_gaussian",
    "div",
    "energies",
    "grad",
    "pulse_scenario",
    "support_bbox",
]

BC_MODES = ("impedance", "dirichlet", "neumann")
COMPAT_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    cells: tuple
    h: float
    origin: tuple = None

    def __post_init__(self):
        cells = tuple(int(c) for c in np.atleast_1d(self.cells))
        if len(cells) not in (1, 2):
            raise ValueError(f"grid must be 1D or 2D, got {len(cells)} axes")
        if min(cells) < 3:
            raise ValueError(f"need at least 3 cells per axis, got {cells}")
        if not self.h > 0:
            raise ValueError(f"cell size must be positive, got {self.h}")
        origin = (0.0,) * len(cells) if self.origin is None else tuple(map(float, self.origin))
        if len(origin) != len(cells):
            raise ValueError("origin and cells disagree in dimension")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "origin", origin)

    @classmethod
    def uniform(cls, cells, length: float = 1.0, origin=None) -> "Grid":
        """Grid of ``cells`` square cells spanning ``length`` along axis 0."""
        cells = tuple(np.atleast_1d(cells))
        return cls(cells, length / cells[0], origin)

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def volume(self) -> float:
        return self.h**self.dim

    @property
    def face_area(self) -> float:
        return self.h ** (self.dim - 1)

    def face_shape(self, axis: int) -> tuple:
        s = list(self.cells)
        s[axis] += 1
        return tuple(s)

    def axis_nodes(self, axis: int, faces: bool = False) -> np.ndarray:
        n = self.cells[axis]
        k = np.arange(n + 1) if faces else np.arange(n) + 0.5
        return self.origin[axis] + self.h * k

    def centers(self) -> tuple:
        """Coordinate arrays of the cell centres (``ij`` indexing)."""
        axes = [self.axis_nodes(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def faces(self, axis: int) -> tuple:
        """Coordinate arrays of the faces normal to ``axis``."""
        axes = [self.axis_nodes(a, faces=(a == axis)) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def boundary_slice(self, axis: int, side: int) -> tuple:
        """Index of the boundary faces of ``axis`` on the low (0) or high (1) side."""
        idx = [slice(None)] * self.dim
        idx[axis] = 0 if side == 0 else self.cells[axis]
        return tuple(idx)

    def cell_slice(self, axis: int, side: int) -> tuple:
        """Index of the cells adjacent to those boundary faces."""
        idx = [slice(None)] * self.dim
        idx[axis] = 0 if side == 0 else self.cells[axis] - 1
        return tuple(idx)


def _check_scalar(grid: Grid, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != grid.cells:
        raise ValueError(f"scalar field of shape {u.shape} does not match grid {grid.cells}")
    return u


def _check_vector(grid: Grid, sigma) -> list:
    if len(sigma) != grid.dim:
        raise ValueError(f"vector field needs {grid.dim} components, got {len(sigma)}")
    out = []
    for a, s in enumerate(sigma):
        s = np.asarray(s, dtype=float)
        if s.shape != grid.face_shape(a):
            raise ValueError(
                f"component {a} has shape {s.shape}, expected {grid.face_shape(a)}"
            )
        out.append(s)
    return out


def grad(grid: Grid, u) -> list:
    """Two-point face gradient; boundary faces are left at zero."""
    u = _check_scalar(grid, u)
    out = []
    for a in range(grid.dim):
        g = np.zeros(grid.face_shape(a))
        lo = [slice(None)] * grid.dim
        lo[a] = slice(1, -1)
        g[tuple(lo)] = np.diff(u, axis=a) / grid.h
        out.append(g)
    return out


def div(grid: Grid, sigma) -> np.ndarray:
    """Cell divergence using every face, boundary faces included."""
    sigma = _check_vector(grid, sigma)
    return sum(np.diff(s, axis=a) for a, s in enumerate(sigma)) / grid.h


@dataclass
class State:
    u: np.ndarray
    v: np.ndarray
    sigma: list
    p: list
    t: float = 0.0

    def copy(self) -> "State":
        return State(
            self.u.copy(), self.v.copy(), [s.copy() for s in self.sigma],
            [q.copy() for q in self.p], self.t,
        )

    @classmethod
    def zeros(cls, grid: Grid) -> "State":
        return cls(
            np.zeros(grid.cells), np.zeros(grid.cells),
            [np.zeros(grid.face_shape(a)) for a in range(grid.dim)],
            [np.zeros(grid.face_shape(a)) for a in range(grid.dim)],
        )

    def validate(self, grid: Grid) -> None:
        _check_scalar(grid, self.u)
        _check_scalar(grid, self.v)
        _check_vector(grid, self.sigma)
        _check_vector(grid, self.p)


def energies(grid: Grid, state: State) -> tuple:
    """Kinetic and elastic energy; the elastic part uses interior faces only."""
    kin = 0.5 * float(np.sum(state.v * state.v)) * grid.volume
    ela = 0.5 * sum(float(np.sum(_interior(grid, a, s) ** 2))
                    for a, s in enumerate(state.sigma)) * grid.volume
    return kin, ela


def pair_norm(grid: Grid, sigma) -> np.ndarray:
    """Norm of the stress at each cell's face pair (its low faces).

    Boundary components are excluded: they carry fluxes, not stresses.
    """
    sq = np.zeros(grid.cells)
    for a, s in enumerate(sigma):
        idx = [slice(None)] * grid.dim
        idx[a] = slice(0, grid.cells[a])
        comp = s[tuple(idx)].copy()
        lo = [slice(None)] * grid.dim
        lo[a] = 0
        comp[tuple(lo)] = 0.0
        sq += comp * comp
    return np.sqrt(sq)


# ----------------------------------------------------------------------------
# sources

class PulseSource:
    """Closed-form source ``A * bump(x) * sin(pi (t - t0)/(t1 - t0))`` on ``[t0, t1]``."""

    def __init__(self, grid: Grid, amplitude: float, center, width: float,
                 t_on: float = 0.0, t_off: float = 0.25):
        if not t_off > t_on:
            raise ValueError("pulse must switch off after it switches on")
        self.amplitude = float(amplitude)
        self.t_on, self.t_off = float(t_on), float(t_off)
        self.shape = bump(grid, center, width)

    def __call__(self, t: float, step: int):
        if not self.t_on <= t <= self.t_off:
            return None
        phase = np.sin(np.pi * (t - self.t_on) / (self.t_off - self.t_on))
        return self.amplitude * phase * self.shape


class TabulatedSource:
    """Source given as one array per step; steps past the table are zero."""

    def __init__(self, table):
        self.table = np.asarray(table, dtype=float)

    def __call__(self, t: float, step: int):
        return self.table[step] if step < len(self.table) else None


# ----------------------------------------------------------------------------
# closed-form profiles

def _radius(grid: Grid, center, coords=None) -> np.ndarray:
    coords = grid.centers() if coords is None else coords
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))
    return np.sqrt(sum((x - c) ** 2 for x, c in zip(coords, center)))


def bump(grid: Grid, center, width: float, amplitude: float = 1.0, coords=None):
    """``A (1 - r^2/w^2)^3`` inside radius ``w``; C^2 with compact support."""
    r = _radius(grid, center, coords) / width
    return amplitude * np.where(r < 1.0, (1.0 - r * r) ** 3, 0.0)


def compact_gaussian(grid: Grid, center, width: float, amplitude: float = 1.0,
                     cutoff: float = 4.0, coords=None):
    """Gaussian of std ``width`` shifted and clipped to vanish beyond ``cutoff*width``."""
    r = _radius(grid, center, coords) / width
    floor = np.exp(-0.5 * cutoff**2)
    g = (np.exp(-0.5 * r * r) - floor) / (1.0 - floor)
    return amplitude * np.where(r < cutoff, g, 0.0)


def checkerboard(grid: Grid, lo, hi, block: int = 1, amplitude: float = 1.0):
    """Alternating +-A stress blocks of ``block`` cells on the faces inside ``[lo, hi]``.

    Only the first stress component is populated.
    """
    coords = grid.faces(0)
    inside = np.ones(grid.face_shape(0), dtype=bool)
    parity = np.zeros(grid.face_shape(0), dtype=int)
    for a, x in enumerate(coords):
        inside &= (x > lo[a]) & (x < hi[a])
        parity += np.floor((x - grid.origin[a]) / (block * grid.h) + 1e-9).astype(int)
    s0 = np.where(inside, amplitude * np.where(parity % 2 == 0, 1.0, -1.0), 0.0)
    sigma = [s0] + [np.zeros(grid.face_shape(a)) for a in range(1, grid.dim)]
    return sigma


# ----------------------------------------------------------------------------
# scenarios

@dataclass
class Scenario:
    grid: Grid
    u0: np.ndarray
    v0: np.ndarray
    sigma0: list
    p0: list
    f: Callable | None = None
    lam: float = 1.0
    eps: float = 0.0
    T: float = 1.0
    cfl: float = 0.9
    bc_mode: str = "impedance"
    name: str = "scenario"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.bc_mode not in BC_MODES:
            raise ValueError(f"bc_mode must be one of {BC_MODES}, got {self.bc_mode!r}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.eps < 0:
            raise ValueError(f"eps must be non-negative, got {self.eps}")
        if not self.T >= 0:
            raise ValueError(f"T must be non-negative, got {self.T}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        self.u0 = _check_scalar(self.grid, self.u0)
        self.v0 = _check_scalar(self.grid, self.v0)
        self.sigma0 = _check_vector(self.grid, self.sigma0)
        self.p0 = _check_vector(self.grid, self.p0)

    def initial_state(self) -> State:
        return State(self.u0.copy(), self.v0.copy(),
                     [s.copy() for s in self.sigma0], [q.copy() for q in self.p0])

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def source(self, t: float, step: int):
        return None if self.f is None else self.f(t, step)


def pulse_scenario(cells=400, length: float = 1.0, *, profile: str = "bump",
                   amplitude: float = 0.5, center=None, width: float = 0.1,
                   direction: str = "standing", stress_amplitude: float = 0.0,
                   lam: float = 1.0, eps: float = 0.0, T: float = 1.0,
                   cfl: float = 0.9, bc_mode: str = "impedance",
                   f=None, block: int = 1, name: str | None = None) -> Scenario:
    """Build a scenario from a named closed-form profile.

    ``profile`` is ``bump``, ``gaussian``, ``checkerboard`` or ``zero``.  In
    1D, ``direction='right'`` (``'left'``) sets ``sigma0 = -v0`` (``+v0``) on
    the faces, which makes the pulse a single travelling wave.  Displacement
    is integrated from ``sigma0`` in 1D so that ``p0 = 0``; in 2D ``u0 = 0``
    and ``p0 = -sigma0``.
    """
    grid = Grid.uniform(cells, length)
    if center is None:
        center = [grid.origin[a] + 0.5 * grid.cells[a] * grid.h for a in range(grid.dim)]
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))

    shapes = {"bump": bump, "gaussian": compact_gaussian}
    sigma0 = [np.zeros(grid.face_shape(a)) for a in range(grid.dim)]
    v0 = np.zeros(grid.cells)
    if profile in shapes:
        prof = shapes[profile]
        v0 = prof(grid, center, width, amplitude)
        if direction != "standing":
            if grid.dim != 1:
                raise ValueError("travelling pulses are only defined in 1D")
            if direction not in ("right", "left"):
                raise ValueError(f"unknown direction {direction!r}")
            sgn = -1.0 if direction == "right" else 1.0
            sigma0[0] = sgn * prof(grid, center, width, amplitude, coords=grid.faces(0))
        if stress_amplitude:
            sigma0[0] = sigma0[0] + prof(grid, center, width, stress_amplitude,
                                         coords=grid.faces(0))
    elif profile == "checkerboard":
        lo = center - width
        hi = center + width
        sigma0 = checkerboard(grid, lo, hi, block, stress_amplitude or 1.0)
        v0 = np.zeros(grid.cells)
        if amplitude:
            v0 = bump(grid, center, width, amplitude)
    elif profile != "zero":
        raise ValueError(f"unknown profile {profile!r}")

    if grid.dim == 1:
        u0 = np.concatenate([[0.0], np.cumsum(grid.h * sigma0[0][1:-1])])
        p0 = [np.zeros(grid.face_shape(0))]
        # boundary faces of p carry nothing
    else:
        u0 = np.zeros(grid.cells)
        p0 = [-s for s in sigma0]
        for a in range(grid.dim):
            for side in (0, 1):
                p0[a][grid.boundary_slice(a, side)] = 0.0
    return Scenario(grid, u0, v0, sigma0, p0, f=f, lam=lam, eps=eps, T=T, cfl=cfl,
                    bc_mode=bc_mode, name=name or profile,
                    meta=dict(profile=profile, amplitude=amplitude, width=width,
                              center=center.tolist(), direction=direction,
                              stress_amplitude=stress_amplitude, block=block))


# ----------------------------------------------------------------------------
# compatibility

@dataclass
class CompatibilityReport:
    items: list  # (name, passed, worst)

    @property
    def ok(self) -> bool:
        return all(p for _, p, _ in self.items)

    def __bool__(self) -> bool:
        return self.ok

    def failures(self) -> list:
        return [name for name, p, _ in self.items if not p]

    def __str__(self) -> str:
        return "\n".join(f"{'PASS' if p else 'FAIL'} {n}: worst {w:.3e}" for n, p, w in self.items)


def _interior(grid: Grid, a: int, s: np.ndarray) -> np.ndarray:
    idx = [slice(None)] * grid.dim
    idx[a] = slice(1, -1)
    return s[tuple(idx)]


def check_compatibility(s: Scenario) -> CompatibilityReport:
    """Itemised check of the initial-data compatibility conditions.

    1. ``grad u0 = sigma0 + p0`` on interior faces,
    2. the boundary relation of the selected regime on boundary faces,
    3. ``|sigma0| <= 1`` at every face pair.
    """
    g = s.grid
    gu = grad(g, s.u0)
    decomp = max(
        (np.abs(_interior(g, a, gu[a] - s.sigma0[a] - s.p0[a])).max(initial=0.0)
         for a in range(g.dim)),
        default=0.0,
    )
    bres = 0.0
    psi = PsiFamily(s.lam)
    for a in range(g.dim):
        for side, sgn in ((0, -1.0), (1, 1.0)):
            sn = sgn * s.sigma0[a][g.boundary_slice(a, side)]
            vb = s.v0[g.cell_slice(a, side)]
            if s.bc_mode == "impedance":
                r = sn + vb / psi.lam
            elif s.bc_mode == "dirichlet":
                r = vb
            else:
                r = sn
            bres = max(bres, float(np.abs(r).max(initial=0.0)))
    smax = float(pair_norm(g, s.sigma0).max())
    return CompatibilityReport([
        ("additive decomposition grad(u0) = sigma0 + p0", decomp <= COMPAT_TOL, decomp),
        ("boundary relation", bres <= COMPAT_TOL, bres),
        ("stress constraint |sigma0| <= 1", smax <= 1.0 + 1e-12, max(smax - 1.0, 0.0)),
    ])


# ----------------------------------------------------------------------------
# supports

@dataclass(frozen=True)
class Box:
    """Axis-aligned box of cells, inclusive index bounds plus physical extent."""

    index_lo: tuple
    index_hi: tuple
    lo: tuple
    hi: tuple

    def dilate(self, d: float) -> "Box":
        return Box(self.index_lo, self.index_hi,
                   tuple(x - d for x in self.lo), tuple(x + d for x in self.hi))

    def overshoot(self, other: "Box | None") -> float:
        """Largest distance by which ``other`` sticks out of this box."""
        if other is None:
            return 0.0
        out = 0.0
        for a in range(len(self.lo)):
            out = max(out, self.lo[a] - other.lo[a], other.hi[a] - self.hi[a])
        return out

    def union(self, other: "Box | None") -> "Box":
        if other is None:
            return self
        return Box(tuple(map(min, self.index_lo, other.index_lo)),
                   tuple(map(max, self.index_hi, other.index_hi)),
                   tuple(map(min, self.lo, other.lo)), tuple(map(max, self.hi, other.hi)))

    def distance_to_boundary(self, grid: Grid) -> float:
        d = np.inf
        for a in range(grid.dim):
            lo = grid.origin[a]
            hi = lo + grid.cells[a] * grid.h
            d = min(d, self.lo[a] - lo, hi - self.hi[a])
        return float(d)


def _mark_faces(grid: Grid, a: int, mask_f: np.ndarray, out: np.ndarray) -> None:
    n = grid.cells[a]
    idx_hi = [slice(None)] * grid.dim
    idx_lo = [slice(None)] * grid.dim
    idx_hi[a] = slice(0, n)      # face i is the low face of cell i
    idx_lo[a] = slice(1, n + 1)  # and the high face of cell i-1
    out |= mask_f[tuple(idx_hi)]
    out |= mask_f[tuple(idx_lo)]


def support_mask(grid: Grid, v, sigma, threshold: float) -> np.ndarray:
    mask = np.abs(np.asarray(v)) > threshold
    for a, s in enumerate(sigma):
        _mark_faces(grid, a, np.abs(s) > threshold, mask)
    return mask


def box_from_mask(grid: Grid, mask: np.ndarray) -> Box | None:
    if not mask.any():
        return None
    lo_i, hi_i, lo, hi = [], [], [], []
    for a in range(grid.dim):
        other = tuple(b for b in range(grid.dim) if b != a)
        hit = np.nonzero(mask.any(axis=other) if other else mask)[0]
        i0, i1 = int(hit[0]), int(hit[-1])
        lo_i.append(i0)
        hi_i.append(i1)
        lo.append(grid.origin[a] + i0 * grid.h)
        hi.append(grid.origin[a] + (i1 + 1) * grid.h)
    return Box(tuple(lo_i), tuple(hi_i), tuple(lo), tuple(hi))


def support_bbox(grid: Grid, state: State, threshold: float) -> Box | None:
    """Smallest box of cells holding every ``|v|`` or ``|sigma|`` above ``threshold``.

    A face above the threshold marks both of its neighbouring cells.
    Returns ``None`` when nothing exceeds the threshold.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    return box_from_mask(grid, support_mask(grid, state.v, state.sigma, threshold))


def source_box(grid: Grid, f_values: Sequence, threshold: float) -> Box | None:
    mask = np.zeros(grid.cells, dtype=bool)
    for fv in f_values:
        if fv is not None:
            mask |= np.abs(fv) > threshold
    return box_from_mask(grid, mask)
