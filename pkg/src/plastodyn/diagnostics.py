"""Executable checks on computed trajectories.

Quadrature
----------
Space integrals use the cellwise midpoint rule: ``v`` is a cell value and
the stress at a cell centre is the average of its two faces per axis
(boundary faces included, they hold the normal trace).  The stress of a
snapshot is time-centred, ``(sigma^n + sigma^{n+1}) / 2``, because the
staggered update keeps it half a step ahead of the velocity.  Terms with
``d phi/dt`` use differences of ``phi`` over each interval, which is exact
for test functions that are piecewise linear in time; the remaining time
integrals use the trapezoid rule, except sources on runs that record every
step, which follow the solver's own rule (the source sampled at ``t_n`` acts
on ``[t_n, t_{n+1}]``).  Boundary integrals use the boundary-face values and
the velocity of the adjacent cell.

Tolerances
----------
Every discrete check compares against ``tol(dt, h) = c_dt dt + c_h h``;
for the integral checks ``dt`` is the snapshot spacing of the quadrature.
The constants were measured once on elastic-regime runs (see
``benchmarks/calibrate_tolerances.py``) and are frozen in
:data:`TOLERANCES`.  Integral inequalities are checked in *relative* form:
the discrete value is divided by the sum of the quadratures of its
absolute integrands, so one tolerance serves data of any amplitude.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .algebra import boundary_quadratic
from .constitutive import psi, psi_prime
from .driver import boundary_source, integrate
from .grid import Box, Grid, Scenario, State, source_box, support_bbox
from .trajectory import EnergyLedger, Trajectory

__all__ = [
    "EnergyLedger",
    "TOLERANCES",
    "TestFunction",
    "TestFunctionDictionary",
    "ToleranceModel",
    "ProbeRow",
    "VerificationReport",
    "boundary_relaxation_check",
    "cone_check",
    "contraction_constant",
    "default_kappa_grid",
    "dissipative_verify",
    "energy_audit",
    "flow_rule_check",
    "kato_check",
    "translation_probe",
]


@dataclass(frozen=True)
class ToleranceModel:
    c_dt: float
    c_h: float

    def __call__(self, dt: float, h: float) -> float:
        return self.c_dt * dt + self.c_h * h


# worst violation / (dt + h) measured on elastic runs at 100, 200 and 400
# cells, times a safety factor of about 4.  The boundary Fenchel residual is
# zero to rounding with the implicit boundary closure; its constant is a
# floor well above rounding.
TOLERANCES = {
    "energy": ToleranceModel(10.0, 10.0),
    "kato": ToleranceModel(1.0, 1.0),
    "dissipative": ToleranceModel(0.08, 0.08),
    "fenchel": ToleranceModel(1e-6, 1e-6),
}


@dataclass
class VerificationReport:
    check: str
    worst_violation: float
    tolerance: float
    location: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.worst_violation <= self.tolerance)

    def __bool__(self) -> bool:
        return self.passed

    def __str__(self) -> str:
        loc = ", ".join(f"{k}={_fmt(v)}" for k, v in self.location.items())
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.check}: worst violation {self.worst_violation:.3e} "
                f"(tolerance {self.tolerance:.3e})" + (f" at {loc}" if loc else ""))


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (tuple, list, np.ndarray)):
        return "(" + ", ".join(_fmt(float(x)) for x in np.ravel(v)) + ")"
    return str(v)


# ----------------------------------------------------------------------------
# quadrature helpers

def time_weights(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    w = np.zeros_like(t)
    if len(t) > 1:
        d = np.diff(t)
        w[:-1] += 0.5 * d
        w[1:] += 0.5 * d
    return w


def quadrature_dt(traj: Trajectory) -> float:
    """Time step of the snapshot quadrature: the largest snapshot spacing.

    Equal to the solver step when every step is recorded.  The integral
    checks use it in place of ``dt`` in their tolerance because their
    quadrature error scales with the snapshot spacing.
    """
    if len(traj.times) < 2:
        return traj.dt
    return max(traj.dt, float(np.max(np.diff(traj.times))))


def cell_stress(grid: Grid, sigma) -> np.ndarray:
    """Stress at cell centres, shape ``(dim, *cells)``."""
    out = []
    for a, s in enumerate(sigma):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[a] = slice(0, -1)
        hi[a] = slice(1, None)
        out.append(0.5 * (s[tuple(lo)] + s[tuple(hi)]))
    return np.stack(out)


def centred_stress(traj: Trajectory, n: int) -> list:
    """Face stress at the time of snapshot ``n``: ``(sigma^k + sigma^{k+1}) / 2``.

    The staggered update advances the stress half a step ahead of the
    velocity, so pairing ``v^k`` with ``sigma^k`` costs a full order of
    accuracy.  ``sigma^{k+1}`` is recomputed by one step from the snapshot.
    """
    g = traj.grid
    st = traj.states[n].copy()
    f = traj.sources[n]
    if f is not None:
        f = np.ascontiguousarray(f, dtype=float)
    gb = boundary_source(g, traj.states[0].v, traj.eps)
    out = np.zeros(kernels.N_OUT)
    kernels.step(st.u, st.v, st.sigma, st.p, f, gb, traj.dt, g.h, traj.eps, traj.lam,
                 kernels.BC_CODES[traj.bc_mode], out)
    return [0.5 * (a + b) for a, b in zip(traj.states[n].sigma, st.sigma)]


def _stack_fields(traj: Trajectory, scale_sigma: float = 1.0):
    v = np.stack([s.v for s in traj.states])
    sig = np.stack([cell_stress(traj.grid, centred_stress(traj, n))
                    for n in range(len(traj.states))]) * scale_sigma
    return v, sig


def _boundary_points(grid: Grid):
    """Per boundary side: (axis, outward sign, face coordinates, face selector, cell selector)."""
    out = []
    for a in range(grid.dim):
        coords = grid.faces(a)
        for side, sgn in ((0, -1.0), (1, 1.0)):
            fsel = grid.boundary_slice(a, side)
            out.append((a, sgn, tuple(c[fsel] for c in coords), fsel, grid.cell_slice(a, side)))
    return out


# ----------------------------------------------------------------------------
# test functions

@dataclass
class TestFunction:
    """Non-negative Lipschitz space-time function with its derivatives.

    ``fn(coords, t)`` returns ``(phi, phi_t, [d_1 phi, ..., d_n phi])`` at the
    points ``coords`` (a tuple of coordinate arrays) and time ``t``.
    """

    name: str
    fn: Callable
    lipschitz: float

    __test__ = False  # not a pytest class

    def __call__(self, coords, t):
        return self.fn(coords, t)

    def value(self, coords, t):
        return self.fn(coords, t)[0]


def _tent(t, t0, t1):
    """Hat in time with support ``[t0, t1]``, peak 1; returns value and derivative."""
    m, r = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
    val = max(0.0, 1.0 - abs(t - m) / r)
    der = 0.0 if val == 0.0 else (-1.0 / r if t > m else 1.0 / r)
    return val, der


def tent_function(t0: float, t1: float) -> TestFunction:
    def fn(coords, t):
        val, der = _tent(t, t0, t1)
        shape = np.shape(coords[0])
        return np.full(shape, val), np.full(shape, der), [np.zeros(shape) for _ in coords]
    return TestFunction(f"tent[{t0:g},{t1:g}]", fn, 1.0 / (0.5 * (t1 - t0)))


def linear_decay(T: float) -> TestFunction:
    def fn(coords, t):
        shape = np.shape(coords[0])
        return (np.full(shape, max(T - t, 0.0)), np.full(shape, -1.0 if t < T else 0.0),
                [np.zeros(shape) for _ in coords])
    return TestFunction("T-t", fn, 1.0)


def bump_tent(center, radius: float, t0: float, t1: float) -> TestFunction:
    """``(1 - r^2/R^2)^3_+`` in space times a hat in time."""
    center = np.asarray(center, dtype=float)

    def fn(coords, t):
        d = [x - c for x, c in zip(coords, center)]
        q = sum(x * x for x in d) / radius**2
        inside = q < 1.0
        b = np.where(inside, (1.0 - q) ** 3, 0.0)
        db = np.where(inside, -6.0 * (1.0 - q) ** 2 / radius**2, 0.0)
        val, der = _tent(t, t0, t1)
        return b * val, b * der, [db * x * val for x in d]
    lip = 1.0 / (0.5 * (t1 - t0)) + 96.0 / (25.0 * math.sqrt(5.0) * radius)
    return TestFunction(f"bump*tent[{t0:g},{t1:g}]", fn, lip)


def cone_function(center, R: float, rho0: float = 0.0) -> TestFunction:
    """``min(R - t, R - t + rho0 - |x - x0|)_+``: unit-speed shrinking cone."""
    center = np.asarray(center, dtype=float)

    def fn(coords, t):
        d = [x - c for x, c in zip(coords, center)]
        r = np.sqrt(sum(x * x for x in d))
        val = np.maximum(0.0, np.minimum(R - t, R - t + rho0 - r))
        inside = val > 0
        outer = inside & (r > rho0)
        safe = np.where(r > 0, r, 1.0)
        grads = [np.where(outer, -x / safe, 0.0) for x in d]
        return val, np.where(inside, -1.0, 0.0), grads
    return TestFunction(f"cone(R={R:g})", fn, math.sqrt(2.0))


@dataclass
class TestFunctionDictionary:
    members: list

    __test__ = False

    @classmethod
    def default(cls, grid: Grid, T: float) -> "TestFunctionDictionary":
        """The five documented members for a domain and horizon ``T``.

        ``T - t``; a hat on ``[0, T]``; a hat on ``[-T/2, T/2]`` (so ``phi(0) > 0``);
        a centred bump of radius ``L/3`` times the hat on ``[0, T]``; the cone
        ``(R - t - |x - x0|)_+`` with ``R = T + L/4`` about the centre.
        """
        lengths = [grid.cells[a] * grid.h for a in range(grid.dim)]
        center = [grid.origin[a] + 0.5 * lengths[a] for a in range(grid.dim)]
        L = min(lengths)
        return cls([
            linear_decay(T),
            tent_function(0.0, T),
            tent_function(-0.5 * T, 0.5 * T),
            bump_tent(center, L / 3.0, 0.0, T),
            cone_function(center, T + 0.25 * L),
        ])

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


def default_kappa_grid(dim: int, k_max: float = 1.0, n_k: int = 8, n_angles: int = 4):
    """Deterministic samples of ``K = R x B``.

    ``k`` takes ``n_k`` equispaced values in ``[-k_max, k_max]``; ``tau`` is 0
    or lies on the circles of radius 1/2 and 1 (in 1D the points ``+-1/2``,
    ``+-1``; in 2D ``n_angles`` equispaced angles per circle).  In 1D the
    defaults give 8 x 5 = 40 states.
    """
    ks = np.linspace(-k_max, k_max, n_k)
    taus = [np.zeros(dim)]
    for rad in (0.5, 1.0):
        if dim == 1:
            taus += [np.array([rad]), np.array([-rad])]
        else:
            for j in range(n_angles):
                ang = 2 * np.pi * j / n_angles
                taus.append(rad * np.array([np.cos(ang), np.sin(ang)]))
    return [np.concatenate([[k], tau]) for k in ks for tau in taus]


# ----------------------------------------------------------------------------
# energy

def energy_audit(traj: Trajectory, tol: ToleranceModel | None = None):
    """Energy-balance residual and monotonicity of the dissipation columns.

    The reported violation is ``max_t |residual(t)| / E_ref`` with
    ``E_ref = E(0) + sup_t |work(t)|`` (zero for the zero trajectory).
    Returns ``(ledger, report)``.
    """
    led = traj.ledger
    if len(led) != traj.n_steps + 1 or len(led) == 0:
        raise ValueError("ledger does not match the trajectory")
    if traj.times and abs(led.t[-1] - traj.times[-1]) > 1e-9 * max(1.0, traj.times[-1]):
        raise ValueError("ledger and trajectory end at different times")
    tol = tol or TOLERANCES["energy"]
    res = led.column("residual")
    scale = led.initial_energy + float(np.abs(led.column("work_cum")).max())
    rel = np.abs(res) / scale if scale > 0 else np.abs(res)
    k = int(np.argmax(rel))
    mono = 0.0
    for c in ("plastic_cum", "viscous_cum", "boundary_flux_cum", "boundary_psi_cum"):
        d = np.diff(led.column(c))
        if d.size:
            mono = max(mono, float(-d.min()))
    worst = float(rel[k])
    if mono > 1e-14 * max(scale, 1.0):
        worst = math.inf
    return led, VerificationReport(
        "energy balance", worst, tol(traj.dt, traj.grid.h),
        location=dict(t=led.t[k]),
        details=dict(max_abs_residual=float(np.abs(res).max()), scale=scale,
                     monotone_violation=mono),
    )


def modified_energy(grid: Grid, state_prev: State, state: State) -> float:
    """``1/2 |v^n|^2 + 1/2 sigma^n . sigma^{n+1}`` over interior faces.

    This is the quantity the staggered update conserves exactly in the
    elastic interior; the plain energy oscillates at ``O(dt)``.
    """
    e = 0.5 * float(np.sum(state_prev.v ** 2))
    for a in range(grid.dim):
        idx = [slice(None)] * grid.dim
        idx[a] = slice(1, -1)
        e += 0.5 * float(np.sum(state_prev.sigma[a][tuple(idx)] * state.sigma[a][tuple(idx)]))
    return e * grid.volume


# ----------------------------------------------------------------------------
# comparison (Kato) inequality

def _compatible(t1: Trajectory, t2: Trajectory) -> None:
    if t1.grid != t2.grid:
        raise ValueError("trajectories live on different grids")
    if len(t1.times) != len(t2.times) or not np.allclose(t1.times, t2.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories have different time levels")


def kato_terms(traj1: Trajectory, traj2: Trajectory, phi: TestFunction) -> dict:
    """Discrete terms of the comparison inequality for one test function.

    ``boundary`` is the right-hand side; ``scale`` is the sum of the
    absolute integrands.
    """
    _compatible(traj1, traj2)
    g = traj1.grid
    X = g.centers()
    v1, s1 = _stack_fields(traj1)
    v2, s2 = _stack_fields(traj2)
    f1, f2 = _sources(traj1, None), _sources(traj2, None)
    if f1 is None and f2 is None:
        df = None
    else:
        zero = np.zeros_like(v1)
        df = (zero if f1 is None else f1) - (zero if f2 is None else f2)
    phis = [phi(X, t) for t in traj1.times]
    terms, scale = _quadrature(traj1, v1 - v2, s1 - s2, df, phis, np.zeros(g.dim + 1), 0.0)
    wt = time_weights(traj1.times)
    rhs = 0.0
    if traj1.bc_mode == "impedance":
        lam = traj1.lam
        for a, sgn, coords, fsel, csel in _boundary_points(g):
            for n, t in enumerate(traj1.times):
                ph = phi.value(coords, t)
                d = psi_prime(lam, traj1.states[n].v[csel]) - psi_prime(lam, traj2.states[n].v[csel])
                rhs += 2.0 * lam * wt[n] * float(np.sum(d * d * ph)) * g.face_area
    terms["boundary"] = rhs
    terms["scale"] = scale + rhs
    return terms


def kato_check(traj1: Trajectory, traj2: Trajectory, phi: TestFunction,
               tol: ToleranceModel | None = None) -> VerificationReport:
    """Amount by which ``LHS >= boundary term`` fails, relative to the term sizes."""
    tol = tol or TOLERANCES["kato"]
    terms = kato_terms(traj1, traj2, phi)
    lhs = terms["time"] + terms["initial"] + terms["flux"] + terms["source"]
    fail = terms["boundary"] - lhs
    rel = fail / terms["scale"] if terms["scale"] > 0 else 0.0
    return VerificationReport(
        f"kato[{phi.name}]", max(rel, 0.0), tol(quadrature_dt(traj1), traj1.grid.h),
        details=dict(terms=terms, lhs=lhs, slack=lhs - terms["boundary"], relative=rel),
    )


def state_distance(grid: Grid, a: State, b: State) -> float:
    """L2 distance of ``(v, sigma)`` with stress on interior faces."""
    d = float(np.sum((a.v - b.v) ** 2))
    for k in range(grid.dim):
        idx = [slice(None)] * grid.dim
        idx[k] = slice(1, -1)
        d += float(np.sum((a.sigma[k][tuple(idx)] - b.sigma[k][tuple(idx)]) ** 2))
    return math.sqrt(d * grid.volume)


def contraction_constant(traj1: Trajectory, traj2: Trajectory) -> dict:
    """``delta``, final distance and ``C = max(0, (D(T)/delta - 1)/T)``."""
    _compatible(traj1, traj2)
    g = traj1.grid
    delta = state_distance(g, traj1.states[0], traj2.states[0])
    dist = [state_distance(g, a, b) for a, b in zip(traj1.states, traj2.states)]
    T = traj1.times[-1]
    C = max(0.0, (dist[-1] / delta - 1.0) / T) if delta > 0 and T > 0 else 0.0
    return dict(delta=delta, final=dist[-1], sup=max(dist), C=C)


# ----------------------------------------------------------------------------
# finite speed

def support_threshold(traj: Trajectory, rel: float = 1e-3) -> float:
    """``rel`` times the data scale ``max(sup |U0|, T sup |f|)``.

    The explicit scheme moves one cell per step, so exponentially small
    precursors run ahead of the physical cone; a threshold relative to the
    data ignores them.
    """
    st = traj.states[0]
    scale = max([float(np.abs(st.v).max(initial=0.0))]
                + [float(np.abs(s).max(initial=0.0)) for s in st.sigma])
    fmax = max((float(np.abs(f).max()) for f in traj.sources if f is not None), default=0.0)
    scale = max(scale, fmax * (traj.times[-1] if traj.times else 0.0))
    return rel * scale if scale > 0 else 1e-300


def cone_check(traj: Trajectory, initial_support: Box | None = None,
               threshold: float | None = None, slack_cells: float = 2.0) -> VerificationReport:
    """Support at time ``t`` must lie in the initial box dilated by ``t + 2h``.

    ``initial_support`` defaults to the box holding the data and the
    sources; ``threshold`` defaults to :func:`support_threshold`.
    """
    g = traj.grid
    if threshold is None:
        threshold = support_threshold(traj)
    data_box = support_bbox(g, traj.states[0], threshold)
    src = source_box(g, traj.sources, threshold)
    if initial_support is None:
        initial_support = data_box.union(src) if data_box is not None else src
    for b in (data_box, src):
        if b is not None and (initial_support is None or initial_support.overshoot(b) > 1e-12):
            raise ValueError("initial data or source are not supported in the given box")
    worst, where = 0.0, {}
    for st, t in zip(traj.states, traj.times):
        box = support_bbox(g, st, threshold)
        if box is None:
            continue
        over = initial_support.dilate(t + slack_cells * g.h).overshoot(box)
        if over > worst:
            worst, where = over, dict(t=t, lo=box.lo, hi=box.hi)
    return VerificationReport("finite speed cone", worst, 0.0, location=where,
                              details=dict(threshold=threshold))


# ----------------------------------------------------------------------------
# dissipative-solution inequality

def _check_kappa(kappa, dim):
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape != (dim + 1,):
        raise ValueError(f"kappa must have {dim + 1} components")
    if np.linalg.norm(kappa[1:]) > 1.0 + 1e-12:
        raise ValueError(f"kappa {kappa} is outside K: |tau| > 1")
    return kappa


def _source_weights(traj: Trajectory) -> tuple:
    """How the source term is integrated in time.

    With every step recorded the solver's own rule is reproduced: the source
    sampled at ``t_n`` acts on ``[t_n, t_{n+1}]`` against the interval means
    of ``v`` and ``phi``.  Otherwise the trapezoid rule is used.
    """
    return traj.stride == 1, time_weights(traj.times)


def _quadrature(traj, v, s, f, phis, kappa, boundary_terms):
    """Terms of an inequality of the form ``time + initial + flux + source + boundary``.

    Returns ``(terms, scale)`` where ``scale`` is the sum of the quadratures
    of the absolute integrands, the denominator of every relative margin.
    """
    g = traj.grid
    vol = g.volume
    k, tau = kappa[0], kappa[1:]
    interval, wt = _source_weights(traj)
    terms = dict(time=0.0, flux=0.0, initial=0.0, source=0.0, boundary=0.0)
    absol = dict(terms)
    prev = None
    for n in range(len(wt)):
        ph, _, gr = phis[n]
        dv = v[n] - k
        dsig = [s[n][a] - tau[a] for a in range(g.dim)]
        sq = dv * dv + sum(x * x for x in dsig)
        if prev is not None:
            # interval rule, exact for test functions piecewise linear in time
            x = 0.5 * (sq + prev[0]) * (ph - prev[1])
            terms["time"] += float(np.sum(x)) * vol
            absol["time"] += float(np.sum(np.abs(x))) * vol
            if f is not None and interval:
                y = f[n - 1] * 0.5 * (dv + prev[2]) * 0.5 * (ph + prev[1])
                dt = traj.times[n] - traj.times[n - 1]
                terms["source"] += 2.0 * dt * float(np.sum(y)) * vol
                absol["source"] += 2.0 * dt * float(np.sum(np.abs(y))) * vol
        prev = (sq, ph, dv)
        # sum_i A_i (U - kappa).(U - kappa) d_i phi = -2 ((sigma - tau).grad phi)(v - k)
        x = sum(dsig[a] * gr[a] for a in range(g.dim)) * dv
        terms["flux"] += -2.0 * wt[n] * float(np.sum(x)) * vol
        absol["flux"] += 2.0 * wt[n] * float(np.sum(np.abs(x))) * vol
        if f is not None and not interval:
            y = f[n] * dv * ph
            terms["source"] += 2.0 * wt[n] * float(np.sum(y)) * vol
            absol["source"] += 2.0 * wt[n] * float(np.sum(np.abs(y))) * vol
        if n == 0:
            terms["initial"] = float(np.sum(sq * ph)) * vol
            absol["initial"] = abs(terms["initial"])
    terms["boundary"] = boundary_terms
    absol["boundary"] = abs(boundary_terms)
    return terms, sum(absol.values())


def _sources(traj: Trajectory, F):
    if F is None:
        if all(x is None for x in traj.sources):
            return None
        return np.stack([np.zeros(traj.grid.cells) if x is None else np.asarray(x, dtype=float)
                         for x in traj.sources])
    if callable(F):
        return np.stack([np.asarray(F(t, round(t / traj.dt)), dtype=float)
                         for t in traj.times])
    return None


def _dissipative_cache(traj, phi, F, sigma_scale):
    v, s = _stack_fields(traj, sigma_scale)
    X = traj.grid.centers()
    phis = [phi(X, t) for t in traj.times]
    bnd = []
    for a, sgn, coords, _, _ in _boundary_points(traj.grid):
        bnd.append((a, sgn, np.array([float(np.sum(phi.value(coords, t))) for t in traj.times])))
    return v, s, _sources(traj, F), phis, bnd


def dissipative_terms(traj: Trajectory, kappa, phi: TestFunction, F=None,
                      sigma_scale: float = 1.0, _cache=None) -> dict:
    """Quadrature of every term of the dissipative inequality for one ``(kappa, phi)``.

    ``F`` is ``None`` (use the trajectory's velocity sources), ``0`` (no
    source) or a callable ``F(t, step) -> array`` for the velocity slot.
    The returned dict also holds ``scale``, the sum of the absolute integrands.
    """
    g = traj.grid
    kappa = _check_kappa(kappa, g.dim)
    if traj.bc_mode != "impedance":
        raise ValueError("the dissipative inequality is stated for the impedance condition")
    if _cache is None:
        _cache = _dissipative_cache(traj, phi, F, sigma_scale)
    v, s, f, phis, bnd = _cache
    wt = time_weights(traj.times)
    boundary = 0.0
    for a, sgn, phsum in bnd:
        nu = np.zeros(g.dim)
        nu[a] = sgn
        mk = boundary_quadratic(kappa, nu, traj.lam, +1)
        boundary += mk * float(np.dot(wt, phsum)) * g.face_area
    terms, scale = _quadrature(traj, v, s, f, phis, kappa, boundary)
    terms["scale"] = scale
    return terms


def margin(terms: dict) -> float:
    """Sum of the terms over ``terms['scale']`` (0 when everything vanishes)."""
    total = sum(v for k, v in terms.items() if k != "scale")
    return total / terms["scale"] if terms["scale"] > 0 else 0.0


def dissipative_verify(traj: Trajectory, kappa_samples=None, dictionary=None, F=None, *,
                       sigma_scale: float = 1.0, tol: ToleranceModel | None = None,
                       workers: int = 1) -> VerificationReport:
    """Minimum relative margin of the dissipative inequality over all pairs.

    For each ``(kappa, phi)`` the margin is the sum of the terms divided by
    the sum of the absolute integrands; the report's violation is ``-min``.
    ``sigma_scale`` multiplies the stress field (used to build forgeries).
    """
    g = traj.grid
    tol = tol or TOLERANCES["dissipative"]
    if kappa_samples is None:
        kappa_samples = default_kappa_grid(g.dim)
    kappa_samples = [_check_kappa(k, g.dim) for k in kappa_samples]
    if dictionary is None:
        dictionary = TestFunctionDictionary.default(g, traj.times[-1])

    def eval_phi(phi):
        cache = _dissipative_cache(traj, phi, F, sigma_scale)
        rows = []
        for kap in kappa_samples:
            terms = dissipative_terms(traj, kap, phi, F, sigma_scale, _cache=cache)
            rows.append((margin(terms), kap, phi.name))
        return rows

    members = list(dictionary)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = [r for rows in ex.map(eval_phi, members) for r in rows]
    else:
        results = [r for phi in members for r in eval_phi(phi)]
    worst = min(results, key=lambda r: r[0])
    return VerificationReport(
        "dissipative inequality", max(-worst[0], 0.0), tol(quadrature_dt(traj), g.h),
        location=dict(kappa=worst[1], phi=worst[2]),
        details=dict(min_margin=worst[0], pairs=len(results),
                     margins=[r[0] for r in results]),
    )


# ----------------------------------------------------------------------------
# pointwise structural checks

def flow_rule_check(traj: Trajectory, tol: float = 1e-10) -> VerificationReport:
    """Stress constraint and Hill's principle, per step, from the monitors."""
    mon = traj.monitors
    smax = float(mon["max_sigma"].max(initial=0.0))
    fr = float(mon["flow_residual"].max(initial=0.0))
    # eps = 0: the constraint is exact; eps > 0 only the flow-rule identity is checked
    over = max(smax - 1.0, 0.0) if traj.eps == 0 else 0.0
    worst = max(fr, over if over > 0 else 0.0)
    return VerificationReport("stress constraint and flow rule", worst, tol,
                              details=dict(max_sigma=smax, max_flow_residual=fr,
                                           active_steps=int(np.count_nonzero(mon["n_active"]))))


def boundary_relaxation_check(traj: Trajectory, tol: ToleranceModel | None = None,
                              band: float = 2e-2) -> tuple:
    """Saturation ``sigma.nu = -sign(v)`` where ``|v| > lam`` and the boundary Fenchel equality.

    Returns ``(saturation_report, fenchel_report)``.  The Fenchel residual
    ``psi(v) + lam/2 |sigma.nu|^2 + (sigma.nu) v`` is divided by
    ``max(psi(v) + lam/2|sigma.nu|^2)`` over the run.
    """
    if traj.bc_mode != "impedance" or traj.eps != 0:
        raise ValueError("relaxed boundary condition applies to eps = 0 impedance runs")
    tol = tol or TOLERANCES["fenchel"]
    g = traj.grid
    lam = traj.lam
    sat, sat_where, n_sat = 0.0, {}, 0
    fen, fen_where, scale = 0.0, {}, 0.0
    for st, t in zip(traj.states, traj.times):
        if t == 0:
            continue
        for a, sgn, coords, fsel, csel in _boundary_points(g):
            sn = sgn * st.sigma[a][fsel]
            vb = st.v[csel]
            hot = np.abs(vb) > lam
            if np.any(hot):
                n_sat += int(np.count_nonzero(hot))
                e = float(np.abs(sn + np.sign(vb))[hot].max())
                if e > sat:
                    sat, sat_where = e, dict(t=t, x=_first(coords, hot))
            pos = psi(lam, vb) + 0.5 * lam * sn * sn
            r = np.abs(pos + sn * vb)
            scale = max(scale, float(np.max(pos)))
            j = int(np.argmax(r))
            if r.flat[j] > fen:
                fen, fen_where = float(r.flat[j]), dict(t=t, x=_first(coords, None, j))
    rel = fen / scale if scale > 0 else 0.0
    return (
        VerificationReport("boundary saturation sigma.nu = -sign(v)", sat, band,
                           location=sat_where, details=dict(saturated_samples=n_sat)),
        VerificationReport("boundary Fenchel equality", rel, tol(traj.dt, g.h),
                           location=fen_where, details=dict(absolute=fen)),
    )


def _first(coords, mask=None, j=None):
    flat = [np.ravel(c) for c in coords]
    if j is None:
        j = int(np.argmax(np.ravel(mask)))
    return tuple(float(c[j]) for c in flat)


# ----------------------------------------------------------------------------
# translation regularity

def _shift_field(a: np.ndarray, s: int, axis: int, edge: bool = False) -> np.ndarray:
    """Move ``a`` by ``s`` cells; vacated cells get zero, or the edge value if ``edge``.

    Data that would leave the domain must be zero (constant if ``edge``).
    """
    if not s:
        return a.copy()
    n = a.shape[axis]
    if abs(s) >= n:
        raise ValueError("shift exceeds the domain")
    leaving = np.take(a, range(n - s - 1, n) if s > 0 else range(0, -s + 1), axis=axis)
    ref = np.take(leaving, [0], axis=axis) if edge else 0.0
    if np.any(leaving - ref):
        raise ValueError("shift moves non-zero data out of the domain")
    out = np.roll(a, s, axis=axis)
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(0, s) if s > 0 else slice(s, None)
    fill = np.take(a, [0 if s > 0 else n - 1], axis=axis) if edge else 0.0
    out[tuple(idx)] = fill
    return out


def shifted_scenario(scenario: Scenario, shift) -> Scenario:
    """Translate all data by an integer number of cells per axis."""
    g = scenario.grid
    shift = tuple(int(s) for s in np.broadcast_to(np.asarray(shift), (g.dim,)))

    def mv(a, edge=False):
        for ax, s in enumerate(shift):
            a = _shift_field(a, s, ax, edge)
        return a

    f = scenario.f
    if f is not None:
        base = f
        f = lambda t, n: (None if base(t, n) is None else mv(np.asarray(base(t, n), dtype=float)))
    return scenario.with_(u0=mv(scenario.u0, edge=True), v0=mv(scenario.v0),
                          sigma0=[mv(s) for s in scenario.sigma0],
                          p0=[mv(q) for q in scenario.p0], f=f,
                          name=f"{scenario.name}+{shift}")


class ProbeRow(NamedTuple):
    shift: float      # |s| in length units
    distance: float   # int_0^T* |U_s - U|^2
    r: float          # distance / |s|^2, nan for s = 0
    ratio: float      # r / r of the previous row


def translation_probe(scenario: Scenario, shifts, T_star: float | None = None, *,
                      threshold: float = 1e-12, backend: str | None = None) -> list:
    """Difference quotients ``r(s) = int_0^T* |U_s - U|^2 / |s|^2`` of the computed solution.

    ``shifts`` are lattice vectors in cells (scalars in 1D).  Returns one
    :class:`ProbeRow` per shift.
    """
    g = scenario.grid
    box = support_bbox(g, scenario.initial_state(), threshold)
    if box is None:
        raise ValueError("translation probe needs non-zero data")
    T = scenario.T if T_star is None else T_star
    shifts = [np.broadcast_to(np.asarray(s, dtype=int), (g.dim,)) for s in shifts]
    reach = max(float(np.linalg.norm(s)) for s in shifts) * g.h
    if T + reach + 2 * g.h >= box.distance_to_boundary(g):
        raise ValueError(f"T*={T:g} plus shift {reach:g} violates the cone-safety margin "
                         f"{box.distance_to_boundary(g):g}")
    base_sc = scenario.with_(T=T)
    base = integrate(base_sc, base_sc.eps, backend=backend)
    wt = time_weights(base.times)
    rows, prev = [], None
    for s in shifts:
        tr = integrate(shifted_scenario(base_sc, s), base_sc.eps, dt=base.dt, backend=backend)
        acc = 0.0
        for n in range(len(wt)):
            # the run from shifted data is the base solution evaluated at x - s
            a_st, b_st = tr.states[n], base.states[n]
            acc_n = float(np.sum((a_st.v - b_st.v) ** 2))
            for a in range(g.dim):
                acc_n += float(np.sum(_interior_faces(g, a, a_st.sigma[a] - b_st.sigma[a]) ** 2))
            acc += wt[n] * acc_n * g.volume
        hl = float(np.linalg.norm(s)) * g.h
        r = acc / hl**2 if hl > 0 else float("nan")
        rows.append(ProbeRow(hl, acc, r, r / prev if prev else float("nan")))
        prev = r if hl > 0 else None
    return rows


def _interior_faces(g, a, d):
    idx = [slice(None)] * g.dim
    idx[a] = slice(1, -1)
    return d[tuple(idx)]
