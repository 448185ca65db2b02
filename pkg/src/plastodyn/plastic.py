"""Perfectly plastic solver, vanishing-viscosity driver and impedance limits.

The ``eps = 0`` step replaces the Perzyna resolvent by the exact radial
return onto the unit ball.  At the boundary the relaxed condition
``sigma.nu = -psi_lam'(v)`` is solved implicitly for the boundary velocity
(a closed-form proximal step), so the scheme stays stable for very small
or very large ``lam``.  The hard modes are

* ``dirichlet``: ``v = 0`` with a reaction bounded by the yield stress,
  ``sigma.nu in -sign(v)``, i.e. the ``lam -> 0`` limit of the relaxed
  condition;
* ``neumann``: ``sigma.nu = 0``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .driver import NumericalError, check_dt, integrate, stable_dt
from .grid import BC_MODES, Grid, Scenario, State
from .trajectory import Trajectory

__all__ = [
    "ConvergenceTable",
    "run_limit_study",
    "run_plastic",
    "run_vanishing_viscosity",
    "step_plastic",
]


def step_plastic(grid: Grid, state: State, dt: float, lam: float,
                 bc_mode: str = "impedance", f=None, *, cfl: float = 1.0,
                 backend: str | None = None, out: np.ndarray | None = None) -> State:
    """Return the state one ``eps = 0`` step later; ``state`` is left untouched."""
    if bc_mode not in BC_MODES:
        raise ValueError(f"bc_mode must be one of {BC_MODES}, got {bc_mode!r}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    check_dt(grid, dt, 0.0, cfl)
    state.validate(grid)
    new = state.copy()
    buf = np.zeros(kernels.N_OUT) if out is None else out
    ff = None if f is None else np.ascontiguousarray(f, dtype=float)
    kernels.step(new.u, new.v, new.sigma, new.p, ff, None, dt, grid.h, 0.0, lam,
                 kernels.BC_CODES[bc_mode], buf, backend=backend)
    if not np.all(np.isfinite(buf)):
        raise NumericalError("non-finite values in plastic step")
    new.t = state.t + dt
    return new


def run_plastic(scenario: Scenario, *, dt: float | None = None, stride: int = 1,
                backend: str | None = None) -> Trajectory:
    """Integrate the perfectly plastic model from 0 to ``T``."""
    if scenario.eps != 0:
        raise ValueError("run_plastic needs eps = 0; use run_viscoplastic for eps > 0")
    return integrate(scenario, 0.0, dt=dt, stride=stride, backend=backend)


# ----------------------------------------------------------------------------
# sweeps

@dataclass
class ConvergenceTable:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    def __len__(self) -> int:
        return len(self.rows)

    def __str__(self) -> str:
        head = "  ".join(f"{c:>14s}" for c in self.columns)
        body = ["  ".join(f"{x:14.6e}" for x in r) for r in self.rows]
        return "\n".join([head] + body)


def _threads(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("PLASTODYN_THREADS")
    return max(1, int(env)) if env else 1


def _map(fn, items, workers):
    n = _threads(workers)
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _l2(grid: Grid, a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(a * a) * grid.volume))


def _interior(grid, axis, s):
    idx = [slice(None)] * s.ndim
    idx[axis] = slice(1, -1)
    return s[tuple(idx)]


def state_distances(grid: Grid, t1: Trajectory, t2: Trajectory) -> tuple:
    """Per-snapshot L2 distances of velocity and interior stress."""
    if len(t1.states) != len(t2.states):
        raise ValueError("trajectories have different snapshot counts")
    dv, ds = [], []
    for a, b in zip(t1.states, t2.states):
        dv.append(_l2(grid, a.v - b.v))
        ds.append(np.sqrt(sum(_l2(grid, _interior(grid, k, a.sigma[k] - b.sigma[k])) ** 2
                              for k in range(grid.dim))))
    return np.array(dv), np.array(ds)


def trapezoid(y, t) -> float:
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t))) if len(t) > 1 else 0.0


def _auto_stride(n_steps: int, samples: int = 200) -> int:
    return max(1, n_steps // samples)


def run_vanishing_viscosity(scenario: Scenario, eps_sequence, *, dt: float | None = None,
                            stride: int | None = None, backend: str | None = None,
                            workers: int | None = None) -> ConvergenceTable:
    """Compare ``eps``-runs with the ``eps = 0`` scheme at a common time step.

    The common step is the stable step of the largest ``eps``.  Columns:
    ``eps``, ``sup_t |v_eps - v_0|``, ``sup_t |sigma_eps - sigma_0|``,
    ``|sqrt(eps) grad v_eps|_{L2(0,T;L2)}`` and ``sup_t |dv/dt|``.
    """
    eps_sequence = [float(e) for e in eps_sequence]
    if not eps_sequence:
        raise ValueError("eps_sequence is empty")
    if any(e < 1e-4 for e in eps_sequence):
        raise ValueError("eps values must be >= 1e-4")
    if any(b >= a for a, b in zip(eps_sequence, eps_sequence[1:])):
        raise ValueError("eps_sequence must be strictly decreasing")
    if scenario.bc_mode != "impedance":
        raise ValueError("vanishing viscosity is studied with the impedance condition")
    grid = scenario.grid
    if dt is None:
        dt_lim = stable_dt(grid, eps_sequence[0], scenario.cfl)
        n = max(1, int(np.ceil(scenario.T / dt_lim - 1e-12)))
        dt = scenario.T / n
    n = int(round(scenario.T / dt))
    stride = stride or _auto_stride(n)

    def run(eps):
        return integrate(scenario.with_(eps=eps), eps, dt=dt, stride=stride, backend=backend)

    trajs = _map(run, [0.0] + eps_sequence, workers)
    ref = trajs[0]
    table = ConvergenceTable(["eps", "dev_v", "dev_sigma", "sqrt_eps_grad_v", "sup_dv_dt"],
                             meta=dict(dt=dt, stride=stride))
    for eps, tr in zip(eps_sequence, trajs[1:]):
        dv, ds = state_distances(grid, tr, ref)
        table.rows.append([eps, dv.max(), ds.max(),
                           float(np.sqrt(tr.monitors["viscous_grad_cum"][-1])),
                           float(tr.monitors["dv_rate"].max())])
    return table


def check_hard_compatible(scenario: Scenario, tol: float = 1e-12) -> None:
    """Raise unless ``v0 = 0`` and ``sigma0.nu = 0`` on the boundary."""
    g = scenario.grid
    worst = 0.0
    for a in range(g.dim):
        for side in (0, 1):
            worst = max(worst, float(np.abs(scenario.v0[g.cell_slice(a, side)]).max()),
                        float(np.abs(scenario.sigma0[a][g.boundary_slice(a, side)]).max()))
    if worst > tol:
        raise ValueError(f"limit study needs v0 = sigma0.nu = 0 on the boundary "
                         f"(worst boundary value {worst:.3e})")


def boundary_normal_stress(grid: Grid, state: State) -> list:
    """``(sigma.nu, v_b)`` pairs for each boundary side, as flat arrays."""
    out = []
    for a in range(grid.dim):
        for side, sgn in ((0, -1.0), (1, 1.0)):
            sn = sgn * np.ravel(state.sigma[a][grid.boundary_slice(a, side)])
            vb = np.ravel(state.v[grid.cell_slice(a, side)])
            out.append((sn, vb))
    return out


def run_limit_study(scenario: Scenario, lambda_sequence, mode: str, *,
                    stride: int | None = None, backend: str | None = None,
                    workers: int | None = None) -> ConvergenceTable:
    """Distance between impedance runs and the hard ``mode`` reference.

    Columns: ``lambda``, ``gap`` (sup over time of the L2 distance of
    ``(v, sigma)``), ``bnd_sigma_nu`` (L2 norm of ``sigma.nu`` over the
    boundary and ``[0, T]``) and ``bnd_flow_rule`` (max of
    ``| |v| + (sigma.nu) v |`` on the boundary).
    """
    if mode not in ("dirichlet", "neumann"):
        raise ValueError("mode must be 'dirichlet' or 'neumann'")
    lams = [float(x) for x in lambda_sequence]
    if not lams:
        raise ValueError("lambda_sequence is empty")
    if any(x <= 0 for x in lams):
        raise ValueError("lambda values must be positive")
    if scenario.eps != 0:
        raise ValueError("limit study runs the eps = 0 model")
    check_hard_compatible(scenario)
    grid = scenario.grid
    n = max(1, int(np.ceil(scenario.T / stable_dt(grid, 0.0, scenario.cfl) - 1e-12)))
    dt = scenario.T / n
    stride = stride or _auto_stride(n)

    def run(item):
        bc, lam = item
        return integrate(scenario.with_(bc_mode=bc, lam=lam), 0.0, dt=dt, stride=stride,
                         backend=backend)

    trajs = _map(run, [(mode, 1.0)] + [("impedance", x) for x in lams], workers)
    ref = trajs[0]
    table = ConvergenceTable(["lambda", "gap", "bnd_sigma_nu", "bnd_flow_rule"],
                             meta=dict(mode=mode, dt=dt, stride=stride))
    for lam, tr in zip(lams, trajs[1:]):
        dv, ds = state_distances(grid, tr, ref)
        gap = float(np.sqrt(dv**2 + ds**2).max())
        sq, fr = [], 0.0
        for st in tr.states:
            pairs = boundary_normal_stress(grid, st)
            sq.append(sum(float(np.sum(sn * sn)) for sn, _ in pairs) * grid.face_area)
            fr = max([fr] + [float(np.abs(np.abs(vb) + sn * vb).max()) for sn, vb in pairs])
        table.rows.append([lam, gap, float(np.sqrt(trapezoid(sq, tr.times))), fr])
    return table
