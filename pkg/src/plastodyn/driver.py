"""Shared time loop for the visco-plastic and perfectly plastic solvers."""

from __future__ import annotations

import logging
import math

import numpy as np

from . import kernels
from .grid import Grid, Scenario, check_compatibility, energies
from .trajectory import Trajectory

__all__ = [
    "CFLError",
    "CompatibilityError",
    "NumericalError",
    "boundary_source",
    "integrate",
    "stable_dt",
]

log = logging.getLogger(__name__)


class CFLError(ValueError):
    """Time step above the stability limit of the explicit scheme."""


class NumericalError(RuntimeError):
    """Non-finite values appeared during time stepping."""


class CompatibilityError(ValueError):
    """Initial data violate the compatibility conditions."""


def stable_dt(grid: Grid, eps: float = 0.0, cfl: float = 1.0) -> float:
    """Largest stable step times ``cfl``.

    Von Neumann analysis of the staggered update with explicit viscosity
    gives ``dt <= sqrt(eps^2 + h^2/n) - eps``; this is below both ``h/sqrt(n)``
    and ``h^2/(2 n eps)``.
    """
    h2n = grid.h**2 / grid.dim
    if eps > 0:
        # rationalised form avoids cancellation when eps >> h
        lim = h2n / (math.sqrt(eps * eps + h2n) + eps)
    else:
        lim = math.sqrt(h2n)
    return cfl * lim


def check_dt(grid: Grid, dt: float, eps: float, cfl: float = 1.0) -> None:
    if not dt > 0:
        raise CFLError(f"time step must be positive, got {dt}")
    lim = stable_dt(grid, eps, cfl)
    if dt > lim * (1.0 + 1e-12):
        raise CFLError(f"dt={dt:.6g} exceeds the stability limit {lim:.6g} "
                       f"(h={grid.h:.6g}, eps={eps:g}, cfl={cfl:g})")


def boundary_source(grid: Grid, v0: np.ndarray, eps: float):
    """``eps * grad(v0).nu`` on boundary faces, one-sided differences.

    Returns, per axis, the ``(low, high)`` arrays, or ``None`` when
    ``eps = 0`` or the result is identically zero.
    """
    if eps <= 0:
        return None
    g = []
    nonzero = False
    for a in range(grid.dim):
        d0 = np.take(v0, 1, axis=a) - np.take(v0, 0, axis=a)
        d1 = np.take(v0, -1, axis=a) - np.take(v0, -2, axis=a)
        lo = -eps * d0 / grid.h
        hi = eps * d1 / grid.h
        nonzero |= bool(np.any(lo) or np.any(hi))
        g.append((np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)))
    return g if nonzero else None


def n_steps_for(T: float, dt_max: float) -> int:
    return max(1, math.ceil(T / dt_max - 1e-12)) if T > 0 else 0


def integrate(scenario: Scenario, eps: float, *, dt: float | None = None,
              stride: int = 1, backend: str | None = None,
              check: bool = True) -> Trajectory:
    """Run ``scenario`` to ``T`` with viscosity ``eps``.

    Without an explicit ``dt`` the step is ``T / ceil(T / stable_dt)``.
    Snapshots are kept at every ``stride``-th step and at ``T``.
    """
    grid = scenario.grid
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if eps > 0 and scenario.bc_mode != "impedance":
        raise ValueError("the visco-plastic model only has the impedance condition")
    if check:
        rep = check_compatibility(scenario)
        if not rep.ok:
            raise CompatibilityError("incompatible initial data: " + ", ".join(rep.failures()))
    if dt is None:
        n = n_steps_for(scenario.T, stable_dt(grid, eps, scenario.cfl))
        dt = scenario.T / n if n else stable_dt(grid, eps, scenario.cfl)
    else:
        n = int(round(scenario.T / dt))
        if abs(n * dt - scenario.T) > 1e-9 * max(1.0, scenario.T):
            raise ValueError(f"T={scenario.T} is not a multiple of dt={dt}")
    check_dt(grid, dt, eps, scenario.cfl)

    bc = kernels.BC_CODES[scenario.bc_mode]
    g = boundary_source(grid, scenario.v0, eps)
    st = scenario.initial_state()
    traj = Trajectory(grid, dt, scenario.lam, eps, scenario.bc_mode, stride=stride,
                      meta=dict(scenario=scenario.name, backend=backend or kernels.BACKEND))
    out = np.zeros(kernels.N_OUT)
    mon = {k: np.zeros(n) for k in
           ("max_sigma", "flow_residual", "n_active", "dv_rate", "viscous_grad_cum")}

    traj.ledger.append(0.0, *energies(grid, st), 0, 0, 0, 0, 0)
    cum = np.zeros(6)  # plastic, viscous, bflux, bpsi, work, viscous-grad

    def snapshot(state, step):
        traj.states.append(state.copy())
        traj.times.append(state.t)
        traj.sources.append(scenario.source(state.t, step))

    snapshot(st, 0)
    for k in range(n):
        t = k * dt
        f = scenario.source(t, k)
        if f is not None:
            f = np.ascontiguousarray(f, dtype=float)
        kernels.step(st.u, st.v, st.sigma, st.p, f, g, dt, grid.h, eps,
                     scenario.lam, bc, out, backend=backend)
        st.t = (k + 1) * dt
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"non-finite values at step {k + 1} (t={st.t:.6g})")
        cum[0] += dt * out[0]
        cum[1] += dt * (out[1] + out[10])
        cum[2] += dt * out[2]
        cum[3] += dt * out[3]
        cum[4] += dt * out[4]
        cum[5] += dt * out[1]
        traj.ledger.append(st.t, out[8], out[9], *cum[:5])
        mon["max_sigma"][k] = out[6]
        mon["flow_residual"][k] = out[5]
        mon["n_active"][k] = out[7]
        mon["dv_rate"][k] = math.sqrt(out[11]) / dt
        mon["viscous_grad_cum"][k] = cum[5]
        if (k + 1) % stride == 0 or k + 1 == n:
            snapshot(st, k + 1)
    traj.monitors = mon
    log.debug("integrated %s: %d steps, dt=%.3g", scenario.name, n, dt)
    return traj
