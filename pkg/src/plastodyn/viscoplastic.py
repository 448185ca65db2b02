"""Elasto-visco-plastic solver (Kelvin-Voigt viscosity, Perzyna flow rule).

One step is the splitting

1. elastic predictor ``sigma* = sigma^n + dt grad v^n`` and
   ``u^{n+1} = u^n + dt v^n``,
2. Perzyna resolvent ``sigma^{n+1} = R_{dt/eps}(sigma*)`` at every face pair,
3. ``v^{n+1} = v^n + dt (div(sigma^{n+1} + eps grad v^n) + f)``,
4. at boundary cells the normal flux ``g - v^{n+1}/lam`` is imposed
   implicitly, which keeps the step stable for any ``lam``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .driver import NumericalError, boundary_source, check_dt, integrate
from .grid import Grid, Scenario, State
from .trajectory import Trajectory

__all__ = ["StepParams", "run_viscoplastic", "step_viscoplastic"]


@dataclass(frozen=True)
class StepParams:
    dt: float
    eps: float
    lam: float
    g_eps: list | None = None
    cfl: float = 1.0

    def validate(self, grid: Grid) -> None:
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        check_dt(grid, self.dt, self.eps, self.cfl)

    @classmethod
    def from_initial(cls, grid: Grid, v0, dt: float, eps: float, lam: float, cfl: float = 1.0):
        """Parameters with ``g_eps = eps grad(v0).nu`` taken from the initial velocity."""
        return cls(dt, eps, lam, boundary_source(grid, np.asarray(v0, dtype=float), eps), cfl)


def step_viscoplastic(grid: Grid, state: State, params: StepParams, f=None, *,
                      backend: str | None = None, out: np.ndarray | None = None) -> State:
    """Return the state one step later; ``state`` is left untouched.

    When ``out`` is given it receives the per-step diagnostics described
    in :mod:`plastodyn._pykernels`.
    """
    params.validate(grid)
    state.validate(grid)
    new = state.copy()
    buf = np.zeros(kernels.N_OUT) if out is None else out
    ff = None if f is None else np.ascontiguousarray(f, dtype=float)
    kernels.step(new.u, new.v, new.sigma, new.p, ff, params.g_eps, params.dt, grid.h,
                 params.eps, params.lam, kernels.IMPEDANCE, buf, backend=backend)
    if not np.all(np.isfinite(buf)):
        raise NumericalError("non-finite values in visco-plastic step")
    new.t = state.t + params.dt
    return new


def run_viscoplastic(scenario: Scenario, *, dt: float | None = None, stride: int = 1,
                     backend: str | None = None) -> Trajectory:
    """Integrate an ``eps > 0`` scenario from 0 to ``T``."""
    if not scenario.eps > 0:
        raise ValueError("run_viscoplastic needs eps > 0; use run_plastic for eps = 0")
    return integrate(scenario, scenario.eps, dt=dt, stride=stride, backend=backend)
