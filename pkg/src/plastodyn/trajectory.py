"""Trajectory container and the energy ledger."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, State

__all__ = ["EnergyLedger", "Trajectory"]


@dataclass
class EnergyLedger:
    """Per-step energy bookkeeping.

    Every cumulative column integrates a non-negative rate except
    ``work_cum``.  The residual is

        kinetic + elastic + plastic_cum + viscous_cum + boundary_flux_cum
        + boundary_psi_cum - (initial energy + work_cum)

    and vanishes for the exact solution.
    """

    COLUMNS = ("t", "kinetic", "elastic", "plastic_cum", "viscous_cum",
               "boundary_flux_cum", "boundary_psi_cum", "work_cum", "residual")

    t: list = field(default_factory=list)
    kinetic: list = field(default_factory=list)
    elastic: list = field(default_factory=list)
    plastic_cum: list = field(default_factory=list)
    viscous_cum: list = field(default_factory=list)
    boundary_flux_cum: list = field(default_factory=list)
    boundary_psi_cum: list = field(default_factory=list)
    work_cum: list = field(default_factory=list)
    residual: list = field(default_factory=list)

    def append(self, t, kinetic, elastic, plastic, viscous, bflux, bpsi, work):
        e0 = self.kinetic[0] + self.elastic[0] if self.t else kinetic + elastic
        res = kinetic + elastic + plastic + viscous + bflux + bpsi - (e0 + work)
        for name, val in zip(self.COLUMNS, (t, kinetic, elastic, plastic, viscous,
                                             bflux, bpsi, work, res)):
            getattr(self, name).append(float(val))

    def __len__(self) -> int:
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        if name not in self.COLUMNS:
            raise KeyError(name)
        return np.asarray(getattr(self, name))

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.column(c) for c in self.COLUMNS]) if self.t else \
            np.zeros((0, len(self.COLUMNS)))

    @classmethod
    def from_array(cls, arr) -> "EnergyLedger":
        arr = np.atleast_2d(np.asarray(arr, dtype=float))
        led = cls()
        for k, name in enumerate(cls.COLUMNS):
            setattr(led, name, arr[:, k].tolist() if arr.size else [])
        return led

    @property
    def initial_energy(self) -> float:
        return self.kinetic[0] + self.elastic[0] if self.t else 0.0


@dataclass
class Trajectory:
    """Recorded run: snapshots every ``stride`` steps plus a per-step ledger.

    ``sources[k]`` is the source applied during the step that *starts* at
    ``times[k]`` (``None`` for zero).  ``monitors`` holds per-step arrays
    (``max_sigma``, ``flow_residual``, ``n_active``, ``dv_rate``,
    ``viscous_grad_cum``).
    """

    grid: Grid
    dt: float
    lam: float
    eps: float
    bc_mode: str
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    sources: list = field(default_factory=list)
    ledger: EnergyLedger = field(default_factory=EnergyLedger)
    monitors: dict = field(default_factory=dict)
    stride: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> State:
        return self.states[-1]

    @property
    def n_steps(self) -> int:
        return len(self.ledger) - 1

    def velocities(self) -> np.ndarray:
        return np.stack([s.v for s in self.states])

    def stress(self, axis: int = 0) -> np.ndarray:
        return np.stack([s.sigma[axis] for s in self.states])

    def uniform_spacing(self) -> bool:
        t = np.asarray(self.times)
        return len(t) < 3 or np.allclose(np.diff(t), t[1] - t[0], rtol=1e-9, atol=0)
