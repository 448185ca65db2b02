"""Configuration files and trajectory directories.

Config files are INI with sections ``[grid]``, ``[initial]``, ``[source]``
(optional), ``[params]``, ``[checks]`` and ``[output]``::

    [grid]
    cells = 400          ; "64, 64" for 2D
    length = 1.0

    [initial]
    profile = bump       ; bump, gaussian, checkerboard or zero
    amplitude = 2.0
    width = 0.15

    [params]
    lam = 0.5
    eps = 0.0
    T = 1.0

    [checks]
    run = energy, cone, flow_rule

A trajectory directory holds ``trajectory.json`` (grid, parameters, snapshot
steps and times), ``energy.csv`` (one row per step), ``snap_<step>.csv`` and,
when a source acts, ``source_<step>.csv``.

Snapshot rows run over the extended index ``0..n`` per axis (row-major, last
axis fastest).  Row ``i`` carries the centre coordinate and ``u, v`` of cell
``i`` and the stress and plastic strain of the low face of cell ``i``; slots
that do not exist (cell ``n``, or an ``x``-face with ``j = n``) are empty.
Values are written with ``repr`` so a round trip is bit-exact.
"""

from __future__ import annotations

import configparser
import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .grid import BC_MODES, Grid, PulseSource, Scenario, State, pulse_scenario
from .trajectory import EnergyLedger, Trajectory

__all__ = [
    "CHECKS",
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
    "read_ledger",
    "read_snapshot",
    "read_trajectory",
    "write_ledger",
    "write_snapshot",
    "write_trajectory",
]

CHECKS = ("energy", "cone", "flow_rule", "dissipative", "boundary")


class ConfigError(ValueError):
    """Malformed or out-of-range configuration value."""


@dataclass
class RunConfig:
    scenario: Scenario
    stride: int = 1
    out: str = "out"
    checks: list = field(default_factory=list)
    kappa_n: int = 8
    kappa_angles: int = 4

    def __post_init__(self):
        if self.stride < 1:
            raise ConfigError("output.stride must be >= 1")
        bad = [c for c in self.checks if c not in CHECKS]
        if bad:
            raise ConfigError(f"checks.run: unknown checks {bad}; choose from {CHECKS}")


def _get(cp, section, key, conv, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} ({exc})") from None


def _floats(raw: str):
    vals = [float(x) for x in raw.replace(",", " ").split()]
    return vals[0] if len(vals) == 1 else vals


def _ints(raw: str):
    vals = [int(x) for x in raw.replace(",", " ").split()]
    return vals[0] if len(vals) == 1 else tuple(vals)


def _words(raw: str) -> list:
    return [w for w in raw.replace(",", " ").split() if w]


def parse_config(text: str) -> RunConfig:
    """Build a :class:`RunConfig` from INI text."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    for sec in ("grid", "params"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing section [{sec}]")

    cells = _get(cp, "grid", "cells", _ints, None)
    if cells is None:
        raise ConfigError("grid.cells is required")
    if np.any(np.asarray(cells) < 3):
        raise ConfigError("grid.cells must be >= 3 along every axis")
    length = _get(cp, "grid", "length", float, 1.0)
    if not length > 0:
        raise ConfigError("grid.length must be positive")

    lam = _get(cp, "params", "lam", float, 1.0)
    eps = _get(cp, "params", "eps", float, 0.0)
    T = _get(cp, "params", "T", float, 1.0)
    cfl = _get(cp, "params", "cfl", float, 0.9)
    bc_mode = _get(cp, "params", "bc_mode", str, "impedance").strip()
    for name, val, ok in (("lam", lam, lam > 0), ("eps", eps, eps >= 0), ("T", T, T >= 0),
                          ("cfl", cfl, 0 < cfl <= 1)):
        if not ok:
            raise ConfigError(f"params.{name}: invalid value {val}")
    if bc_mode not in BC_MODES:
        raise ConfigError(f"params.bc_mode: must be one of {BC_MODES}, got {bc_mode!r}")

    init = {}
    if cp.has_section("initial"):
        init["profile"] = _get(cp, "initial", "profile", str, "zero").strip()
        for key in ("amplitude", "width", "stress_amplitude"):
            if cp.has_option("initial", key):
                init[key] = _get(cp, "initial", key, float, None)
        if cp.has_option("initial", "center"):
            init["center"] = _get(cp, "initial", "center", _floats, None)
        if cp.has_option("initial", "direction"):
            init["direction"] = cp.get("initial", "direction").strip()
        if cp.has_option("initial", "block"):
            init["block"] = _get(cp, "initial", "block", int, 1)
    else:
        init["profile"] = "zero"
    if init["profile"] not in ("bump", "gaussian", "checkerboard", "zero"):
        raise ConfigError(f"initial.profile: unknown profile {init['profile']!r}")
    if "width" in init and not init["width"] > 0:
        raise ConfigError("initial.width must be positive")

    try:
        sc = pulse_scenario(cells, length, lam=lam, eps=eps, T=T, cfl=cfl, bc_mode=bc_mode,
                            **init)
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from None

    if cp.has_section("source"):
        src = PulseSource(sc.grid,
                          _get(cp, "source", "amplitude", float, 1.0),
                          _get(cp, "source", "center", _floats, 0.5 * length),
                          _get(cp, "source", "width", float, 0.1),
                          _get(cp, "source", "t_on", float, 0.0),
                          _get(cp, "source", "t_off", float, 0.25))
        sc = sc.with_(f=src)

    checks = _words(cp.get("checks", "run", fallback=""))
    return RunConfig(
        sc,
        stride=_get(cp, "output", "stride", int, 1),
        out=cp.get("output", "out", fallback="out").strip(),
        checks=checks,
        kappa_n=_get(cp, "checks", "kappa_n", int, 8),
        kappa_angles=_get(cp, "checks", "kappa_angles", int, 4),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# ----------------------------------------------------------------------------
# snapshots

def _num(x: float) -> str:
    return repr(float(x))


def _columns(dim: int) -> list:
    ax = "xy"[:dim]
    return list(ax) + ["u", "v"] + [f"sigma_{a}" for a in ax] + [f"p_{a}" for a in ax]


def _extended(grid: Grid):
    return np.ndindex(*[n + 1 for n in grid.cells])


def _slot(arr, idx):
    return _num(arr[idx]) if all(i < n for i, n in zip(idx, arr.shape)) else ""


def write_snapshot(path, grid: Grid, state: State) -> None:
    """Write one state as CSV (see the module docstring for the layout)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_columns(grid.dim))
        for idx in _extended(grid):
            xs = [_num(grid.origin[a] + (idx[a] + 0.5) * grid.h) for a in range(grid.dim)]
            row = xs + [_slot(state.u, idx), _slot(state.v, idx)]
            row += [_slot(s, idx) for s in state.sigma]
            row += [_slot(q, idx) for q in state.p]
            w.writerow(row)


def read_snapshot(path, grid: Grid, t: float = 0.0) -> State:
    st = State.zeros(grid)
    st.t = t
    cols = _columns(grid.dim)
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        head = next(rd, None)
        if head != cols:
            raise ValueError(f"{path}: expected columns {cols}, got {head}")
        rows = list(rd)
    idxs = list(_extended(grid))
    if len(rows) != len(idxs):
        raise ValueError(f"{path}: expected {len(idxs)} rows, got {len(rows)}")
    d = grid.dim
    targets = [st.u, st.v] + list(st.sigma) + list(st.p)
    for idx, row in zip(idxs, rows):
        if len(row) != len(cols):
            raise ValueError(f"{path}: malformed row {row}")
        for arr, val in zip(targets, row[d:]):
            if all(i < n for i, n in zip(idx, arr.shape)):
                if val == "":
                    raise ValueError(f"{path}: missing value at {idx}")
                arr[idx] = float(val)
    return st


def _write_field(path, grid: Grid, name: str, a: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list("xy"[:grid.dim]) + [name])
        for idx in np.ndindex(*grid.cells):
            w.writerow([_num(grid.origin[k] + (idx[k] + 0.5) * grid.h) for k in range(grid.dim)]
                       + [_num(a[idx])])


def _read_field(path, grid: Grid) -> np.ndarray:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        next(rd)
        vals = [float(r[-1]) for r in rd]
    if len(vals) != int(np.prod(grid.cells)):
        raise ValueError(f"{path}: wrong number of rows")
    return np.asarray(vals).reshape(grid.cells)


# ----------------------------------------------------------------------------
# ledger

def write_ledger(path, ledger: EnergyLedger) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EnergyLedger.COLUMNS)
        for row in ledger.as_array():
            w.writerow([_num(x) for x in row])


def read_ledger(path) -> EnergyLedger:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        head = next(rd, None)
        if tuple(head or ()) != EnergyLedger.COLUMNS:
            raise ValueError(f"{path}: unexpected ledger header {head}")
        rows = [[float(x) for x in r] for r in rd]
    return EnergyLedger.from_array(rows if rows else np.zeros((0, len(EnergyLedger.COLUMNS))))


# ----------------------------------------------------------------------------
# trajectories

def write_trajectory(directory, traj: Trajectory) -> None:
    """Write ``trajectory.json``, ``energy.csv`` and one CSV per snapshot."""
    os.makedirs(directory, exist_ok=True)
    g = traj.grid
    steps = [int(round(t / traj.dt)) for t in traj.times]
    meta = dict(cells=list(g.cells), h=g.h, origin=list(g.origin), dt=traj.dt, lam=traj.lam,
                eps=traj.eps, bc_mode=traj.bc_mode, stride=traj.stride, steps=steps,
                times=[float(t) for t in traj.times],
                sources=[f is not None for f in traj.sources],
                meta={k: v for k, v in traj.meta.items() if isinstance(v, (str, int, float))})
    with open(os.path.join(directory, "trajectory.json"), "w") as fh:
        json.dump(meta, fh, indent=1)
    write_ledger(os.path.join(directory, "energy.csv"), traj.ledger)
    for k, st, f in zip(steps, traj.states, traj.sources):
        write_snapshot(os.path.join(directory, f"snap_{k}.csv"), g, st)
        if f is not None:
            _write_field(os.path.join(directory, f"source_{k}.csv"), g, "f", np.asarray(f))


def read_trajectory(directory) -> Trajectory:
    """Inverse of :func:`write_trajectory`; raises ``ValueError`` on missing files."""
    path = os.path.join(directory, "trajectory.json")
    if not os.path.isfile(path):
        raise ValueError(f"{directory}: no trajectory.json")
    try:
        with open(path) as fh:
            meta = json.load(fh)
        g = Grid(tuple(meta["cells"]), float(meta["h"]), tuple(meta["origin"]))
        steps, times = meta["steps"], meta["times"]
        has_src = meta.get("sources", [False] * len(steps))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: malformed metadata ({exc})") from None
    if not steps or len(steps) != len(times) or len(has_src) != len(steps):
        raise ValueError(f"{path}: inconsistent snapshot lists")
    traj = Trajectory(g, float(meta["dt"]), float(meta["lam"]), float(meta["eps"]),
                      meta["bc_mode"], stride=int(meta.get("stride", 1)),
                      meta=meta.get("meta", {}))
    for k, t, src in zip(steps, times, has_src):
        snap = os.path.join(directory, f"snap_{k}.csv")
        if not os.path.isfile(snap):
            raise ValueError(f"{directory}: missing {os.path.basename(snap)}")
        traj.states.append(read_snapshot(snap, g, t))
        traj.times.append(float(t))
        traj.sources.append(_read_field(os.path.join(directory, f"source_{k}.csv"), g)
                            if src else None)
    led = os.path.join(directory, "energy.csv")
    if os.path.isfile(led):
        traj.ledger = read_ledger(led)
    return traj
