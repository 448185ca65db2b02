"""Measure the discretisation error of each integral check on elastic runs.

For every check the script reports ``violation / (dt + h)``; the frozen
constants in ``plastodyn.diagnostics.TOLERANCES`` are the largest measured
ratio times a safety factor.  Run with ``python3 benchmarks/calibrate_tolerances.py``.
"""

from __future__ import annotations

import argparse
import time

from plastodyn.diagnostics import (TestFunctionDictionary, boundary_relaxation_check,
                                   dissipative_verify, energy_audit, kato_check)
from plastodyn.driver import integrate
from plastodyn.grid import PulseSource, bump, pulse_scenario


def cases(N):
    """Elastic-regime scenarios: peak stress stays well below yield."""
    yield "standing lam=1", pulse_scenario(N, amplitude=0.3, width=0.2, lam=1.0)
    yield "standing lam=0.5", pulse_scenario(N, amplitude=0.3, width=0.2, lam=0.5)
    yield "right lam=2", pulse_scenario(N, amplitude=0.3, width=0.15, center=0.4,
                                        direction="right", lam=2.0)
    yield "dirichlet", pulse_scenario(N, amplitude=0.3, width=0.2, bc_mode="dirichlet")
    yield "neumann", pulse_scenario(N, amplitude=0.3, width=0.2, bc_mode="neumann")
    yield "eps=0.01", pulse_scenario(N, amplitude=0.3, width=0.2, eps=0.01)
    sc = pulse_scenario(N, profile="zero", lam=1.0)
    yield "source", sc.with_(f=PulseSource(sc.grid, 2.0, 0.5, 0.15, 0.0, 0.3))


def measure(sc, eps):
    tr = integrate(sc, eps)
    dh = tr.dt + sc.grid.h
    out = {}
    _, rep = energy_audit(tr)
    out["energy"] = rep.worst_violation / dh
    pert = sc.with_(v0=sc.v0 + bump(sc.grid, 0.45, 0.1, 0.02))
    tr2 = integrate(pert, eps)
    out["kato"] = max(kato_check(tr, tr2, phi).details["relative"]
                      for phi in TestFunctionDictionary.default(sc.grid, sc.T)) / dh
    if eps == 0 and sc.bc_mode == "impedance":
        out["dissipative"] = dissipative_verify(tr).worst_violation / dh
        out["fenchel"] = boundary_relaxation_check(tr)[1].worst_violation / dh
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--safety", type=float, default=4.0)
    args = ap.parse_args(argv)
    worst = {}
    for N in args.cells:
        for name, sc in cases(N):
            t0 = time.perf_counter()
            res = measure(sc, sc.eps)
            cols = "  ".join(f"{k}={v:9.3e}" for k, v in res.items())
            print(f"N={N:4d} {name:18s} {cols}  ({time.perf_counter() - t0:.1f}s)")
            for k, v in res.items():
                worst[k] = max(worst.get(k, 0.0), v)
    print("\nworst violation / (dt + h) and suggested constant:")
    for k, v in worst.items():
        print(f"  {k:12s} {v:10.3e}  ->  {args.safety * v:.3g}")


if __name__ == "__main__":
    main()
