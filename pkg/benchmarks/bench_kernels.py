"""Time the compiled and the numpy step kernels on the same problems.

Usage: ``python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]``.
Each case integrates a strong plastic pulse (so the return map is active)
and reports the best wall time per step for each backend, the speed-up and
the largest difference between the two final states.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from plastodyn import kernels
from plastodyn.driver import boundary_source, stable_dt
from plastodyn.grid import pulse_scenario

CASES = [
    ("1D n=400 eps=0", dict(cells=400, amplitude=2.0, width=0.15), 0.0),
    ("1D n=4000 eps=0", dict(cells=4000, amplitude=2.0, width=0.15), 0.0),
    ("1D n=4000 eps=1e-3", dict(cells=4000, amplitude=2.0, width=0.15), 1e-3),
    ("2D 128x128 eps=0", dict(cells=(128, 128), amplitude=2.0, width=0.2), 0.0),
    ("2D 128x128 eps=1e-3", dict(cells=(128, 128), amplitude=2.0, width=0.2), 1e-3),
]


def run(sc, eps, steps, backend):
    st = sc.initial_state()
    g = sc.grid
    dt = stable_dt(g, eps, sc.cfl)
    gb = boundary_source(g, sc.v0, eps)
    out = np.zeros(kernels.N_OUT)
    bc = kernels.BC_CODES[sc.bc_mode]
    t0 = time.perf_counter()
    for _ in range(steps):
        kernels.step(st.u, st.v, st.sigma, st.p, None, gb, dt, g.h, eps, sc.lam, bc, out,
                     backend=backend)
    return (time.perf_counter() - t0) / steps, st


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND})")
    print(f"{'case':22s} {'python us/step':>15s} {'cython us/step':>15s} {'speed-up':>9s} "
          f"{'max diff':>10s}")
    for name, kw, eps in CASES:
        sc = pulse_scenario(**kw, lam=0.5, eps=eps)
        best, final = {}, {}
        for b in backends:
            times = []
            for _ in range(args.repeat):
                t, st = run(sc, eps, args.steps, b)
                times.append(t)
            best[b], final[b] = min(times), st
        if "cython" in best:
            a, c = final["python"], final["cython"]
            diff = max([float(np.abs(a.v - c.v).max())]
                       + [float(np.abs(x - y).max()) for x, y in zip(a.sigma, c.sigma)])
            print(f"{name:22s} {1e6 * best['python']:15.1f} {1e6 * best['cython']:15.1f} "
                  f"{best['python'] / best['cython']:9.2f} {diff:10.2e}")
        else:
            print(f"{name:22s} {1e6 * best['python']:15.1f} {'n/a':>15s}")


if __name__ == "__main__":
    main()
