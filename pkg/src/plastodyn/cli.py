"""Command-line front end.

Subcommands::

    plastodyn run --config run.ini [--out DIR] [--stride N]
    plastodyn sweep --config run.ini --axis eps --values 0.1,0.03,0.01
    plastodyn sweep --config run.ini --axis lambda --values 1e-1,1e-2 --mode dirichlet
    plastodyn verify-bc matrix.txt --nu 1,0 [--lam 1]
    plastodyn check-dissipative DIR [--source recorded|zero]

Exit codes: 0 pass, 1 a check failed, 2 input error, 3 numerical abort.
``PLASTODYN_THREADS`` caps the number of concurrent runs in a sweep.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from .algebra import build_m, check_admissible, normalize_direction
from .diagnostics import (TOLERANCES, boundary_relaxation_check, cone_check,
                          default_kappa_grid, dissipative_verify, energy_audit,
                          flow_rule_check)
from .driver import CFLError, CompatibilityError, NumericalError, integrate
from .files import ConfigError, load_config, read_trajectory, write_trajectory
from .plastic import run_limit_study, run_vanishing_viscosity

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

class InputError(Exception):
    pass


def _values(raw: str | None) -> list:
    if raw is None:
        raise InputError("--values is required")
    try:
        vals = [float(x) for x in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise InputError(f"--values: {exc}") from None
    if not vals:
        raise InputError("--values is empty")
    return vals


def _config(args):
    if not args.config:
        raise InputError("--config is required")
    cfg = load_config(args.config)
    if args.out:
        cfg.out = args.out
    if args.stride is not None:
        if args.stride < 1:
            raise InputError("--stride must be >= 1")
        cfg.stride = args.stride
    return cfg


def _tolerance_note() -> str:
    lines = ["tolerance model tol(dt, h) = c_dt dt + c_h h:"]
    lines += [f"  {k}: c_dt={m.c_dt:g} c_h={m.c_h:g}" for k, m in TOLERANCES.items()]
    return "\n".join(lines)


def run_checks(cfg, traj) -> list:
    reports = []
    for name in cfg.checks:
        if name == "energy":
            reports.append(energy_audit(traj)[1])
        elif name == "cone":
            reports.append(cone_check(traj))
        elif name == "flow_rule":
            reports.append(flow_rule_check(traj))
        elif name == "dissipative":
            kap = default_kappa_grid(traj.grid.dim, n_k=cfg.kappa_n, n_angles=cfg.kappa_angles)
            reports.append(dissipative_verify(traj, kap))
        elif name == "boundary":
            reports.extend(boundary_relaxation_check(traj))
    return reports


def cmd_run(args) -> int:
    cfg = _config(args)
    sc = cfg.scenario
    traj = integrate(sc, sc.eps, stride=cfg.stride)
    write_trajectory(cfg.out, traj)
    reports = run_checks(cfg, traj)
    text = "\n".join([f"scenario {sc.name}: {traj.n_steps} steps, dt={traj.dt:.6g}, "
                      f"h={sc.grid.h:.6g}"] + [str(r) for r in reports] + [_tolerance_note()])
    with open(os.path.join(cfg.out, "report.txt"), "w") as fh:
        fh.write(text + "\n")
    print(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = _config(args)
    vals = _values(args.values)
    sc = cfg.scenario
    stride = args.stride
    if args.axis == "eps":
        table = run_vanishing_viscosity(sc.with_(eps=0.0), vals, stride=stride)
    else:
        if args.mode not in ("dirichlet", "neumann"):
            raise InputError("--axis lambda needs --mode dirichlet or neumann")
        table = run_limit_study(sc.with_(eps=0.0), vals, args.mode, stride=stride)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, f"sweep_{args.axis}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([repr(float(x)) for x in row])
    print(table)
    return EXIT_OK


def _read_matrix(path) -> np.ndarray:
    try:
        with open(path) as fh:
            rows = [line.split() for line in fh if line.strip()]
        m = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3):
        raise InputError(f"{path}: expected a square 2x2 or 3x3 matrix")
    return m


def cmd_verify_bc(args) -> int:
    m = _read_matrix(args.matrix)
    raw = args.nu if args.nu is not None else ",".join(["1"] + ["0"] * (m.shape[0] - 2))
    try:
        nu = normalize_direction(_values(raw))
    except ValueError as exc:
        raise InputError(f"--nu: {exc}") from None
    if nu.size + 1 != m.shape[0]:
        raise InputError(f"--nu has {nu.size} components, matrix needs {m.shape[0] - 1}")
    res = check_admissible(m, nu)
    print(f"admissible: {res.ok} ({res.reason})")
    if not res.ok:
        return EXIT_FAIL
    if not m[0, 0] > 0:
        print("M_11 = 0: not of the impedance form")
        return EXIT_FAIL
    lam = float(1.0 / m[0, 0])
    dist = float(np.abs(m - build_m(lam, nu)).max())
    print(f"lambda = {lam!r}")
    print(f"distance to build_m(lambda, nu) = {dist:.3e}")
    if args.lam is not None:
        print(f"expected lambda = {args.lam!r}, difference {abs(lam - args.lam):.3e}")
    return EXIT_OK


def cmd_check_dissipative(args) -> int:
    try:
        traj = read_trajectory(args.directory)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    F = None if args.source == "recorded" else 0
    rep = dissipative_verify(traj, F=F)
    print(rep)
    print(f"worst pair: kappa={np.array2string(np.asarray(rep.location['kappa']))} "
          f"phi={rep.location['phi']} margin={rep.details['min_margin']:.6e}")
    print(_tolerance_note())
    return EXIT_OK if rep.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plastodyn", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--stride", type=int, metavar="N")

    p = sub.add_parser("run", help="integrate a configured scenario and run its checks")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="vanishing-viscosity or impedance-limit sweep")
    common(p)
    p.add_argument("--axis", choices=("eps", "lambda"), required=True)
    p.add_argument("--values", metavar="v1,v2,...")
    p.add_argument("--mode", choices=("impedance", "dirichlet", "neumann"), default="dirichlet")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-bc", help="test a boundary matrix for admissibility")
    p.add_argument("matrix")
    p.add_argument("--nu", metavar="n1[,n2]", help="outward normal (default e1)")
    p.add_argument("--lam", type=float)
    p.set_defaults(func=cmd_verify_bc)

    p = sub.add_parser("check-dissipative", help="dissipative inequality on a stored trajectory")
    p.add_argument("directory")
    p.add_argument("--source", choices=("recorded", "zero"), default="recorded")
    p.set_defaults(func=cmd_check_dissipative)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ConfigError, CompatibilityError, CFLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
