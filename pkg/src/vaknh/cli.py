"""Command-line front end.

Subcommands
-----------
check      load a system, verify admissibility and the linearity
           declaration, probe the symplectic and compatibility tests
integrate  integrate either dynamics and write the trajectory as CSV
compare    evaluate the comparison residuals at a single state (JSON)
scan       sample a state-space box and write a comparison report (JSON)
catalog    list the built-in models

Exit codes: 0 success, 1 usage/IO/parse error, 2 failed check,
3 numeric diagnostic (singular matrix or domain error).
"""

from __future__ import annotations

import argparse
import json
import os
import sys as _sys

import numpy as np

from . import comparison, integrate as _integrate, models
from .errors import (AdmissibilityError, EvalError, IntegrationError,
                     SingularMatrixError, SystemFormatError, VaknhError)
from .maps import upsilon
from .models import builtin, builtin_names
from .nonholonomic import nh_rhs
from .system import (NhState, SystemDef, VakState, load_system,
                     verify_linearity)
from .vakonomic import compatibility_matrix, symplectic_check, vak_rhs

__all__ = ["run", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="vaknh", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_system(p):
        p.add_argument("system", help="builtin model name or path to a system file")

    def add_state(p, p_required=False):
        p.add_argument("--q", help="comma-separated positions")
        p.add_argument("--v", help="comma-separated base velocities")
        p.add_argument("--p", help="comma-separated constraint multipliers",
                       required=p_required)

    p_check = sub.add_parser("check", help="structural and pointwise checks")
    add_system(p_check)
    add_state(p_check)
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--samples", type=int, default=25)

    p_int = sub.add_parser("integrate", help="integrate a trajectory to CSV")
    add_system(p_int)
    add_state(p_int)
    p_int.add_argument("--dynamics", choices=("vak", "nh"), required=True)
    p_int.add_argument("--t-end", type=float, required=True)
    p_int.add_argument("--method", choices=("rk4", "rk45"), default="rk45")
    p_int.add_argument("--dt", type=float, default=_integrate.DEFAULT_DT)
    p_int.add_argument("--rtol", type=float, default=_integrate.DEFAULT_RTOL)
    p_int.add_argument("--atol", type=float, default=_integrate.DEFAULT_ATOL)
    p_int.add_argument("--max-steps", type=int, default=1_000_000)
    p_int.add_argument("--candidates", help="file of named candidate expressions")
    p_int.add_argument("--out", help="output CSV path (default: stdout)")

    p_cmp = sub.add_parser("compare", help="comparison residuals at one state")
    add_system(p_cmp)
    add_state(p_cmp, p_required=True)
    p_cmp.add_argument("--candidates")
    p_cmp.add_argument("--tol", type=float, default=1e-10)

    p_scan = sub.add_parser("scan", help="sampled comparison report")
    add_system(p_scan)
    p_scan.add_argument("--samples", type=int, default=100)
    p_scan.add_argument("--seed", type=int, default=0)
    p_scan.add_argument("--p-mode", choices=("random", "legendre"), default="random")
    p_scan.add_argument("--tol", type=float, default=1e-10)
    p_scan.add_argument("--candidates")
    p_scan.add_argument("--out", help="output JSON path (default: stdout)")

    sub.add_parser("catalog", help="list built-in models")
    return parser


def _load(source: str) -> SystemDef:
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            return load_system(fh.read())
    if source in models.CATALOG:
        return builtin(source)
    raise SystemFormatError(
        f"{source!r} is neither a file nor a builtin; "
        f"builtins: {', '.join(builtin_names())}")


def _vector(text, length, what, default=None):
    if text is None:
        if default is None:
            raise _UsageError(f"--{what} is required here")
        return np.full(length, default)
    try:
        values = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise _UsageError(f"--{what} must be comma-separated numbers") from None
    if len(values) != length:
        raise _UsageError(f"--{what} needs {length} components, got {len(values)}")
    return values


def _load_candidates(path):
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return comparison.parse_candidates(fh.read())


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)
        if not text.endswith("\n"):
            _sys.stdout.write("\n")


def _cmd_catalog(args) -> int:
    for name in builtin_names():
        entry = models.CATALOG[name]
        sysdef = builtin(name)
        kind = "linear" if sysdef.declared_linear else "nonlinear"
        print(f"{name:22s} n={sysdef.n} m={sysdef.m} {kind:9s} {entry.describe}")
    return 0


def _cmd_check(args) -> int:
    try:
        sysdef = _load(args.system)
    except AdmissibilityError as exc:
        print(f"admissibility: FAIL ({exc})")
        return 2
    except SystemFormatError as exc:
        if "declared linear but fails verification" in str(exc):
            print(f"linearity: FAIL ({exc})")
            return 2
        raise
    print(f"system: {sysdef.name} (n={sysdef.n}, m={sysdef.m})")
    print("admissibility: PASS")
    ok = True

    report = verify_linearity(sysdef, samples=args.samples, seed=args.seed)
    match = report.linear == sysdef.declared_linear
    print(f"linearity: declared {str(sysdef.declared_linear).lower()}, "
          f"verified {str(report.linear).lower()}: {'PASS' if match else 'FAIL'}")
    ok &= match

    q = _vector(args.q, sysdef.n, "q", default=1.0)
    v = _vector(args.v, sysdef.n - sysdef.m, "v", default=0.5)
    p = _vector(args.p, sysdef.m, "p", default=1.0)
    probe = VakState(q, v, p)
    sym = symplectic_check(sysdef, probe)
    print(f"symplectic at probe: det = {sym.det!r}, "
          f"{'invertible: PASS' if sym.invertible else 'singular: FAIL'}")
    ok &= sym.invertible

    if report.linear:
        cmat = compatibility_matrix(sysdef, q)
        det = float(np.linalg.det(cmat))
        invertible = abs(det) > 1e-12 * max(np.max(np.abs(cmat)), 0.0) ** sysdef.m
        rows = "; ".join(", ".join(repr(float(x)) for x in row) for row in cmat)
        print(f"compatibility matrix at probe q: [{rows}]")
        print(f"compatibility at probe q: det = {det!r}, "
              f"{'invertible: PASS' if invertible else 'singular: FAIL'}")
        ok &= invertible
    else:
        print("compatibility: skipped (nonlinear constraints)")

    return 0 if ok else 2


def _cmd_integrate(args) -> int:
    sysdef = _load(args.system)
    q = _vector(args.q, sysdef.n, "q")
    v = _vector(args.v, sysdef.n - sysdef.m, "v")
    candidates = _load_candidates(args.candidates)
    if args.dynamics == "vak":
        p = _vector(args.p, sysdef.m, "p")
        s0 = VakState(q, v, p)
    else:
        s0 = NhState(q, v)
    traj = _integrate.integrate(
        sysdef, args.dynamics, s0, t_end=args.t_end, method=args.method,
        dt=args.dt, rtol=args.rtol, atol=args.atol, max_steps=args.max_steps,
        candidates=candidates)
    _emit(_integrate.trajectory_to_csv(sysdef, traj), args.out)
    return 0


def _cmd_compare(args) -> int:
    sysdef = _load(args.system)
    q = _vector(args.q, sysdef.n, "q")
    v = _vector(args.v, sysdef.n - sysdef.m, "v")
    p = _vector(args.p, sysdef.m, "p")
    s = VakState(q, v, p)
    candidates = _load_candidates(args.candidates)

    payload = {
        "system": sysdef.name,
        "state": {"q": list(map(float, q)), "v": list(map(float, v)),
                  "p": list(map(float, p))},
        "tol": args.tol,
    }
    if sysdef.declared_linear:
        payload["g"] = [float(x) for x in comparison.g_residuals(sysdef, s)]
    else:
        payload["g"] = None
    delta = comparison.field_residual(sysdef, s)
    payload["deltaY"] = [float(x) for x in delta]
    payload["tangency"] = comparison.tangency_residuals(sysdef, candidates, s) \
        if candidates else {}
    payload["vak_dv"] = [float(x) for x in vak_rhs(sysdef, s).dv]
    payload["nh_dv"] = [float(x) for x in nh_rhs(sysdef, upsilon(sysdef, s)).dv]
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_scan(args) -> int:
    sysdef = _load(args.system)
    if args.system in models.CATALOG:
        box = models.CATALOG[args.system].sample_box
    else:
        box = {"q": [(-1.0, 1.0)] * sysdef.n,
               "v": [(-1.0, 1.0)] * (sysdef.n - sysdef.m),
               "p": [(-1.0, 1.0)] * sysdef.m}
    sampler = comparison.Sampler(
        count=args.samples, seed=args.seed,
        q_bounds=tuple(box["q"]), v_bounds=tuple(box["v"]),
        p_bounds=tuple(box["p"]), p_mode=args.p_mode)
    report = comparison.scan(sysdef, sampler,
                             candidates=_load_candidates(args.candidates),
                             tol=args.tol)
    _emit(report.to_json(indent=2), args.out)
    return 0


_COMMANDS = {
    "catalog": _cmd_catalog,
    "check": _cmd_check,
    "integrate": _cmd_integrate,
    "compare": _cmd_compare,
    "scan": _cmd_scan,
}


def run(argv=None) -> int:
    """Parse arguments and execute; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    except (SingularMatrixError, EvalError, IntegrationError) as exc:
        print(f"numeric error: {exc}", file=_sys.stderr)
        return 3
    except (VaknhError, OSError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1


def main() -> None:
    _sys.exit(run())
