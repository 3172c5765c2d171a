"""Command-line interface.

Subcommands: curvature, check-identities, verify-gradient, verify-hessian,
rayleigh, classify, atlas.  Exit codes: 0 success, 1 usage or configuration
error, 2 tolerance failure (the report is still written).  Reports are
byte-identical across runs with the same configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import atlas as atlas_mod
from .errors import CurvlabError
from .functionals import Coefficients
from .verify import (
    HESSIAN_MODELS,
    curvature_case,
    gradient_case,
    hessian_case,
    identity_case,
    rayleigh_case,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TOLERANCE = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class UsageError(Exception):
    pass


def _dump(report, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="curvlab", description="quadratic curvature functional lab")
    p.add_argument("--config", help="JSON file with default flag values")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("curvature", help="space-form curvature deviations")
    c.add_argument("--model", default="sphere", choices=["torus", "sphere", "poincare", "s3-euler"])
    c.add_argument("--n", type=int, default=3)
    c.add_argument("--radius", type=float, default=1.0)
    c.add_argument("--tol", type=float, default=1e-6)
    c.add_argument("--out")

    ci = sub.add_parser("check-identities", help="TT/conformal integral identity battery")
    ci.add_argument("--mode", required=True, choices=["tt", "conformal"])
    ci.add_argument("--tol", type=float, default=1e-4)
    ci.add_argument("--out")

    vg = sub.add_parser("verify-gradient", help="first variation vs finite differences")
    vg.add_argument("--model", default="torus", choices=["torus", "s3"])
    vg.add_argument("--n", type=int, default=3)
    vg.add_argument("--count", type=int, default=10)
    vg.add_argument("--seed", type=int, default=0)
    vg.add_argument("--s", type=float, default=0.0)
    vg.add_argument("--tau", type=float, default=0.0)
    vg.add_argument("--tol", type=float, default=1e-4)
    vg.add_argument("--out")

    vh = sub.add_parser("verify-hessian", help="second variation vs closed form")
    vh.add_argument("--model", default="s3-invariant", choices=list(HESSIAN_MODELS))
    vh.add_argument("--s", type=float, default=0.0)
    vh.add_argument("--tau", type=float, default=0.0)
    vh.add_argument("--t-step", type=float, default=1e-2)
    vh.add_argument("--tol", type=float, default=0.01)
    vh.add_argument("--out")

    r = sub.add_parser("rayleigh", help="Rayleigh quotient of the Lichnerowicz operator")
    r.add_argument("--model", default="s3-invariant", choices=["s3-invariant", "torus-tt"])
    r.add_argument("--d", help="comma-separated invariant-mode coefficients")
    r.add_argument("--k", help="comma-separated torus wave vector")
    r.add_argument("--res", type=int)
    r.add_argument("--tol", type=float, default=1e-3)
    r.add_argument("--out")

    cl = sub.add_parser("classify", help="stability verdict at a single (s, tau)")
    cl.add_argument("--n", type=int)
    cl.add_argument("--lambda", dest="lam", type=int)
    cl.add_argument("--mode", choices=["tt", "conformal"])
    cl.add_argument("--s", type=float)
    cl.add_argument("--tau", type=float)
    cl.add_argument("--format", default="text", choices=["text", "json"])
    cl.add_argument("--out")

    at = sub.add_parser("atlas", help="classify an (s, tau) grid to CSV/JSON")
    at.add_argument("--n", type=int)
    at.add_argument("--lambda", dest="lam", type=int)
    at.add_argument("--mode", choices=["tt", "conformal"])
    at.add_argument("--s-min", type=float)
    at.add_argument("--s-max", type=float)
    at.add_argument("--tau-min", type=float)
    at.add_argument("--tau-max", type=float)
    at.add_argument("--res", type=int)
    at.add_argument("--out")
    at.add_argument("--format", default="csv", choices=["csv", "json"])
    return p


def _cmd_curvature(args) -> int:
    rep = curvature_case(args.model, args.n, radius=args.radius)
    rep["tol"] = args.tol
    worst = max(rep["max_rm_dev"], rep["max_ric_dev"], rep["max_r_dev"])
    rep["pass"] = bool(worst <= args.tol)
    _dump(rep, args.out)
    return EXIT_OK if rep["pass"] else EXIT_TOLERANCE


def _cmd_identities(args) -> int:
    checks = identity_case(args.mode)
    rows = [
        {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "rel_err": c.rel_err}
        for c in checks
    ]
    ok = all(c.rel_err <= args.tol for c in checks)
    _dump({"mode": args.mode, "tol": args.tol, "pass": ok, "checks": rows}, args.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def _cmd_gradient(args) -> int:
    rows = gradient_case(
        args.model, args.n, Coefficients(args.s, args.tau), args.count, args.seed
    )
    ok = all(r["rel_err"] <= args.tol for r in rows)
    _dump(
        {
            "model": args.model,
            "n": args.n,
            "s": args.s,
            "tau": args.tau,
            "seed": args.seed,
            "tol": args.tol,
            "pass": ok,
            "rows": rows,
        },
        args.out,
    )
    return EXIT_OK if ok else EXIT_TOLERANCE


def _cmd_hessian(args) -> int:
    report = hessian_case(args.model, Coefficients(args.s, args.tau), args.t_step)
    text = report.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.rel_err_d2 <= args.tol else EXIT_TOLERANCE


def _cmd_rayleigh(args) -> int:
    d = _parse_floats(args.d) if args.d else None
    k = [int(v) for v in args.k.split(",")] if args.k else None
    report, meta = rayleigh_case(args.model, res=args.res, d=d, k=k)
    body = json.loads(report.to_json(model=meta["model"], mode_desc=meta["mode_desc"]))
    body["expected_quotient"] = meta["expected_quotient"]
    ok = abs(report.quotient - meta["expected_quotient"]) <= args.tol
    body["pass"] = bool(ok)
    _dump(body, args.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def _cmd_classify(args) -> int:
    q = atlas_mod.StabilityQuery(n=args.n, lam=args.lam, mode=args.mode, s=args.s, tau=args.tau)
    v = atlas_mod.classify(q)
    if args.format == "json":
        _dump(
            {
                "n": args.n,
                "lambda": args.lam,
                "mode": args.mode,
                "s": args.s,
                "tau": args.tau,
                "verdict": v.value,
                "citation": v.citation,
            },
            args.out,
        )
    else:
        line = f"{v.value} ({v.citation})" if v.citation else v.value
        if args.out:
            Path(args.out).write_text(line + "\n")
        else:
            sys.stdout.write(line + "\n")
    return EXIT_OK


def _cmd_atlas(args) -> int:
    atlas_mod.emit_atlas(
        n=args.n,
        lam=args.lam,
        mode=args.mode,
        s_range=(args.s_min, args.s_max),
        tau_range=(args.tau_min, args.tau_max),
        resolution=args.res,
        path=args.out,
        fmt=args.format,
    )
    return EXIT_OK


_REQUIRED = {
    "classify": ("n", "lam", "mode", "s", "tau"),
    "atlas": ("n", "lam", "mode", "s_min", "s_max", "tau_min", "tau_max", "res", "out"),
}

_HANDLERS = {
    "curvature": _cmd_curvature,
    "check-identities": _cmd_identities,
    "verify-gradient": _cmd_gradient,
    "verify-hessian": _cmd_hessian,
    "rayleigh": _cmd_rayleigh,
    "classify": _cmd_classify,
    "atlas": _cmd_atlas,
}


def _merge_config(args, defaults: dict, argv: list) -> None:
    """Apply config values for flags not given on the command line."""
    given = {
        tok.split("=", 1)[0][2:].replace("-", "_")
        for tok in argv
        if tok.startswith("--")
    }
    for key, value in defaults.items():
        dest = key.replace("-", "_")
        flag = dest
        if dest == "lambda":
            dest = "lam"
        if flag not in given and hasattr(args, dest):
            setattr(args, dest, value)


def run(argv=None) -> int:
    threads = os.environ.get("CURVLAB_THREADS")
    if threads is not None and threads != "0":
        # computations are vectorized and single-threaded; cap BLAS pools
        os.environ.setdefault("OMP_NUM_THREADS", threads)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    if args.config:
        try:
            defaults = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            sys.stderr.write(f"error: cannot read config: {exc}\n")
            return EXIT_USAGE
        _merge_config(args, defaults, sys.argv[1:] if argv is None else argv)
    missing = [f for f in _REQUIRED.get(args.command, ()) if getattr(args, f) is None]
    if missing:
        flags = ", ".join("--" + f.replace("_", "-").replace("lam", "lambda") for f in missing)
        sys.stderr.write(f"error: missing required arguments: {flags}\n")
        return EXIT_USAGE
    try:
        return _HANDLERS[args.command](args)
    except CurvlabError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
