"""Command-line driver: solve, sweep, identity-check, dims.

Configuration is flat key=value text (same keys as the long flags); explicit
flags override file values.  Exit codes: 0 success, 1 configuration error,
2 a nonlinear solve failed to converge (rows still written).
"""

import argparse
import sys

import numpy as np

from .features import AffineMap, init_bank
from .identities import verify_curl_identity_2d, verify_curl_identity_3d
from .metrics import complexity_report
from .run import CASE_ALIASES, ExperimentConfig, canonical_case, run_experiment


def _parse_list(text, cast):
    return [cast(tok) for tok in str(text).split(",") if tok != ""]


def load_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _experiment_config(args) -> ExperimentConfig:
    merged = {}
    if args.config:
        merged.update(load_config_file(args.config))
    for key in (
        "case", "nu", "m", "gamma", "seed", "seeds", "method", "out",
        "nx", "ny", "nb", "interior", "face", "test_2d", "test_3d",
        "scheme", "max_iters", "warmup", "update_tol", "workers", "dump_system",
    ):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if "case" not in merged:
        raise ValueError("no case given (positional argument, --case, or config file)")
    int_or_none = lambda k: int(merged[k]) if k in merged else None
    return ExperimentConfig(
        case=str(merged["case"]),
        nus=_parse_list(merged.get("nu", ""), float),
        ms=_parse_list(merged.get("m", ""), int),
        gammas=_parse_list(merged.get("gamma", ""), float),
        seed=int(merged.get("seed", 0)),
        seeds=_parse_list(merged.get("seeds", ""), int),
        method=str(merged.get("method", "decoupled")),
        out=str(merged.get("out", "results.csv")),
        nx=int(merged.get("nx", 50)),
        ny=int(merged.get("ny", 50)),
        nb=int(merged.get("nb", 50)),
        n_interior_3d=int(merged.get("interior", 10000)),
        n_face_3d=int(merged.get("face", 20)),
        n_test_2d=int(merged.get("test_2d", 111)),
        n_test_3d=int(merged.get("test_3d", 2000)),
        scheme=str(merged.get("scheme", "gauss-newton")),
        max_iters=int_or_none("max_iters"),
        warmup=int_or_none("warmup"),
        update_tol=float(merged.get("update_tol", 1e-8)),
        workers=int(merged.get("workers", 1)),
        dump_dir=str(merged["dump_system"]) if merged.get("dump_system") else None,
    )


def _add_experiment_flags(sub):
    sub.add_argument("case_positional", nargs="?", metavar="case",
                     help=f"benchmark case ({', '.join(sorted(CASE_ALIASES))})")
    sub.add_argument("--case")
    sub.add_argument("--nu", help="viscosity or comma list")
    sub.add_argument("--m", help="basis size or comma list")
    sub.add_argument("--gamma", help="shape parameter or comma list")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--seeds", help="comma list of seeds")
    sub.add_argument("--method", choices=["decoupled", "coupled", "both"])
    sub.add_argument("--out")
    sub.add_argument("--config", help="key=value configuration file")
    sub.add_argument("--nx", type=int)
    sub.add_argument("--ny", type=int)
    sub.add_argument("--nb", type=int)
    sub.add_argument("--interior", type=int, help="3D interior Halton points")
    sub.add_argument("--face", type=int, help="3D boundary points per face side")
    sub.add_argument("--test-2d", dest="test_2d", type=int)
    sub.add_argument("--test-3d", dest="test_3d", type=int)
    sub.add_argument("--scheme",
                     choices=["gauss-newton", "picard-I", "picard-II", "picard-III"])
    sub.add_argument("--max-iters", dest="max_iters", type=int)
    sub.add_argument("--warmup", type=int)
    sub.add_argument("--update-tol", dest="update_tol", type=float)
    sub.add_argument("--workers", type=int)
    sub.add_argument("--dump-system", dest="dump_system", metavar="DIR")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dfflow",
        description="Divergence-free mesh-free Stokes / Navier-Stokes benchmarks",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("solve", "run the given cells and write a CSV of metrics"),
        ("sweep", "like solve, but idempotent per cell and guarded"),
    ):
        sub = subs.add_parser(name, help=help_text)
        _add_experiment_flags(sub)

    ident = subs.add_parser("identity-check", help="verify the advection-curl identities")
    ident.add_argument("--dim", type=int, choices=[2, 3], required=True)
    ident.add_argument("--seeds", type=int, default=20)
    ident.add_argument("--points", type=int, default=200)
    ident.add_argument("--m", type=int, default=60)
    ident.add_argument("--gamma", type=float, default=2.0)
    ident.add_argument("--tol", type=float, default=1e-5)

    dims = subs.add_parser("dims", help="print the per-iteration system dimensions")
    dims.add_argument("--dim", type=int, choices=[2, 3], required=True)
    dims.add_argument("--interior", type=int, required=True)
    dims.add_argument("--boundary", type=int, required=True)
    dims.add_argument("--m", type=int, required=True)
    return parser


def _run_identity_check(args) -> int:
    worst = 0.0
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        bank = init_bank(args.dim, args.m, args.gamma, seed)
        amap = AffineMap.for_box([0.0] * args.dim, [1.0] * args.dim)
        # margin keeps finite-difference stencils inside the unit ball
        points = rng.uniform(0.05, 0.95, (args.points, args.dim))
        if args.dim == 2:
            alpha = rng.standard_normal(args.m + 1)
            disc = verify_curl_identity_2d(bank, amap, alpha, points)
        else:
            chis = rng.standard_normal((3, args.m + 1))
            disc = verify_curl_identity_3d(bank, amap, chis, points)
        worst = max(worst, disc)
    print(f"identity-check dim={args.dim} seeds={args.seeds}: "
          f"max relative discrepancy {worst:.3e} (tol {args.tol:g})")
    return 0 if worst <= args.tol else 1


def _run_dims(args) -> int:
    rows = complexity_report(args.dim, args.interior, args.boundary, args.m)
    print(f"{'method':<10} {'subproblem':<10} {'rows':>8} {'cols':>6} {'m*n^2':>16}")
    for row in rows:
        print(f"{row['method']:<10} {row['subproblem']:<10} "
              f"{row['rows']:>8} {row['cols']:>6} {row['mn2']:>16}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "identity-check":
            return _run_identity_check(args)
        if args.command == "dims":
            return _run_dims(args)
        if args.case_positional and not args.case:
            args.case = args.case_positional
        config = _experiment_config(args)
        canonical_case(config.case)
        return run_experiment(config, skip_existing=(args.command == "sweep"))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
