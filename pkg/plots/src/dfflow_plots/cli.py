"""Entry points: plot-error-vs-m / plot-error-vs-nu <csv> <metric> <out.png>."""

import argparse
import sys

from .frame import ResultFrameError
from .plots import plot_error_vs_m, plot_error_vs_nu


def _run(plot_fn, argv, prog):
    parser = argparse.ArgumentParser(prog=prog)
    parser.add_argument("csv", help="benchmark CSV written by the solver CLI")
    parser.add_argument("metric", help="column to plot, e.g. error_u or error_div")
    parser.add_argument("out", help="output PNG path")
    args = parser.parse_args(argv)
    try:
        plot_fn(args.csv, args.metric, args.out)
    except (ResultFrameError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main_vs_m(argv=None):
    code = _run(plot_error_vs_m, argv, "plot-error-vs-m")
    if argv is None:
        sys.exit(code)
    return code


def main_vs_nu(argv=None):
    code = _run(plot_error_vs_nu, argv, "plot-error-vs-nu")
    if argv is None:
        sys.exit(code)
    return code
