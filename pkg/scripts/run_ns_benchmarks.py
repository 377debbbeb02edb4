"""Nonlinear benchmarks: 2D at nu = 0.1 and 3D at nu = 0.01, Gauss-Newton
with the Picard scheme-I warm start.  Writes results/ns_benchmarks.csv.
"""

import pathlib
import sys

from dfflow.cli import main

OUT = pathlib.Path("results")

if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    code = main(
        [
            "sweep", "ns2d",
            "--nu", "1e-1",
            "--m", "800",
            "--gamma", "2.5",
            "--seed", "7",
            "--warmup", "5",
            "--out", str(OUT / "ns_benchmarks.csv"),
        ]
    )
    code = code or main(
        [
            "sweep", "ns3d",
            "--nu", "1e-2",
            "--m", "1000",
            "--seed", "7",
            "--warmup", "10",
            "--update-tol", "1e-6",
            "--out", str(OUT / "ns_benchmarks.csv"),
        ]
    )
    sys.exit(code)
