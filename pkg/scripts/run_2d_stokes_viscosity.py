"""Error versus viscosity for the 2D Stokes benchmark at M = 1000.

Writes results/stokes2d_vs_nu.csv for the error-vs-viscosity figures.
"""

import pathlib
import sys

from dfflow.cli import main

OUT = pathlib.Path("results")

if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    sys.exit(
        main(
            [
                "sweep", "stokes2d",
                "--nu", "1e-1,1e-2,1e-3,1e-4,1e-5",
                "--m", "1000",
                "--method", "both",
                "--seed", "7",
                "--out", str(OUT / "stokes2d_vs_nu.csv"),
            ]
        )
    )
