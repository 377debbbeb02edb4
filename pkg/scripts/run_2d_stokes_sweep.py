"""Error and timing versus basis size for the 2D Stokes benchmark, both
methods: the data behind the error-vs-M and timing comparison figures.

Writes results/stokes2d_vs_m.csv; plot with the plots package, e.g.
  plot-error-vs-m results/stokes2d_vs_m.csv error_u figs/stokes2d_u.png
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
                "--nu", "1e-4",
                "--m", "200,400,600,800,1000",
                "--method", "both",
                "--seed", "7",
                "--out", str(OUT / "stokes2d_vs_m.csv"),
            ]
        )
    )
