"""Error versus basis size for the 3D Stokes benchmark (heavy: the largest
cell factors a 49600 x 4503 system; expect minutes per cell on one core).

Writes results/stokes3d_vs_m.csv.
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
                "sweep", "stokes3d",
                "--nu", "1e-5",
                "--m", "500,1000,1500",
                "--seed", "7",
                "--out", str(OUT / "stokes3d_vs_m.csv"),
            ]
        )
    )
