"""Typed view of the solver CSV output."""

import csv
from dataclasses import dataclass

import numpy as np

REQUIRED = ("case", "method", "nu", "m", "seed")
METRICS = ("error_u", "error_p", "error_div")
_FLOAT_COLUMNS = {
    "nu", "error_u", "error_p", "error_div",
    "assemble_seconds", "solve_seconds", "pressure_seconds", "total_seconds",
}
_INT_COLUMNS = {"m", "seed", "iters", "rows", "cols", "rank"}


class ResultFrameError(ValueError):
    pass


@dataclass
class ResultFrame:
    columns: list
    rows: list  # list of dicts with typed values

    @staticmethod
    def read_csv(path) -> "ResultFrame":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ResultFrameError(f"{path}: empty file, no header row")
            missing = [c for c in REQUIRED if c not in reader.fieldnames]
            if missing:
                raise ResultFrameError(f"{path}: missing required columns {missing}")
            rows = []
            for raw in reader:
                row = {}
                for key, value in raw.items():
                    if key in _FLOAT_COLUMNS:
                        row[key] = float(value)
                    elif key in _INT_COLUMNS:
                        row[key] = int(value)
                    else:
                        row[key] = value
                if row["nu"] <= 0 or row["m"] <= 0:
                    raise ResultFrameError(f"{path}: nonpositive nu or m in row {row}")
                rows.append(row)
        if not rows:
            raise ResultFrameError(f"{path}: no data rows")
        return ResultFrame(columns=list(reader.fieldnames), rows=rows)

    def require_metric(self, metric):
        if metric not in self.columns:
            raise ResultFrameError(
                f"metric {metric!r} not in columns {self.columns}"
            )

    def methods(self):
        return sorted({row["method"] for row in self.rows})

    def series(self, method, x_key, metric):
        """Sorted (x, metric) arrays for one method, averaged over seeds."""
        buckets = {}
        for row in self.rows:
            if row["method"] != method:
                continue
            buckets.setdefault(row[x_key], []).append(row[metric])
        xs = np.array(sorted(buckets))
        ys = np.array([np.mean(buckets[x]) for x in xs])
        return xs, ys
