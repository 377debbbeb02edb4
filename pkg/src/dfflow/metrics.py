"""Error metrics and the per-iteration cost accounting for both methods."""

from dataclasses import dataclass, field

import numpy as np


class DimensionMismatch(RuntimeError):
    """Assembled system dimensions disagree with the cost-model formulas."""


def _evaluate(field_or_values, points):
    if callable(field_or_values):
        return np.asarray(field_or_values(points), dtype=float)
    return np.asarray(field_or_values, dtype=float)


def relative_l2_error(exact, approx, points) -> float:
    """sqrt(sum (g - g_nn)^2) / sqrt(sum g^2) over the test points.

    Vector fields are flattened across components; the normalizing factor
    1/N cancels.  A zero exact norm leaves the metric undefined.
    """
    g = _evaluate(exact, points).ravel()
    g_nn = _evaluate(approx, points).ravel()
    if g.shape != g_nn.shape:
        raise ValueError(f"shape mismatch: {g.shape} vs {g_nn.shape}")
    denom = float(np.linalg.norm(g))
    if denom == 0.0:
        raise ValueError("relative error undefined: exact field norm is zero")
    return float(np.linalg.norm(g - g_nn) / denom)


def divergence_error(velocity, points) -> float:
    """RMS of the pointwise divergence, sqrt(mean(div u^2)).

    ``velocity`` is either an object exposing ``divergence(points)`` built on
    analytic basis derivatives, or a plain callable returning divergence
    values.
    """
    if hasattr(velocity, "divergence"):
        div = velocity.divergence(points)
    else:
        div = velocity(points)
    div = np.asarray(div, dtype=float)
    return float(np.sqrt(np.mean(div * div)))


@dataclass
class MetricsReport:
    error_u: float
    error_p: float
    error_div: float
    seconds: dict = field(default_factory=dict)
    dimensions: dict = field(default_factory=dict)
    rank: int | None = None
    iterations: int | None = None
    status: str = "ok"

    def as_dict(self):
        out = {
            "error_u": self.error_u,
            "error_p": self.error_p,
            "error_div": self.error_div,
            "rank": self.rank,
            "iterations": self.iterations,
            "status": self.status,
        }
        out.update({f"{k}_seconds": v for k, v in self.seconds.items()})
        out.update(self.dimensions)
        return out


# ---------------------------------------------------------------------------
# dimension accounting
# ---------------------------------------------------------------------------


def expected_dimensions(dim: int, n_interior: int, n_boundary: int, count: int, method: str):
    """(rows, cols) per subproblem from the cost-model formulas.

    Decoupled: velocity (I+2J)x(M+1) then pressure (2I+1)x(M+1) in 2D;
    velocity (4I+4J)x(3M+3) then pressure (3I+1)x(M+1) in 3D.  The coupled
    baseline gets one extra pressure-pin row on top of (3I+2J)x(3M+3) /
    (4I+3J)x(4M+4).
    """
    i, j, m1 = n_interior, n_boundary, count + 1
    if method == "decoupled":
        if dim == 2:
            return {"velocity": (i + 2 * j, m1), "pressure": (2 * i + 1, m1)}
        return {"velocity": (4 * i + 4 * j, 3 * m1), "pressure": (3 * i + 1, m1)}
    if method == "coupled":
        if dim == 2:
            return {"coupled": (3 * i + 2 * j + 1, 3 * m1)}
        return {"coupled": (4 * i + 3 * j + 1, 4 * m1)}
    raise ValueError(f"unknown method {method!r}")


def complexity_report(dim, n_interior, n_boundary, count, assembled=None):
    """Rows of (subproblem, rows, cols, m*n^2 proxy) for both methods.

    When ``assembled`` maps subproblem names to actual (rows, cols), any
    disagreement with the formulas raises DimensionMismatch: an assembly that
    changes the system size is a bug, not a tolerance question.
    """
    report = []
    for method in ("decoupled", "coupled"):
        for name, (rows, cols) in expected_dimensions(
            dim, n_interior, n_boundary, count, method
        ).items():
            report.append(
                {
                    "method": method,
                    "subproblem": name,
                    "rows": rows,
                    "cols": cols,
                    "mn2": rows * cols * cols,
                }
            )
    if assembled:
        expected = {r["subproblem"]: (r["rows"], r["cols"]) for r in report}
        for name, shape in assembled.items():
            if name not in expected:
                raise DimensionMismatch(f"unknown subproblem {name!r}")
            if tuple(shape) != expected[name]:
                raise DimensionMismatch(
                    f"{name}: assembled {tuple(shape)}, formulas give {expected[name]}"
                )
    return report
