"""Dense least-squares kernel all assemblies feed into.

Default backend is LAPACK's column-pivoted orthogonal factorization (gelsy),
which returns the minimum-norm minimizer when the effective rank drops below
the column count.  An SVD backend (gelsd) is available for near-rank-deficient
systems, e.g. velocity assemblies with a very small viscosity.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

_DRIVERS = {"qr": "gelsy", "svd": "gelsd"}


@dataclass
class LeastSquaresProblem:
    """Stacked system min ||A x - b||_2 with optional labelled row blocks."""

    matrix: np.ndarray
    rhs: np.ndarray
    row_blocks: list = field(default_factory=list)  # (label, start, stop)

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        b = np.asarray(self.rhs, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"matrix must be 2D and nonempty, got shape {a.shape}")
        if b.shape != (a.shape[0],):
            raise ValueError(f"rhs length {b.shape} does not match {a.shape[0]} rows")
        self.matrix = a
        self.rhs = b

    @property
    def shape(self):
        return self.matrix.shape

    def block(self, label):
        for name, start, stop in self.row_blocks:
            if name == label:
                return slice(start, stop)
        raise KeyError(label)

    def dump(self, path):
        np.savez(path, matrix=self.matrix, rhs=self.rhs)


@dataclass(frozen=True)
class LsqSolution:
    x: np.ndarray
    residual_norm: float
    rank: int


def solve_lsq(
    problem: LeastSquaresProblem,
    rank_tol: float | None = None,
    method: str = "qr",
    ridge: float = 0.0,
    scale_columns: bool = False,
) -> LsqSolution:
    """Minimum-norm least-squares solve of ``problem``.

    rank_tol is the relative cutoff on the factor diagonal (or singular
    values); None means max(m, n) * machine epsilon.  ``ridge`` appends
    sqrt(ridge) * I rows, for experiments with ill-conditioned banks.
    ``scale_columns`` normalizes columns to unit norm before factorizing
    (same minimizing subspace, far better rank detection when column scales
    span many orders, as saturated high-order feature derivatives do).
    """
    if method not in _DRIVERS:
        raise ValueError(f"method must be one of {sorted(_DRIVERS)}")
    a = problem.matrix
    b = problem.rhs
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
        raise ValueError("non-finite entries in least-squares input")
    m, n = a.shape
    overwrite = False
    if ridge > 0.0:
        a = np.vstack([a, np.sqrt(ridge) * np.eye(n)])
        b = np.concatenate([b, np.zeros(n)])
        overwrite = True  # augmented copies, not the caller's buffers
    col_scale = None
    if scale_columns:
        col_scale = np.linalg.norm(a, axis=0)
        col_scale[col_scale == 0.0] = 1.0
        a = a / col_scale
        overwrite = True
    if rank_tol is None:
        rank_tol = max(a.shape) * np.finfo(float).eps
    x, _, rank, _ = scipy.linalg.lstsq(
        a,
        b,
        cond=rank_tol,
        lapack_driver=_DRIVERS[method],
        overwrite_a=overwrite,
        check_finite=False,
    )
    if col_scale is not None:
        x = x / col_scale
    # residual against the caller's system, never the scaled/augmented one
    residual = float(np.linalg.norm(problem.matrix @ x - problem.rhs))
    return LsqSolution(x=x, residual_norm=residual, rank=int(rank))
