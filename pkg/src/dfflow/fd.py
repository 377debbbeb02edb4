"""Central finite-difference helpers used by the identity checks and tests.

These operate on black-box point evaluators ``f(points) -> (N,) or (N, k)``
and are kept deliberately independent of the analytic derivative tables they
are used to cross-check.  Higher-order operators are built by nesting, with
optional Richardson extrapolation to knock out the leading O(h^2) error.
"""

import numpy as np


def fd_partial(f, points, axis, h=1e-4):
    """Central difference of f along one coordinate."""
    points = np.asarray(points, dtype=float)
    e = np.zeros(points.shape[1])
    e[axis] = h
    return (f(points + e) - f(points - e)) / (2.0 * h)


def fd_gradient(f, points, h=1e-4):
    """Stack of fd_partial over all coordinates; shape (d, ...)."""
    d = np.asarray(points).shape[1]
    return np.stack([fd_partial(f, points, r, h) for r in range(d)])


def fd_laplacian(f, points, h=1e-4):
    points = np.asarray(points, dtype=float)
    d = points.shape[1]
    total = -2.0 * d * f(points)
    for r in range(d):
        e = np.zeros(d)
        e[r] = h
        total = total + f(points + e) + f(points - e)
    return total / (h * h)


def richardson(op, points, h):
    """(4 op(h/2) - op(h)) / 3 for an O(h^2) operator ``op(points, h)``."""
    return (4.0 * op(points, h / 2.0) - op(points, h)) / 3.0


def fd_laplacian_richardson(f, points, h=1e-3):
    return richardson(lambda p, hh: fd_laplacian(f, p, hh), points, h)


def fd_bilaplacian(f, points, h=1e-2):
    """Laplacian of the FD Laplacian, Richardson-extrapolated at both levels.

    Pure value-based fourth derivatives are roundoff-limited near eps/h^4, so
    the step is kept coarse and the O(h^2) truncation removed by Richardson.
    """

    def lap(p, hh):
        inner = lambda q: fd_laplacian(f, q, hh)
        return fd_laplacian(inner, p, hh)

    return richardson(lap, points, h)


def fd_grad_laplacian(f, points, axis, h=1e-3):
    """d/dx_axis of the FD Laplacian, Richardson-extrapolated."""

    def op(p, hh):
        return fd_partial(lambda q: fd_laplacian(f, q, hh), p, axis, hh)

    return richardson(op, points, h)


def fd_curl_2d(f, points, h=1e-4):
    """Scalar curl d(f2)/dx - d(f1)/dy of a 2D vector evaluator f -> (N, 2)."""
    dfx = fd_partial(f, points, 0, h)
    dfy = fd_partial(f, points, 1, h)
    return dfx[:, 1] - dfy[:, 0]


def fd_curl_3d(f, points, h=1e-4):
    """Vector curl of a 3D vector evaluator f -> (N, 3); returns (N, 3)."""
    d = [fd_partial(f, points, r, h) for r in range(3)]
    return np.stack(
        [
            d[1][:, 2] - d[2][:, 1],
            d[2][:, 0] - d[0][:, 2],
            d[0][:, 1] - d[1][:, 0],
        ],
        axis=1,
    )
