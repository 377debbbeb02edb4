"""Collocation and test point generation on axis-aligned boxes.

2D sets use uniform grids (open in the interior, half-open along each side so
corners belong to exactly one side).  3D interiors use the Halton sequence;
3D boundaries are open uniform grids on each of the six faces.
"""

import csv
from dataclasses import dataclass

import numpy as np

_PRIMES = (2, 3, 5)


@dataclass(frozen=True)
class BoxDomain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower/upper must be 1D arrays of equal length")
        if not np.all(lower < upper):
            raise ValueError(f"degenerate box: lower={lower}, upper={upper}")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, points, tol=0.0) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.all(
            (points >= self.lower - tol) & (points <= self.upper + tol), axis=1
        )


@dataclass(frozen=True)
class CollocationSet:
    interior: np.ndarray  # (I, d)
    boundary: np.ndarray  # (J, d)
    normals: np.ndarray   # (J, d), outward unit vectors

    @property
    def n_interior(self) -> int:
        return self.interior.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary.shape[0]


def _open_linspace(lo, hi, n):
    # n equispaced points strictly inside (lo, hi)
    return np.linspace(lo, hi, n + 2)[1:-1]


def grid_collocation_2d(box: BoxDomain, nx: int, ny: int, nb: int) -> CollocationSet:
    """nx*ny interior points on an open uniform grid plus nb points per side.

    Each side is sampled half-open while walking the boundary counterclockwise,
    so every corner is owned by exactly one side and J = 4*nb.
    """
    if box.dim != 2:
        raise ValueError("grid_collocation_2d needs a 2D box")
    if nx < 2 or ny < 2 or nb < 2:
        raise ValueError("nx, ny, nb must all be >= 2")
    (x0, y0), (x1, y1) = box.lower, box.upper
    xs = _open_linspace(x0, x1, nx)
    ys = _open_linspace(y0, y1, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    interior = np.column_stack([gx.ravel(), gy.ravel()])

    t = np.arange(nb) / nb
    sides = [
        (np.column_stack([x0 + t * (x1 - x0), np.full(nb, y0)]), (0.0, -1.0)),
        (np.column_stack([np.full(nb, x1), y0 + t * (y1 - y0)]), (1.0, 0.0)),
        (np.column_stack([x1 - t * (x1 - x0), np.full(nb, y1)]), (0.0, 1.0)),
        (np.column_stack([np.full(nb, x0), y1 - t * (y1 - y0)]), (-1.0, 0.0)),
    ]
    boundary = np.vstack([pts for pts, _ in sides])
    normals = np.vstack([np.tile(nrm, (nb, 1)) for _, nrm in sides])
    return CollocationSet(interior=interior, boundary=boundary, normals=normals)


def _radical_inverse(indices, base):
    out = np.zeros(len(indices))
    idx = np.array(indices, dtype=np.int64)
    frac = 1.0 / base
    while np.any(idx > 0):
        out += (idx % base) * frac
        idx //= base
        frac /= base
    return out


def halton_points(dim: int, n: int, box: BoxDomain, start_index: int = 1) -> np.ndarray:
    """n Halton points (bases 2,3[,5]) with radical-inverse indices
    start_index .. start_index+n-1, rescaled into the box."""
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if n < 1:
        raise ValueError("n must be >= 1")
    if box.dim != dim:
        raise ValueError("box dimension mismatch")
    indices = np.arange(start_index, start_index + n)
    unit = np.column_stack([_radical_inverse(indices, _PRIMES[r]) for r in range(dim)])
    return box.lower + unit * (box.upper - box.lower)


def van_der_corput(n: int, base: int = 2, start_index: int = 1) -> np.ndarray:
    """1D radical-inverse sequence on [0, 1); the dim-1 restriction of Halton."""
    return _radical_inverse(np.arange(start_index, start_index + n), base)


def face_grid_boundary_3d(box: BoxDomain, n1: int, n2: int):
    """Open n1*n2 uniform grids on each of the 6 faces with outward normals.

    Face interiors only, so no point sits on an edge and every point lies on
    exactly one face.  Returns (points, normals), J = 6*n1*n2.
    """
    if box.dim != 3:
        raise ValueError("face_grid_boundary_3d needs a 3D box")
    if n1 < 2 or n2 < 2:
        raise ValueError("n1, n2 must be >= 2")
    points = []
    normals = []
    for axis in range(3):
        others = [r for r in range(3) if r != axis]
        u = _open_linspace(box.lower[others[0]], box.upper[others[0]], n1)
        v = _open_linspace(box.lower[others[1]], box.upper[others[1]], n2)
        gu, gv = np.meshgrid(u, v, indexing="ij")
        for side, coord in ((-1.0, box.lower[axis]), (1.0, box.upper[axis])):
            face = np.empty((n1 * n2, 3))
            face[:, axis] = coord
            face[:, others[0]] = gu.ravel()
            face[:, others[1]] = gv.ravel()
            nrm = np.zeros(3)
            nrm[axis] = side
            points.append(face)
            normals.append(np.tile(nrm, (n1 * n2, 1)))
    return np.vstack(points), np.vstack(normals)


def halton_collocation_3d(
    box: BoxDomain, n_interior: int, n_face1: int, n_face2: int, start_index: int = 1
) -> CollocationSet:
    interior = halton_points(3, n_interior, box, start_index=start_index)
    boundary, normals = face_grid_boundary_3d(box, n_face1, n_face2)
    return CollocationSet(interior=interior, boundary=boundary, normals=normals)


def eval_grid_2d(box: BoxDomain, n_per_side: int = 111) -> np.ndarray:
    """Closed uniform evaluation grid (boundary included), n_per_side^2 points."""
    xs = np.linspace(box.lower[0], box.upper[0], n_per_side)
    ys = np.linspace(box.lower[1], box.upper[1], n_per_side)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def points_to_csv(path, points, normals=None):
    points = np.atleast_2d(points)
    d = points.shape[1]
    header = ["x", "y", "z"][:d]
    if normals is not None:
        header += ["nx", "ny", "nz"][:d]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(points.shape[0]):
            row = [repr(float(c)) for c in points[i]]
            if normals is not None:
                row += [repr(float(c)) for c in normals[i]]
            writer.writerow(row)
