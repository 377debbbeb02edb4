"""Randomized tanh ridge-feature basis with analytic derivatives up to fourth order.

The basis consists of a constant feature plus M features of the form
``tanh(gamma * (s_m . xhat + r_m))`` where ``xhat`` is the physical point
mapped into the closed unit ball, the directions ``s_m`` are uniform on the
sphere and the offsets ``r_m`` uniform on [0, 1].  Hidden parameters are
fixed after construction; only output coefficients are ever solved for.
"""

import json
from dataclasses import dataclass

import numpy as np

DERIVATIVE_KINDS = (
    "value",
    "grad",
    "hessian",
    "laplacian",
    "grad_laplacian",
    "bilaplacian",
    "third",
    "hessian_laplacian",
)


@dataclass(frozen=True)
class FeatureBank:
    """Fixed hidden-layer parameters of the randomized basis.

    ``directions`` has shape (count, dim) with unit rows, ``offsets`` shape
    (count,) with entries in [0, 1].  Banks are immutable and reconstructible
    bit-for-bit from ``(dim, count, shape, seed)``.
    """

    dim: int
    count: int
    shape: float
    seed: int
    directions: np.ndarray
    offsets: np.ndarray

    def to_json(self) -> str:
        return json.dumps(
            {"dim": self.dim, "count": self.count, "shape": self.shape, "seed": self.seed}
        )

    @staticmethod
    def from_json(text: str) -> "FeatureBank":
        rec = json.loads(text)
        return init_bank(rec["dim"], rec["count"], rec["shape"], rec["seed"])


@dataclass(frozen=True)
class AffineMap:
    """Map physical coordinates to the unit ball: xhat = (x - center) / scale."""

    center: np.ndarray
    scale: float

    def to_unit(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.center) / self.scale

    @staticmethod
    def for_box(lower, upper) -> "AffineMap":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        center = 0.5 * (lower + upper)
        scale = 0.5 * float(np.linalg.norm(upper - lower))
        return AffineMap(center=center, scale=scale)

    @staticmethod
    def identity(dim: int) -> "AffineMap":
        return AffineMap(center=np.zeros(dim), scale=1.0)


def init_bank(dim: int, count: int, shape: float, seed: int) -> FeatureBank:
    """Draw the fixed hidden parameters: Gaussian directions normalized to the
    sphere and uniform offsets on [0, 1].  Deterministic in ``seed``."""
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not shape > 0:
        raise ValueError(f"shape must be positive, got {shape}")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((count, dim))
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    directions = raw / norms
    offsets = rng.uniform(0.0, 1.0, size=count)
    directions.setflags(write=False)
    offsets.setflags(write=False)
    return FeatureBank(
        dim=dim, count=count, shape=float(shape), seed=int(seed),
        directions=directions, offsets=offsets,
    )


def tanh_chain(z):
    """tanh and its first four derivatives, all closed forms in sigma = tanh(z)."""
    z = np.asarray(z, dtype=float)
    s = np.tanh(z)
    s1 = 1.0 - s * s
    s2 = -2.0 * s * s1
    s3 = s1 * (6.0 * s * s - 2.0)
    s4 = s1 * s * (16.0 - 24.0 * s * s)
    return s, s1, s2, s3, s4


class DerivativeTable:
    """Dense (N, M+1) matrices of basis values and requested derivatives.

    Column 0 is the constant feature, so all of its derivative columns are
    exactly zero.  Mixed partials are stored once under a sorted index key and
    shared between the symmetric orderings, making cancellation identities
    (e.g. the divergence of a curl) exact in floating point.
    """

    def __init__(self, dim, n_points, data):
        self.dim = dim
        self.n_points = n_points
        self._data = data

    @property
    def value(self) -> np.ndarray:
        return self._data["value"]

    def grad(self, r: int) -> np.ndarray:
        return self._data["grad"][r]

    def hess(self, i: int, j: int) -> np.ndarray:
        return self._data["hessian"][tuple(sorted((i, j)))]

    @property
    def laplacian(self) -> np.ndarray:
        return self._data["laplacian"]

    def grad_lap(self, r: int) -> np.ndarray:
        return self._data["grad_laplacian"][r]

    @property
    def bilaplacian(self) -> np.ndarray:
        return self._data["bilaplacian"]

    def third(self, i: int, j: int, k: int) -> np.ndarray:
        return self._data["third"][tuple(sorted((i, j, k)))]

    def hess_lap(self, i: int, j: int) -> np.ndarray:
        return self._data["hessian_laplacian"][tuple(sorted((i, j)))]

    def kinds(self):
        return tuple(self._data.keys())


def eval_derivatives(bank: FeatureBank, amap: AffineMap, points, request) -> DerivativeTable:
    """Evaluate basis values / derivatives of the requested kinds at ``points``.

    One activation-chain evaluation per (point, feature) serves every
    requested kind.  Physical-space derivatives carry one ``1/scale`` chain
    factor per order.  Points must land inside the unit ball after mapping
    (1e-9 slack).
    """
    request = set(request)
    unknown = request - set(DERIVATIVE_KINDS)
    if unknown:
        raise ValueError(f"unknown derivative kinds: {sorted(unknown)}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != bank.dim:
        raise ValueError(f"points have dim {points.shape[1]}, bank has dim {bank.dim}")
    xhat = amap.to_unit(points)
    radius = np.linalg.norm(xhat, axis=1)
    if radius.size and radius.max() > 1.0 + 1e-9:
        raise ValueError(
            f"{int((radius > 1.0 + 1e-9).sum())} point(s) map outside the unit ball "
            f"(max radius {radius.max():.6g})"
        )

    n = points.shape[0]
    d = bank.dim
    m1 = bank.count + 1
    g = bank.shape / amap.scale  # chain factor per derivative order
    s = bank.directions  # (M, d)

    z = bank.shape * (xhat @ s.T + bank.offsets)  # (N, M)
    sig = np.tanh(z)
    need = {
        "value": 0, "grad": 1, "hessian": 2, "laplacian": 2,
        "grad_laplacian": 3, "third": 3, "bilaplacian": 4, "hessian_laplacian": 4,
    }
    top = max(need[k] for k in request) if request else 0
    chain = [sig]
    if top >= 1:
        chain.append(1.0 - sig * sig)
    if top >= 2:
        chain.append(-2.0 * sig * chain[1])
    if top >= 3:
        chain.append(chain[1] * (6.0 * sig * sig - 2.0))
    if top >= 4:
        chain.append(chain[1] * sig * (16.0 - 24.0 * sig * sig))

    def with_const(mat):
        out = np.zeros((n, m1))
        out[:, 1:] = mat
        return out

    data = {}
    if "value" in request:
        tab = with_const(sig)
        tab[:, 0] = 1.0
        data["value"] = tab
    if "grad" in request:
        data["grad"] = tuple(with_const(g * s[:, r] * chain[1]) for r in range(d))
    if "hessian" in request or "laplacian" in request:
        gg = g * g
        diag = [with_const(gg * s[:, r] * s[:, r] * chain[2]) for r in range(d)]
        if "hessian" in request:
            hess = {}
            for i in range(d):
                for j in range(i, d):
                    hess[(i, j)] = diag[i] if i == j else with_const(
                        gg * s[:, i] * s[:, j] * chain[2]
                    )
            data["hessian"] = hess
        if "laplacian" in request:
            # summed from the pure-second tables so that the trace identity
            # holds exactly, not merely to rounding
            lap = diag[0].copy()
            for r in range(1, d):
                lap += diag[r]
            data["laplacian"] = lap
    if "grad_laplacian" in request:
        g3 = g ** 3
        data["grad_laplacian"] = tuple(
            with_const(g3 * s[:, r] * chain[3]) for r in range(d)
        )
    if "third" in request:
        g3 = g ** 3
        third = {}
        for i in range(d):
            for j in range(i, d):
                for k in range(j, d):
                    third[(i, j, k)] = with_const(
                        g3 * s[:, i] * s[:, j] * s[:, k] * chain[3]
                    )
        data["third"] = third
    if "bilaplacian" in request:
        data["bilaplacian"] = with_const(g ** 4 * chain[4])
    if "hessian_laplacian" in request:
        g4 = g ** 4
        hl = {}
        for i in range(d):
            for j in range(i, d):
                hl[(i, j)] = with_const(g4 * s[:, i] * s[:, j] * chain[4])
        data["hessian_laplacian"] = hl

    return DerivativeTable(dim=d, n_points=n, data=data)
