"""Verification of the curl identities behind the nonlinear formulations.

2D: curl((u.grad)u) = -(curl phi . grad) Lap phi for u = curl of a stream
function.  3D: curl((u.grad)u) = (Lap phi . grad) curl phi -
(curl phi . grad) Lap phi, valid when div phi = 0, which is enforced
structurally here by building phi as the curl of an arbitrary potential chi.

Each check finite-differences the analytically evaluated advection term on
one side and evaluates the other side fully analytically from the basis
derivative tables; the returned number is the max relative discrepancy.
"""

import numpy as np

from . import fd
from .features import eval_derivatives
from .stokes import CURL3

_2D_KINDS = {"grad", "hessian", "grad_laplacian"}
_3D_KINDS = {"hessian", "laplacian", "third", "grad_laplacian", "hessian_laplacian"}


def _rel_max(lhs, rhs):
    scale = max(float(np.max(np.abs(rhs))), 1e-14)
    return float(np.max(np.abs(lhs - rhs)) / scale)


def verify_curl_identity_2d(bank, amap, alpha, points, step=1e-4) -> float:
    """Max relative discrepancy of the 2D advection-curl identity."""
    alpha = np.asarray(alpha, dtype=float)
    points = np.atleast_2d(points)

    def advection(q):
        t = eval_derivatives(bank, amap, q, _2D_KINDS)
        u = np.stack([t.grad(1) @ alpha, -(t.grad(0) @ alpha)], axis=1)
        grad_u = np.empty((q.shape[0], 2, 2))
        for r in range(2):
            grad_u[:, 0, r] = t.hess(r, 1) @ alpha
            grad_u[:, 1, r] = -(t.hess(r, 0) @ alpha)
        return np.einsum("ns,ncs->nc", u, grad_u)

    lhs = fd.fd_curl_2d(advection, points, h=step)

    t = eval_derivatives(bank, amap, points, _2D_KINDS)
    u1 = t.grad(1) @ alpha
    u2 = -(t.grad(0) @ alpha)
    rhs = -(u1 * (t.grad_lap(0) @ alpha) + u2 * (t.grad_lap(1) @ alpha))
    return _rel_max(lhs, rhs)


class CurlPotentialField3D:
    """phi = curl(chi) for a 3-component potential chi in the shared basis.

    div phi = 0 holds structurally, so the field satisfies the hypothesis of
    the 3D identity.  Derivatives of phi of order k are combinations of
    order k+1 tables of chi.
    """

    def __init__(self, bank, amap, chis):
        self.bank = bank
        self.amap = amap
        self.chis = np.asarray(chis, dtype=float)
        if self.chis.shape != (3, bank.count + 1):
            raise ValueError("chis must have shape (3, M+1)")

    def _tables(self, points):
        return eval_derivatives(self.bank, self.amap, points, _3D_KINDS)

    def velocity(self, points, t=None):
        """u = curl phi = grad(div chi) - Lap chi."""
        t = t or self._tables(points)
        cols = []
        for c in range(3):
            val = -(t.laplacian @ self.chis[c])
            for s in range(3):
                val = val + t.hess(c, s) @ self.chis[s]
            cols.append(val)
        return np.stack(cols, axis=1)

    def velocity_gradient(self, points, t=None):
        t = t or self._tables(points)
        n = t.n_points
        out = np.empty((n, 3, 3))
        for c in range(3):
            for r in range(3):
                val = -(t.grad_lap(r) @ self.chis[c])
                for s in range(3):
                    val = val + t.third(r, c, s) @ self.chis[s]
                out[:, c, r] = val
        return out

    def advection(self, points):
        t = self._tables(points)
        u = self.velocity(points, t)
        grad_u = self.velocity_gradient(points, t)
        return np.einsum("ns,ncs->nc", u, grad_u)

    def potential_laplacian(self, points, t=None):
        """Lap phi, componentwise, via third-order tables of chi."""
        t = t or self._tables(points)
        cols = []
        for c, (a, b) in enumerate(CURL3):
            cols.append(t.grad_lap(a) @ self.chis[b] - t.grad_lap(b) @ self.chis[a])
        return np.stack(cols, axis=1)

    def potential_laplacian_gradient(self, points, t=None):
        """G[n, c, r] = d_r (Lap phi_c), via fourth-order tables of chi."""
        t = t or self._tables(points)
        n = t.n_points
        out = np.empty((n, 3, 3))
        for c, (a, b) in enumerate(CURL3):
            for r in range(3):
                out[:, c, r] = (
                    t.hess_lap(r, a) @ self.chis[b] - t.hess_lap(r, b) @ self.chis[a]
                )
        return out


def verify_curl_identity_3d(bank, amap, chis, points, step=1e-4) -> float:
    """Max relative discrepancy of the 3D advection-curl identity."""
    field = CurlPotentialField3D(bank, amap, chis)
    points = np.atleast_2d(points)
    lhs = fd.fd_curl_3d(field.advection, points, h=step)

    t = field._tables(points)
    u = field.velocity(points, t)
    grad_u = field.velocity_gradient(points, t)
    lap_phi = field.potential_laplacian(points, t)
    grad_lap_phi = field.potential_laplacian_gradient(points, t)
    rhs = np.einsum("nr,ncr->nc", lap_phi, grad_u) - np.einsum(
        "nr,ncr->nc", u, grad_lap_phi
    )
    return _rel_max(lhs, rhs)


def vorticity_consistency_3d(bank, amap, chis, points) -> float:
    """curl(curl phi) = -Lap phi for the structurally divergence-free phi;
    returns the max absolute mismatch relative to the field scale."""
    field = CurlPotentialField3D(bank, amap, chis)
    t = field._tables(points)
    grad_u = field.velocity_gradient(points, t)
    curl_u = np.stack(
        [grad_u[:, b, a] - grad_u[:, a, b] for (a, b) in CURL3], axis=1
    )
    lap_phi = field.potential_laplacian(points, t)
    return _rel_max(curl_u, -lap_phi)
