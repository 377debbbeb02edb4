"""Manufactured benchmark cases with closed-form forcing.

Each exact field is a sum of separable terms, one 1D factor per axis, and a
factor knows its own derivatives up to third order.  All velocity/pressure
derivatives, the forcing f = -nu*Lap(u) + grad(p) (+ (u.grad)u when
nonlinear) and the first derivatives of f then follow mechanically, which is
what the 2D/3D assemblies consume.  Every closed form here is cross-checked
against finite differences in the test suite before the solvers rely on it.
"""

from dataclasses import dataclass
from math import comb, pi, sqrt
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .sampling import BoxDomain

CASE_NAMES = ("stokes2d-kovasznay", "ns2d-cavitylike", "stokes3d-exp", "ns3d-trig")

# A factor maps (t, order) -> order-th derivative values, order 0..3.
Factor = Callable[[np.ndarray, int], np.ndarray]


def poly_factor(coeffs: Sequence[float]) -> Factor:
    derivs = [np.asarray(coeffs, dtype=float)]
    for _ in range(3):
        derivs.append(npoly.polyder(derivs[-1]) if derivs[-1].size > 1 else np.zeros(1))

    def f(t, order):
        return npoly.polyval(t, derivs[order])

    return f


def sin_factor(freq: float, phase: float = 0.0) -> Factor:
    def f(t, order):
        return freq**order * np.sin(freq * t + phase + order * pi / 2.0)

    return f


def cos_factor(freq: float) -> Factor:
    return sin_factor(freq, phase=pi / 2.0)


def exp_factor(rate: float) -> Factor:
    def f(t, order):
        return rate**order * np.exp(rate * t)

    return f


def exp_cos_pi_factor() -> Factor:
    # g = exp(cos(pi t)); chain-rule derivatives written out once
    def f(t, order):
        s = np.sin(pi * t)
        c = np.cos(pi * t)
        g = np.exp(c)
        if order == 0:
            return g
        if order == 1:
            return -pi * s * g
        if order == 2:
            return pi**2 * (s * s - c) * g
        if order == 3:
            return pi**3 * s * (1.0 + 3.0 * c - s * s) * g
        raise ValueError(order)

    return f


def exp_sin_pi_factor() -> Factor:
    def f(t, order):
        s = np.sin(pi * t)
        c = np.cos(pi * t)
        g = np.exp(s)
        if order == 0:
            return g
        if order == 1:
            return pi * c * g
        if order == 2:
            return pi**2 * (c * c - s) * g
        if order == 3:
            return pi**3 * c * (c * c - 3.0 * s - 1.0) * g
        raise ValueError(order)

    return f


def product_factor(f: Factor, g: Factor) -> Factor:
    # Leibniz rule for a product of two factors on the same axis
    def h(t, order):
        total = np.zeros_like(np.asarray(t, dtype=float))
        for i in range(order + 1):
            total = total + comb(order, i) * f(t, i) * g(t, order - i)
        return total

    return h


class SeparableField:
    """Sum of separable terms (coeff, per-axis factors; None = constant)."""

    def __init__(self, dim: int, terms):
        self.dim = dim
        self.terms = [(float(c), tuple(fs)) for c, fs in terms]
        for _, fs in self.terms:
            if len(fs) != dim:
                raise ValueError("each term needs one factor slot per axis")

    def deriv(self, points: np.ndarray, orders) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(points.shape[0])
        for coeff, factors in self.terms:
            term = np.full(points.shape[0], coeff)
            dead = False
            for axis, (fac, order) in enumerate(zip(factors, orders)):
                if fac is None:
                    if order > 0:
                        dead = True
                        break
                    continue
                term = term * fac(points[:, axis], order)
            if not dead:
                out += term
        return out

    def __call__(self, points) -> np.ndarray:
        return self.deriv(points, (0,) * self.dim)


def _unit(dim, axis):
    e = [0] * dim
    e[axis] = 1
    return tuple(e)


@dataclass(frozen=True)
class BenchmarkCase:
    """Exact (u, p) pair with viscosity, domain and derived forcing.

    ``stream`` (2D only) is a closed-form scalar whose rotated gradient is the
    exact velocity; it supplies boundary data when the exact flow does not
    vanish on the boundary.  ``homogeneous_boundary`` marks cases with u = 0
    on the whole boundary.
    """

    name: str
    dim: int
    domain: BoxDomain
    nu: float
    nonlinear: bool
    homogeneous_boundary: bool
    velocity_fields: tuple
    pressure_field: SeparableField
    stream_field: Optional[SeparableField] = None

    # --- exact velocity and derivatives ---

    def velocity(self, points) -> np.ndarray:
        return np.stack([f(points) for f in self.velocity_fields], axis=1)

    def velocity_gradient(self, points) -> np.ndarray:
        """V[n, c, r] = d u_c / d x_r."""
        d = self.dim
        pts = np.atleast_2d(points)
        out = np.empty((pts.shape[0], d, d))
        for c, f in enumerate(self.velocity_fields):
            for r in range(d):
                out[:, c, r] = f.deriv(pts, _unit(d, r))
        return out

    def velocity_hessian(self, points) -> np.ndarray:
        """H[n, c, r, s] = d2 u_c / (d x_r d x_s)."""
        d = self.dim
        pts = np.atleast_2d(points)
        out = np.empty((pts.shape[0], d, d, d))
        for c, f in enumerate(self.velocity_fields):
            for r in range(d):
                for s in range(r, d):
                    orders = [0] * d
                    orders[r] += 1
                    orders[s] += 1
                    val = f.deriv(pts, tuple(orders))
                    out[:, c, r, s] = val
                    out[:, c, s, r] = val
        return out

    def velocity_laplacian(self, points) -> np.ndarray:
        hess = self.velocity_hessian(points)
        return np.einsum("ncrr->nc", hess)

    def velocity_grad_laplacian(self, points) -> np.ndarray:
        """G[n, c, r] = d (Lap u_c) / d x_r."""
        d = self.dim
        pts = np.atleast_2d(points)
        out = np.zeros((pts.shape[0], d, d))
        for c, f in enumerate(self.velocity_fields):
            for r in range(d):
                for s in range(d):
                    orders = [0] * d
                    orders[r] += 1
                    orders[s] += 2
                    out[:, c, r] += f.deriv(pts, tuple(orders))
        return out

    def divergence(self, points) -> np.ndarray:
        grad = self.velocity_gradient(points)
        return np.einsum("ncc->n", grad)

    # --- exact pressure ---

    def pressure(self, points) -> np.ndarray:
        return self.pressure_field(points)

    def pressure_gradient(self, points) -> np.ndarray:
        d = self.dim
        pts = np.atleast_2d(points)
        return np.stack(
            [self.pressure_field.deriv(pts, _unit(d, r)) for r in range(d)], axis=1
        )

    def pressure_hessian(self, points) -> np.ndarray:
        d = self.dim
        pts = np.atleast_2d(points)
        out = np.empty((pts.shape[0], d, d))
        for r in range(d):
            for s in range(r, d):
                orders = [0] * d
                orders[r] += 1
                orders[s] += 1
                val = self.pressure_field.deriv(pts, tuple(orders))
                out[:, r, s] = val
                out[:, s, r] = val
        return out

    # --- forcing ---

    def forcing(self, points) -> np.ndarray:
        f = -self.nu * self.velocity_laplacian(points) + self.pressure_gradient(points)
        if self.nonlinear:
            u = self.velocity(points)
            grad = self.velocity_gradient(points)
            f = f + np.einsum("ns,ncs->nc", u, grad)
        return f

    def forcing_gradient(self, points) -> np.ndarray:
        """F[n, c, r] = d f_c / d x_r."""
        out = -self.nu * self.velocity_grad_laplacian(points) + self.pressure_hessian(
            points
        )
        if self.nonlinear:
            u = self.velocity(points)
            grad = self.velocity_gradient(points)
            hess = self.velocity_hessian(points)
            out = out + np.einsum("nsr,ncs->ncr", grad, grad)
            out = out + np.einsum("ns,ncsr->ncr", u, hess)
        return out

    def curl_forcing(self, points) -> np.ndarray:
        """Scalar curl of f in 2D, vector curl in 3D."""
        fg = self.forcing_gradient(points)
        if self.dim == 2:
            return fg[:, 1, 0] - fg[:, 0, 1]
        return np.stack(
            [
                fg[:, 2, 1] - fg[:, 1, 2],
                fg[:, 0, 2] - fg[:, 2, 0],
                fg[:, 1, 0] - fg[:, 0, 1],
            ],
            axis=1,
        )

    # --- 2D stream-function boundary data ---

    def stream(self, points) -> np.ndarray:
        if self.stream_field is None:
            raise ValueError(f"case {self.name} carries no stream function")
        return self.stream_field(points)

    def stream_normal_derivative(self, points, normals) -> np.ndarray:
        d = self.dim
        pts = np.atleast_2d(points)
        grad = np.stack(
            [self.stream_field.deriv(pts, _unit(d, r)) for r in range(d)], axis=1
        )
        return np.einsum("nr,nr->n", grad, np.atleast_2d(normals))


def kovasznay_decay_rate(nu: float) -> float:
    return 1.0 / (2.0 * nu) - sqrt(1.0 / (4.0 * nu * nu) + 4.0 * pi * pi)


def _build_stokes2d_kovasznay(nu: float) -> BenchmarkCase:
    zeta = kovasznay_decay_rate(nu)
    ex = exp_factor(zeta)
    c2 = cos_factor(2 * pi)
    s2 = sin_factor(2 * pi)
    u = SeparableField(2, [(1.0, (None, None)), (-1.0, (ex, c2))])
    v = SeparableField(2, [(zeta / (2 * pi), (ex, s2))])
    p = SeparableField(2, [(0.5, (exp_factor(2 * zeta), None))])
    stream = SeparableField(
        2, [(1.0, (None, poly_factor([0.0, 1.0]))), (-1.0 / (2 * pi), (ex, s2))]
    )
    return BenchmarkCase(
        name="stokes2d-kovasznay",
        dim=2,
        domain=BoxDomain(lower=(0.0, -0.5), upper=(2.0, 1.5)),
        nu=nu,
        nonlinear=False,
        homogeneous_boundary=False,
        velocity_fields=(u, v),
        pressure_field=p,
        stream_field=stream,
    )


def _build_ns2d_cavitylike(nu: float) -> BenchmarkCase:
    g = poly_factor([0.0, 16.0, -48.0, 32.0])        # 16 y (y-1) (2y-1)
    h = poly_factor([0.0, 0.0, 1.0, -2.0, 1.0])      # y^2 (y-1)^2
    c2x = cos_factor(2 * pi)
    u = SeparableField(2, [(0.5, (None, g)), (-0.5, (c2x, g))])  # sin^2 = (1-cos)/2
    v = SeparableField(2, [(-8.0 * pi, (sin_factor(2 * pi), h))])
    p = SeparableField(2, [(1.0, (sin_factor(pi), cos_factor(pi)))])
    stream = SeparableField(2, [(4.0, (None, h)), (-4.0, (c2x, h))])
    return BenchmarkCase(
        name="ns2d-cavitylike",
        dim=2,
        domain=BoxDomain(lower=(0.0, 0.0), upper=(1.0, 1.0)),
        nu=nu,
        nonlinear=True,
        homogeneous_boundary=True,
        velocity_fields=(u, v),
        pressure_field=p,
        stream_field=stream,
    )


def _build_stokes3d_exp(nu: float) -> BenchmarkCase:
    ec = exp_cos_pi_factor()
    es = exp_sin_pi_factor()
    sp = sin_factor(pi)
    u = SeparableField(3, [(1.0, (None, ec, sp))])
    v = SeparableField(3, [(1.0, (sp, None, ec))])
    w = SeparableField(3, [(1.0, (ec, sp, None))])
    p = SeparableField(3, [(1.0, (ec, es, None)), (1.0, (es, None, ec))])
    return BenchmarkCase(
        name="stokes3d-exp",
        dim=3,
        domain=BoxDomain(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0, 1.0)),
        nu=nu,
        nonlinear=False,
        homogeneous_boundary=False,
        velocity_fields=(u, v, w),
        pressure_field=p,
    )


def _build_ns3d_trig(nu: float) -> BenchmarkCase:
    lin = poly_factor([-1.0, 1.0])                    # t - 1
    s1 = sin_factor(1.0)
    c1 = cos_factor(1.0)
    ls = product_factor(lin, s1)                      # (t-1) sin t
    u = SeparableField(
        3, [(2.0, (None, ls, ls)), (-2.0, (None, ls, c1)), (-2.0, (None, c1, ls))]
    )
    v = SeparableField(
        3, [(2.0, (ls, None, ls)), (-2.0, (c1, None, ls)), (-2.0, (ls, None, c1))]
    )
    w = SeparableField(
        3, [(2.0, (ls, ls, None)), (-2.0, (ls, c1, None)), (-2.0, (c1, ls, None))]
    )
    t = poly_factor([0.0, 1.0])
    t3 = poly_factor([0.0, 0.0, 0.0, 1.0])
    p = SeparableField(
        3,
        [(1.0, (t, t, t)), (1.0, (t3, t3, t)), (-5.0 / 32.0, (None, None, None))],
    )
    return BenchmarkCase(
        name="ns3d-trig",
        dim=3,
        domain=BoxDomain(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0, 1.0)),
        nu=nu,
        nonlinear=True,
        homogeneous_boundary=False,
        velocity_fields=(u, v, w),
        pressure_field=p,
    )


_BUILDERS = {
    "stokes2d-kovasznay": _build_stokes2d_kovasznay,
    "ns2d-cavitylike": _build_ns2d_cavitylike,
    "stokes3d-exp": _build_stokes3d_exp,
    "ns3d-trig": _build_ns3d_trig,
}


def make_case(name: str, nu: float) -> BenchmarkCase:
    if name not in _BUILDERS:
        raise ValueError(f"unknown case {name!r}; choose from {CASE_NAMES}")
    if not nu > 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    return _BUILDERS[name](float(nu))
