"""Decoupled Stokes assemblies in 2D/3D plus the coupled one-shot baseline.

Velocity is the rotated gradient of a stream function (2D) or the curl of a
vector potential (3D), both expanded in the shared feature basis, so the
discrete velocity is divergence-free by construction.  The velocity
subproblem is a biharmonic collocation system; pressure is recovered
afterwards from the gradient equation with a single interior pin row.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .features import AffineMap, DerivativeTable, FeatureBank, eval_derivatives, init_bank
from .lsq import LeastSquaresProblem, solve_lsq
from .sampling import CollocationSet

# (curl v)_c = d_a v_b - d_b v_a with (a, b) = CURL3[c]
CURL3 = ((1, 2), (2, 0), (0, 1))


@dataclass
class AssemblyTables:
    """Cached derivative tables for one collocation set (reused across
    nonlinear iterations; computing them dominates small assemblies)."""

    interior: DerivativeTable
    boundary: DerivativeTable


def build_tables(bank, amap, colloc, interior_kinds, boundary_kinds=("value", "grad")):
    return AssemblyTables(
        interior=eval_derivatives(bank, amap, colloc.interior, set(interior_kinds)),
        boundary=eval_derivatives(bank, amap, colloc.boundary, set(boundary_kinds)),
    )


@dataclass
class SolveInfo:
    rows: int
    cols: int
    rank: int
    residual_norm: float
    assemble_seconds: float = 0.0
    solve_seconds: float = 0.0


def _normal_derivative_rows(table, normals):
    rows = normals[:, 0:1] * table.grad(0)
    for r in range(1, normals.shape[1]):
        rows = rows + normals[:, r : r + 1] * table.grad(r)
    return rows


# solutions serialize as the bank seed record plus coefficients; the raw
# directions are regenerated, never stored
def _pack(bank, amap, payload):
    record = {
        "bank": {"dim": bank.dim, "count": bank.count, "shape": bank.shape,
                 "seed": bank.seed},
        "map": {"center": [float(c) for c in amap.center], "scale": amap.scale},
    }
    record.update(payload)
    return json.dumps(record)


def _unpack(text):
    record = json.loads(text)
    bank = init_bank(**record["bank"])
    amap = AffineMap(
        center=np.asarray(record["map"]["center"]), scale=record["map"]["scale"]
    )
    return record, bank, amap


# ---------------------------------------------------------------------------
# solution evaluators
# ---------------------------------------------------------------------------


@dataclass
class StreamSolution2D:
    """Stream-function coefficients; velocity = (d_y phi, -d_x phi).

    Every evaluator accepts a precomputed DerivativeTable for its points via
    ``tables`` so repeated metric evaluations share one basis sweep.
    """

    bank: FeatureBank
    amap: AffineMap
    alpha: np.ndarray

    def _tables(self, points, kinds, tables):
        return tables if tables is not None else eval_derivatives(
            self.bank, self.amap, points, kinds
        )

    def stream(self, points, tables=None):
        return self._tables(points, {"value"}, tables).value @ self.alpha

    def velocity(self, points, tables=None):
        t = self._tables(points, {"grad"}, tables)
        return np.stack([t.grad(1) @ self.alpha, -(t.grad(0) @ self.alpha)], axis=1)

    def velocity_gradient(self, points, tables=None):
        t = self._tables(points, {"hessian"}, tables)
        out = np.empty((t.n_points, 2, 2))
        for r in range(2):
            out[:, 0, r] = t.hess(r, 1) @ self.alpha
            out[:, 1, r] = -(t.hess(r, 0) @ self.alpha)
        return out

    def velocity_laplacian(self, points, tables=None):
        t = self._tables(points, {"grad_laplacian"}, tables)
        return np.stack(
            [t.grad_lap(1) @ self.alpha, -(t.grad_lap(0) @ self.alpha)], axis=1
        )

    def divergence(self, points, tables=None):
        # d_x u1 + d_y u2 = (d_xy - d_yx) phi; the two mixed tables are the
        # same array, so the two dot products cancel exactly
        t = self._tables(points, {"hessian"}, tables)
        return t.hess(0, 1) @ self.alpha - t.hess(1, 0) @ self.alpha

    def convective(self, points, tables=None):
        u = self.velocity(points, tables)
        grad = self.velocity_gradient(points, tables)
        return np.einsum("ns,ncs->nc", u, grad)

    def to_json(self) -> str:
        return _pack(self.bank, self.amap, {"alpha": self.alpha.tolist()})

    @staticmethod
    def from_json(text: str) -> "StreamSolution2D":
        record, bank, amap = _unpack(text)
        return StreamSolution2D(bank=bank, amap=amap,
                                alpha=np.asarray(record["alpha"]))


@dataclass
class PotentialSolution3D:
    """Vector-potential coefficients (3, M+1); velocity = curl of potential."""

    bank: FeatureBank
    amap: AffineMap
    alphas: np.ndarray

    def _tables(self, points, kinds, tables):
        return tables if tables is not None else eval_derivatives(
            self.bank, self.amap, points, kinds
        )

    def potential(self, points, tables=None):
        val = self._tables(points, {"value"}, tables).value
        return np.stack([val @ self.alphas[c] for c in range(3)], axis=1)

    def velocity(self, points, tables=None):
        t = self._tables(points, {"grad"}, tables)
        cols = []
        for c, (a, b) in enumerate(CURL3):
            cols.append(t.grad(a) @ self.alphas[b] - t.grad(b) @ self.alphas[a])
        return np.stack(cols, axis=1)

    def velocity_gradient(self, points, tables=None):
        t = self._tables(points, {"hessian"}, tables)
        out = np.empty((t.n_points, 3, 3))
        for c, (a, b) in enumerate(CURL3):
            for r in range(3):
                out[:, c, r] = t.hess(r, a) @ self.alphas[b] - t.hess(r, b) @ self.alphas[a]
        return out

    def velocity_laplacian(self, points, tables=None):
        t = self._tables(points, {"grad_laplacian"}, tables)
        cols = []
        for c, (a, b) in enumerate(CURL3):
            cols.append(t.grad_lap(a) @ self.alphas[b] - t.grad_lap(b) @ self.alphas[a])
        return np.stack(cols, axis=1)

    def divergence(self, points, tables=None):
        # the six terms of sum_c d_c u_c, regrouped so each symmetric mixed
        # table meets itself; each pair is the same matmul on the same array
        # and cancels exactly
        t = self._tables(points, {"hessian"}, tables)
        al = self.alphas
        return (
            (t.hess(0, 1) @ al[2] - t.hess(1, 0) @ al[2])
            + (t.hess(1, 2) @ al[0] - t.hess(2, 1) @ al[0])
            + (t.hess(2, 0) @ al[1] - t.hess(0, 2) @ al[1])
        )

    def convective(self, points, tables=None):
        u = self.velocity(points, tables)
        grad = self.velocity_gradient(points, tables)
        return np.einsum("ns,ncs->nc", u, grad)

    def to_json(self) -> str:
        return _pack(self.bank, self.amap, {"alphas": self.alphas.tolist()})

    @staticmethod
    def from_json(text: str) -> "PotentialSolution3D":
        record, bank, amap = _unpack(text)
        return PotentialSolution3D(bank=bank, amap=amap,
                                   alphas=np.asarray(record["alphas"]))


@dataclass
class PressureSolution:
    bank: FeatureBank
    amap: AffineMap
    beta: np.ndarray
    pin_point: np.ndarray
    pin_value: float = 0.0

    def pressure(self, points):
        val = eval_derivatives(self.bank, self.amap, points, {"value"}).value
        return val @ self.beta

    def gradient(self, points):
        t = eval_derivatives(self.bank, self.amap, points, {"grad"})
        return np.stack([t.grad(r) @ self.beta for r in range(self.bank.dim)], axis=1)

    def __call__(self, points):
        return self.pressure(points)

    def to_json(self) -> str:
        return _pack(self.bank, self.amap, {
            "beta": self.beta.tolist(),
            "pin_point": [float(c) for c in self.pin_point],
            "pin_value": self.pin_value,
        })

    @staticmethod
    def from_json(text: str) -> "PressureSolution":
        record, bank, amap = _unpack(text)
        return PressureSolution(
            bank=bank, amap=amap, beta=np.asarray(record["beta"]),
            pin_point=np.asarray(record["pin_point"]),
            pin_value=record["pin_value"],
        )


@dataclass
class CoupledSolution:
    """Baseline: velocity components and pressure in the same shared basis,
    solved as one coupled system.  Not divergence-free by construction."""

    bank: FeatureBank
    amap: AffineMap
    coeffs: np.ndarray  # (d, M+1) velocity components
    beta: np.ndarray    # (M+1,) pressure

    def velocity(self, points):
        val = eval_derivatives(self.bank, self.amap, points, {"value"}).value
        return np.stack([val @ c for c in self.coeffs], axis=1)

    def velocity_gradient(self, points):
        t = eval_derivatives(self.bank, self.amap, points, {"grad"})
        d = self.bank.dim
        out = np.empty((t.n_points, d, d))
        for c in range(d):
            for r in range(d):
                out[:, c, r] = t.grad(r) @ self.coeffs[c]
        return out

    def divergence(self, points):
        t = eval_derivatives(self.bank, self.amap, points, {"grad"})
        return sum(t.grad(c) @ self.coeffs[c] for c in range(self.bank.dim))

    def pressure(self, points):
        val = eval_derivatives(self.bank, self.amap, points, {"value"}).value
        return val @ self.beta


# ---------------------------------------------------------------------------
# velocity assemblies
# ---------------------------------------------------------------------------


def assemble_stokes2d_velocity(
    bank,
    amap,
    colloc: CollocationSet,
    nu: float,
    curl_f,
    bc_values=None,
    bc_normal_deriv=None,
    tables: AssemblyTables | None = None,
) -> LeastSquaresProblem:
    """Rows: nu*Bilap(phi) = curl f on interior, phi and d_n phi on boundary.

    ``bc_values`` / ``bc_normal_deriv`` carry inhomogeneous boundary data for
    manufactured flows that do not vanish on the boundary; default zero.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    ni, nj = colloc.n_interior, colloc.n_boundary
    curl_f = np.asarray(curl_f, dtype=float)
    if curl_f.shape != (ni,):
        raise ValueError(f"curl_f must have {ni} entries, got {curl_f.shape}")
    if tables is None:
        tables = build_tables(bank, amap, colloc, {"bilaplacian"})
    m1 = bank.count + 1
    a = np.empty((ni + 2 * nj, m1))
    a[:ni] = nu * tables.interior.bilaplacian
    a[ni : ni + nj] = tables.boundary.value
    a[ni + nj :] = _normal_derivative_rows(tables.boundary, colloc.normals)
    b = np.zeros(ni + 2 * nj)
    b[:ni] = curl_f
    if bc_values is not None:
        b[ni : ni + nj] = bc_values
    if bc_normal_deriv is not None:
        b[ni + nj :] = bc_normal_deriv
    blocks = [("pde", 0, ni), ("dirichlet", ni, ni + nj), ("neumann", ni + nj, ni + 2 * nj)]
    return LeastSquaresProblem(matrix=a, rhs=b, row_blocks=blocks)


def assemble_stokes3d_velocity(
    bank,
    amap,
    colloc: CollocationSet,
    nu: float,
    curl_f,
    bc_velocity=None,
    tables: AssemblyTables | None = None,
) -> LeastSquaresProblem:
    """Blocks: three biharmonic rows, interior div(potential) = 0 rows,
    potential . n = 0 rows, and curl(potential) = g rows on the boundary.

    ``curl_f`` has shape (I, 3).  ``bc_velocity`` (J, 3) carries boundary
    velocity data; the potential.n gauge rows always keep rhs zero.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    ni, nj = colloc.n_interior, colloc.n_boundary
    curl_f = np.asarray(curl_f, dtype=float)
    if curl_f.shape != (ni, 3):
        raise ValueError(f"curl_f must have shape ({ni}, 3), got {curl_f.shape}")
    if tables is None:
        tables = build_tables(bank, amap, colloc, {"bilaplacian", "grad"})
    m1 = bank.count + 1
    rows = 4 * ni + 4 * nj
    a = np.zeros((rows, 3 * m1))
    b = np.zeros(rows)

    def cols(j):
        return slice(j * m1, (j + 1) * m1)

    ti, tb = tables.interior, tables.boundary
    for c in range(3):
        a[c * ni : (c + 1) * ni, cols(c)] = nu * ti.bilaplacian
        b[c * ni : (c + 1) * ni] = curl_f[:, c]
    r0 = 3 * ni
    for j in range(3):
        a[r0 : r0 + ni, cols(j)] = ti.grad(j)
    r0 += ni
    for j in range(3):
        a[r0 : r0 + nj, cols(j)] = colloc.normals[:, j : j + 1] * tb.value
    r0 += nj
    for c, (ax, bx) in enumerate(CURL3):
        a[r0 : r0 + nj, cols(bx)] = tb.grad(ax)
        a[r0 : r0 + nj, cols(ax)] = -tb.grad(bx)
        if bc_velocity is not None:
            b[r0 : r0 + nj] = bc_velocity[:, c]
        r0 += nj
    blocks = [
        ("pde", 0, 3 * ni),
        ("div", 3 * ni, 4 * ni),
        ("phin", 4 * ni, 4 * ni + nj),
        ("curl", 4 * ni + nj, rows),
    ]
    return LeastSquaresProblem(matrix=a, rhs=b, row_blocks=blocks)


# ---------------------------------------------------------------------------
# pressure recovery
# ---------------------------------------------------------------------------


def _check_pin_point(x0, colloc):
    x0 = np.asarray(x0, dtype=float)
    lower = colloc.boundary.min(axis=0)
    upper = colloc.boundary.max(axis=0)
    if not (np.all(x0 > lower) and np.all(x0 < upper)):
        raise ValueError(f"pin point {x0} is not strictly interior")
    return x0


def assemble_pressure(
    bank,
    amap,
    colloc: CollocationSet,
    nu: float,
    f,
    velocity,
    x0,
    nonlinear: bool = False,
    pin_value: float = 0.0,
    tables: AssemblyTables | None = None,
    velocity_tables=None,
) -> LeastSquaresProblem:
    """grad(p) = f + nu*Lap(u*) [- (u*.grad)u*] rows plus one pin row.

    ``velocity`` is the already-solved velocity evaluator; its Laplacian and
    convective term are evaluated analytically from the basis derivatives
    (``velocity_tables`` lets nonlinear solvers reuse their interior tables).
    """
    d = bank.dim
    ni = colloc.n_interior
    f = np.asarray(f, dtype=float)
    if f.shape != (ni, d):
        raise ValueError(f"f must have shape ({ni}, {d}), got {f.shape}")
    x0 = _check_pin_point(x0, colloc)
    if tables is None:
        tables = build_tables(bank, amap, colloc, {"grad"}, boundary_kinds=("value",))
    rhs_field = f + nu * velocity.velocity_laplacian(
        colloc.interior, tables=velocity_tables
    )
    if nonlinear:
        rhs_field = rhs_field - velocity.convective(
            colloc.interior, tables=velocity_tables
        )
    m1 = bank.count + 1
    a = np.empty((d * ni + 1, m1))
    b = np.empty(d * ni + 1)
    for r in range(d):
        a[r * ni : (r + 1) * ni] = tables.interior.grad(r)
        b[r * ni : (r + 1) * ni] = rhs_field[:, r]
    a[-1] = eval_derivatives(bank, amap, x0[None, :], {"value"}).value[0]
    b[-1] = pin_value
    blocks = [("grad", 0, d * ni), ("pin", d * ni, d * ni + 1)]
    return LeastSquaresProblem(matrix=a, rhs=b, row_blocks=blocks)


def _solve_pressure(bank, amap, problem, x0, pin_value, method, rank_tol, scale_columns=False):
    t0 = time.perf_counter()
    sol = solve_lsq(problem, rank_tol=rank_tol, method=method, scale_columns=scale_columns)
    dt = time.perf_counter() - t0
    pressure = PressureSolution(
        bank=bank, amap=amap, beta=sol.x,
        pin_point=np.asarray(x0, dtype=float), pin_value=pin_value,
    )
    info = SolveInfo(
        rows=problem.shape[0], cols=problem.shape[1], rank=sol.rank,
        residual_norm=sol.residual_norm, solve_seconds=dt,
    )
    return pressure, info


def recover_pressure_2d(
    bank, amap, colloc, nu, f, velocity: StreamSolution2D, x0,
    nonlinear=False, pin_value=0.0, method="qr", rank_tol=None, tables=None,
    velocity_tables=None,
):
    t0 = time.perf_counter()
    problem = assemble_pressure(
        bank, amap, colloc, nu, f, velocity, x0,
        nonlinear=nonlinear, pin_value=pin_value, tables=tables,
        velocity_tables=velocity_tables,
    )
    assemble_dt = time.perf_counter() - t0
    pressure, info = _solve_pressure(bank, amap, problem, x0, pin_value, method, rank_tol)
    info.assemble_seconds = assemble_dt
    return pressure, info


def recover_pressure_3d(
    bank, amap, colloc, nu, f, velocity: PotentialSolution3D, x0,
    nonlinear=False, pin_value=0.0, method="qr", rank_tol=None, tables=None,
    velocity_tables=None,
):
    return recover_pressure_2d(
        bank, amap, colloc, nu, f, velocity, x0,
        nonlinear=nonlinear, pin_value=pin_value,
        method=method, rank_tol=rank_tol, tables=tables,
        velocity_tables=velocity_tables,
    )


# ---------------------------------------------------------------------------
# one-shot solvers
# ---------------------------------------------------------------------------


def solve_stokes_2d(
    bank, amap, colloc, nu, curl_f,
    bc_values=None, bc_normal_deriv=None, method="qr", rank_tol=None, tables=None,
):
    t0 = time.perf_counter()
    problem = assemble_stokes2d_velocity(
        bank, amap, colloc, nu, curl_f,
        bc_values=bc_values, bc_normal_deriv=bc_normal_deriv, tables=tables,
    )
    t1 = time.perf_counter()
    sol = solve_lsq(problem, rank_tol=rank_tol, method=method)
    t2 = time.perf_counter()
    velocity = StreamSolution2D(bank=bank, amap=amap, alpha=sol.x)
    info = SolveInfo(
        rows=problem.shape[0], cols=problem.shape[1], rank=sol.rank,
        residual_norm=sol.residual_norm,
        assemble_seconds=t1 - t0, solve_seconds=t2 - t1,
    )
    return velocity, info


def solve_stokes_3d(
    bank, amap, colloc, nu, curl_f,
    bc_velocity=None, method="qr", rank_tol=None, tables=None,
):
    t0 = time.perf_counter()
    problem = assemble_stokes3d_velocity(
        bank, amap, colloc, nu, curl_f, bc_velocity=bc_velocity, tables=tables
    )
    t1 = time.perf_counter()
    sol = solve_lsq(problem, rank_tol=rank_tol, method=method)
    t2 = time.perf_counter()
    m1 = bank.count + 1
    velocity = PotentialSolution3D(
        bank=bank, amap=amap, alphas=sol.x.reshape(3, m1)
    )
    info = SolveInfo(
        rows=problem.shape[0], cols=problem.shape[1], rank=sol.rank,
        residual_norm=sol.residual_norm,
        assemble_seconds=t1 - t0, solve_seconds=t2 - t1,
    )
    return velocity, info


# ---------------------------------------------------------------------------
# coupled baseline
# ---------------------------------------------------------------------------


def assemble_coupled_baseline(
    bank, amap, colloc, nu, f, dim, bc_velocity=None, x0=None, pin_value=0.0,
) -> LeastSquaresProblem:
    """Velocity components and pressure in one stacked system.

    Momentum rows -nu*Lap(u_c) + d_c p = f_c, interior divergence rows,
    velocity Dirichlet rows, and one pressure pin row (the gauge fix the
    coupled formulation needs; columns are [u_1 .. u_d, p] blocks).
    """
    if dim not in (2, 3) or bank.dim != dim:
        raise ValueError("dim must match the bank dimension")
    if not nu > 0:
        raise ValueError("nu must be positive")
    ni, nj = colloc.n_interior, colloc.n_boundary
    f = np.asarray(f, dtype=float)
    if f.shape != (ni, dim):
        raise ValueError(f"f must have shape ({ni}, {dim})")
    if x0 is None:
        x0 = 0.5 * (colloc.boundary.min(axis=0) + colloc.boundary.max(axis=0))
    x0 = _check_pin_point(x0, colloc)
    ti = eval_derivatives(bank, amap, colloc.interior, {"grad", "laplacian"})
    tb = eval_derivatives(bank, amap, colloc.boundary, {"value"})
    m1 = bank.count + 1
    rows = (dim + 1) * ni + dim * nj + 1
    a = np.zeros((rows, (dim + 1) * m1))
    b = np.zeros(rows)

    def cols(j):
        return slice(j * m1, (j + 1) * m1)

    for c in range(dim):
        a[c * ni : (c + 1) * ni, cols(c)] = -nu * ti.laplacian
        a[c * ni : (c + 1) * ni, cols(dim)] = ti.grad(c)
        b[c * ni : (c + 1) * ni] = f[:, c]
    r0 = dim * ni
    for c in range(dim):
        a[r0 : r0 + ni, cols(c)] = ti.grad(c)
    r0 += ni
    for c in range(dim):
        a[r0 : r0 + nj, cols(c)] = tb.value
        if bc_velocity is not None:
            b[r0 : r0 + nj] = bc_velocity[:, c]
        r0 += nj
    a[-1, cols(dim)] = eval_derivatives(bank, amap, np.asarray(x0)[None, :], {"value"}).value[0]
    b[-1] = pin_value
    blocks = [
        ("momentum", 0, dim * ni),
        ("div", dim * ni, (dim + 1) * ni),
        ("dirichlet", (dim + 1) * ni, (dim + 1) * ni + dim * nj),
        ("pin", rows - 1, rows),
    ]
    return LeastSquaresProblem(matrix=a, rhs=b, row_blocks=blocks)


def solve_coupled_baseline(
    bank, amap, colloc, nu, f, dim,
    bc_velocity=None, x0=None, pin_value=0.0, method="qr", rank_tol=None,
):
    t0 = time.perf_counter()
    problem = assemble_coupled_baseline(
        bank, amap, colloc, nu, f, dim,
        bc_velocity=bc_velocity, x0=x0, pin_value=pin_value,
    )
    t1 = time.perf_counter()
    sol = solve_lsq(problem, rank_tol=rank_tol, method=method)
    t2 = time.perf_counter()
    m1 = bank.count + 1
    coeffs = sol.x.reshape(dim + 1, m1)
    solution = CoupledSolution(
        bank=bank, amap=amap, coeffs=coeffs[:dim], beta=coeffs[dim]
    )
    info = SolveInfo(
        rows=problem.shape[0], cols=problem.shape[1], rank=sol.rank,
        residual_norm=sol.residual_norm,
        assemble_seconds=t1 - t0, solve_seconds=t2 - t1,
    )
    return solution, info
