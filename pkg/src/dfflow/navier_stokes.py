"""Gauss-Newton and Picard iterations for the decoupled velocity subproblem.

The convection term is linearized at the current iterate, so every sweep is a
linear least-squares problem over the same stream-function (2D) or
vector-potential (3D) coefficients with the Stokes boundary rows unchanged.
At a zero iterate every scheme reduces exactly to the Stokes assembly.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .lsq import LeastSquaresProblem, solve_lsq
from .stokes import (
    CURL3,
    PotentialSolution3D,
    StreamSolution2D,
    assemble_pressure,
    _normal_derivative_rows,
    _solve_pressure,
    build_tables,
)

GN_KINDS_2D = {"bilaplacian", "grad", "grad_laplacian", "hessian"}
GN_KINDS_3D = {"bilaplacian", "grad", "grad_laplacian", "hessian", "laplacian"}

_SCHEMES = ("I", "II", "III")


@dataclass
class NonlinearConfig:
    """Iteration policy for the nonlinear velocity solve.

    init_strategy: "zero" starts the main scheme from a zero iterate;
    "stokes" from one Stokes solve; "scheme-I" runs ``warmup_iters`` Picard
    scheme-I sweeps from zero (the first of which is the Stokes solve).

    Update norms are relative, norm(a_new - a_old) / max(1, norm(a_new)):
    raw coefficient vectors of a nearly dependent feature set are only
    determined up to solver noise, so an absolute measure would never reach a
    tight tolerance.  Solves default to the truncated-SVD backend with unit
    column scaling for the same reason.
    """

    max_iters: int = 40
    update_tol: float = 1e-10
    init_strategy: str = "scheme-I"
    warmup_iters: int = 5
    scheme: str = "gauss-newton"
    divergence_growth: float = 10.0
    damping: float = 1.0
    solver_method: str = "svd"
    rank_tol: float | None = 1e-9
    scale_columns: bool = True

    def validate(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.update_tol > 0:
            raise ValueError("update_tol must be positive")
        if self.init_strategy not in ("zero", "stokes", "scheme-I"):
            raise ValueError(f"unknown init strategy {self.init_strategy!r}")
        if self.scheme not in ("gauss-newton", "picard-I", "picard-II", "picard-III"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.init_strategy == "scheme-I" and self.warmup_iters < 0:
            raise ValueError("warmup_iters must be >= 0")


@dataclass
class IterationRecord:
    index: int
    stage: str  # "warmup" or "main"
    residual_norm: float
    update_norm: float
    seconds: float


@dataclass
class IterationHistory:
    records: list = field(default_factory=list)
    status: str = "max-iters"  # converged | max-iters | diverged

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def main_iterations(self) -> int:
        return sum(1 for r in self.records if r.stage == "main")

    def write_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "stage", "residual", "update_norm", "seconds"])
            for r in self.records:
                writer.writerow(
                    [r.index, r.stage, repr(r.residual_norm), repr(r.update_norm), repr(r.seconds)]
                )


# ---------------------------------------------------------------------------
# 2D steps
# ---------------------------------------------------------------------------


def _iterate_fields_2d(tables, alpha):
    ti = tables.interior
    u1 = ti.grad(1) @ alpha
    u2 = -(ti.grad(0) @ alpha)
    lap_u1 = ti.grad_lap(1) @ alpha
    lap_u2 = -(ti.grad_lap(0) @ alpha)
    return u1, u2, lap_u1, lap_u2


def _stack_2d(a_int, rhs_int, colloc, tables, bc_values, bc_normal_deriv):
    ni, nj = colloc.n_interior, colloc.n_boundary
    tb = tables.boundary
    a = np.empty((ni + 2 * nj, a_int.shape[1]))
    a[:ni] = a_int
    a[ni : ni + nj] = tb.value
    a[ni + nj :] = _normal_derivative_rows(tb, colloc.normals)
    b = np.zeros(ni + 2 * nj)
    b[:ni] = rhs_int
    if bc_values is not None:
        b[ni : ni + nj] = bc_values
    if bc_normal_deriv is not None:
        b[ni + nj :] = bc_normal_deriv
    blocks = [("pde", 0, ni), ("dirichlet", ni, ni + nj), ("neumann", ni + nj, ni + 2 * nj)]
    return LeastSquaresProblem(matrix=a, rhs=b, row_blocks=blocks)


def gn_step_2d(
    bank, amap, colloc, nu, curl_f, alpha_k,
    bc_values=None, bc_normal_deriv=None, tables=None,
) -> LeastSquaresProblem:
    """One Gauss-Newton linearization around alpha_k, assembled directly in
    the next iterate's coefficients."""
    alpha_k = np.asarray(alpha_k, dtype=float)
    if not np.all(np.isfinite(alpha_k)):
        raise ValueError("non-finite linearization point")
    if tables is None:
        tables = build_tables(bank, amap, colloc, GN_KINDS_2D)
    ti = tables.interior
    u1, u2, lap_u1, lap_u2 = _iterate_fields_2d(tables, alpha_k)
    a_int = (
        nu * ti.bilaplacian
        - u1[:, None] * ti.grad_lap(0)
        - u2[:, None] * ti.grad_lap(1)
        + lap_u2[:, None] * ti.grad(1)
        + lap_u1[:, None] * ti.grad(0)
    )
    rhs = np.asarray(curl_f, dtype=float) + u1 * lap_u2 - u2 * lap_u1
    return _stack_2d(a_int, rhs, colloc, tables, bc_values, bc_normal_deriv)


def _picard_int_2d(scheme, nu, tables, alpha_k):
    ti = tables.interior
    u1, u2, lap_u1, lap_u2 = _iterate_fields_2d(tables, alpha_k)
    if scheme == "I":
        return (
            nu * ti.bilaplacian
            - u1[:, None] * ti.grad_lap(0)
            - u2[:, None] * ti.grad_lap(1)
        )
    if scheme == "II":
        return (
            nu * ti.bilaplacian
            + lap_u2[:, None] * ti.grad(1)
            + lap_u1[:, None] * ti.grad(0)
        )
    # scheme III is by definition the exact average of I and II
    return 0.5 * (
        _picard_int_2d("I", nu, tables, alpha_k)
        + _picard_int_2d("II", nu, tables, alpha_k)
    )


# ---------------------------------------------------------------------------
# 3D steps
# ---------------------------------------------------------------------------


def _iterate_fields_3d(tables, alphas):
    """Velocity, velocity gradient, potential Laplacian and its gradient of
    the current iterate at the interior points."""
    ti = tables.interior
    u = []
    du = [[None] * 3 for _ in range(3)]
    for c, (a, b) in enumerate(CURL3):
        u.append(ti.grad(a) @ alphas[b] - ti.grad(b) @ alphas[a])
        for r in range(3):
            du[c][r] = ti.hess(r, a) @ alphas[b] - ti.hess(r, b) @ alphas[a]
    w = [ti.laplacian @ alphas[c] for c in range(3)]
    glap = [[ti.grad_lap(r) @ alphas[c] for r in range(3)] for c in range(3)]
    return u, du, w, glap


def _stack_3d(a, b, colloc, tables, bc_velocity):
    """Fill the shared divergence and boundary blocks of a 3D system whose
    interior blocks are already in place."""
    ni, nj = colloc.n_interior, colloc.n_boundary
    m1 = a.shape[1] // 3
    ti, tb = tables.interior, tables.boundary

    def cols(j):
        return slice(j * m1, (j + 1) * m1)

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
        ("curl", 4 * ni + nj, a.shape[0]),
    ]
    return LeastSquaresProblem(matrix=a, rhs=b, row_blocks=blocks)


def _add_transport_3d(a, ti, u, ni, m1, c):
    """-(u_k . grad) Lap phi_c^{k+1} on the diagonal block of row c."""
    block = a[c * ni : (c + 1) * ni, c * m1 : (c + 1) * m1]
    for r in range(3):
        block -= u[r][:, None] * ti.grad_lap(r)


def _add_lap_advect_3d(a, ti, w, ni, m1, c):
    """+(Lap phi_k . grad) curl phi^{k+1} row c: hits column blocks a_c, b_c."""
    ax, bx = CURL3[c]
    bb = a[c * ni : (c + 1) * ni, bx * m1 : (bx + 1) * m1]
    ba = a[c * ni : (c + 1) * ni, ax * m1 : (ax + 1) * m1]
    for r in range(3):
        bb += w[r][:, None] * ti.hess(r, ax)
        ba -= w[r][:, None] * ti.hess(r, bx)


def _add_curl_advect_3d(a, ti, glap, ni, m1, c):
    """-(curl phi^{k+1} . grad) Lap phi_c^k expanded over the new iterate."""
    for r, (ax, bx) in enumerate(CURL3):
        bb = a[c * ni : (c + 1) * ni, bx * m1 : (bx + 1) * m1]
        ba = a[c * ni : (c + 1) * ni, ax * m1 : (ax + 1) * m1]
        bb -= glap[c][r][:, None] * ti.grad(ax)
        ba += glap[c][r][:, None] * ti.grad(bx)


def _add_new_lap_advect_3d(a, ti, du, ni, m1, c):
    """+(Lap phi^{k+1} . grad) curl phi_c^k: one term per column block."""
    for j in range(3):
        block = a[c * ni : (c + 1) * ni, j * m1 : (j + 1) * m1]
        block += du[c][j][:, None] * ti.laplacian


def gn_step_3d(
    bank, amap, colloc, nu, curl_f, alphas_k, bc_velocity=None, tables=None
) -> LeastSquaresProblem:
    """One 3D Gauss-Newton sweep: all four linearized convection terms plus
    the right-hand-side correction evaluated at the current iterate."""
    alphas_k = np.asarray(alphas_k, dtype=float)
    if alphas_k.shape[0] != 3 or not np.all(np.isfinite(alphas_k)):
        raise ValueError("need three finite coefficient vectors")
    if tables is None:
        tables = build_tables(bank, amap, colloc, GN_KINDS_3D)
    ti = tables.interior
    ni, nj = colloc.n_interior, colloc.n_boundary
    m1 = bank.count + 1
    u, du, w, glap = _iterate_fields_3d(tables, alphas_k)
    a = np.zeros((4 * ni + 4 * nj, 3 * m1))
    b = np.zeros(4 * ni + 4 * nj)
    curl_f = np.asarray(curl_f, dtype=float)
    for c in range(3):
        a[c * ni : (c + 1) * ni, c * m1 : (c + 1) * m1] = nu * ti.bilaplacian
        _add_transport_3d(a, ti, u, ni, m1, c)
        _add_lap_advect_3d(a, ti, w, ni, m1, c)
        _add_curl_advect_3d(a, ti, glap, ni, m1, c)
        _add_new_lap_advect_3d(a, ti, du, ni, m1, c)
        rhs_c = curl_f[:, c].copy()
        for r in range(3):
            rhs_c -= u[r] * glap[c][r]
            rhs_c += w[r] * du[c][r]
        b[c * ni : (c + 1) * ni] = rhs_c
    return _stack_3d(a, b, colloc, tables, bc_velocity)


def _picard_matrix_3d(scheme, nu, tables, alphas_k, ni, m1):
    ti = tables.interior
    u, du, w, glap = _iterate_fields_3d(tables, alphas_k)
    a_int = np.zeros((3 * ni, 3 * m1))
    for c in range(3):
        a_int[c * ni : (c + 1) * ni, c * m1 : (c + 1) * m1] = nu * ti.bilaplacian
        if scheme == "I":
            _add_transport_3d(a_int, ti, u, ni, m1, c)
            _add_new_lap_advect_3d(a_int, ti, du, ni, m1, c)
        elif scheme == "II":
            _add_lap_advect_3d(a_int, ti, w, ni, m1, c)
            _add_curl_advect_3d(a_int, ti, glap, ni, m1, c)
    return a_int


def picard_step(
    bank, amap, colloc, nu, curl_f, iterate, scheme, dim,
    bc_values=None, bc_normal_deriv=None, bc_velocity=None, tables=None,
) -> LeastSquaresProblem:
    """One Picard sweep (schemes I/II/III); scheme III is the exact entrywise
    average of schemes I and II with the same right-hand side."""
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown Picard scheme {scheme!r}; choose from {_SCHEMES}")
    if dim == 2:
        if tables is None:
            tables = build_tables(bank, amap, colloc, GN_KINDS_2D)
        alpha_k = np.zeros(bank.count + 1) if iterate is None else np.asarray(iterate, float)
        a_int = _picard_int_2d(scheme, nu, tables, alpha_k)
        return _stack_2d(
            a_int, np.asarray(curl_f, float), colloc, tables, bc_values, bc_normal_deriv
        )
    if dim == 3:
        if tables is None:
            tables = build_tables(bank, amap, colloc, GN_KINDS_3D)
        m1 = bank.count + 1
        alphas_k = (
            np.zeros((3, m1)) if iterate is None else np.asarray(iterate, float)
        )
        ni, nj = colloc.n_interior, colloc.n_boundary
        if scheme == "III":
            a_int = 0.5 * (
                _picard_matrix_3d("I", nu, tables, alphas_k, ni, m1)
                + _picard_matrix_3d("II", nu, tables, alphas_k, ni, m1)
            )
        else:
            a_int = _picard_matrix_3d(scheme, nu, tables, alphas_k, ni, m1)
        a = np.zeros((4 * ni + 4 * nj, 3 * m1))
        a[: 3 * ni] = a_int
        b = np.zeros(4 * ni + 4 * nj)
        b[: 3 * ni] = np.asarray(curl_f, float).T.reshape(-1)
        return _stack_3d(a, b, colloc, tables, bc_velocity)
    raise ValueError("dim must be 2 or 3")


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _step_problem(scheme, bank, amap, colloc, nu, curl_f, iterate, bc, tables):
    dim = bank.dim
    if scheme == "gauss-newton":
        if dim == 2:
            return gn_step_2d(
                bank, amap, colloc, nu, curl_f, iterate,
                bc_values=bc.get("values"), bc_normal_deriv=bc.get("normal"),
                tables=tables,
            )
        return gn_step_3d(
            bank, amap, colloc, nu, curl_f, iterate,
            bc_velocity=bc.get("velocity"), tables=tables,
        )
    tag = scheme.split("-", 1)[1]
    return picard_step(
        bank, amap, colloc, nu, curl_f, iterate, tag, dim,
        bc_values=bc.get("values"), bc_normal_deriv=bc.get("normal"),
        bc_velocity=bc.get("velocity"), tables=tables,
    )


def solve_navier_stokes(
    bank, amap, colloc, nu, curl_f, f, x0,
    config: NonlinearConfig | None = None,
    bc_values=None, bc_normal_deriv=None, bc_velocity=None,
    pin_value: float = 0.0,
):
    """Iterate the configured scheme until the coefficient update drops below
    tolerance, then recover the pinned pressure from the converged velocity.

    Returns (velocity solution, pressure solution, IterationHistory).  A
    residual that grows by ``divergence_growth`` for three consecutive
    iterations marks the run diverged (partial history, pressure from the
    last iterate, no exception).
    """
    config = config or NonlinearConfig()
    config.validate()
    dim = bank.dim
    m1 = bank.count + 1
    bc = {"values": bc_values, "normal": bc_normal_deriv, "velocity": bc_velocity}
    kinds = GN_KINDS_2D if dim == 2 else GN_KINDS_3D
    tables = build_tables(bank, amap, colloc, kinds)
    history = IterationHistory()

    iterate = np.zeros(m1) if dim == 2 else np.zeros((3, m1))

    def run_stage(stage, scheme, count, check_convergence):
        nonlocal iterate
        grow_streak = 0
        prev_residual = np.inf
        for k in range(count):
            t0 = time.perf_counter()
            problem = _step_problem(
                scheme, bank, amap, colloc, nu, curl_f, iterate, bc, tables
            )
            sol = solve_lsq(
                problem, rank_tol=config.rank_tol, method=config.solver_method,
                scale_columns=config.scale_columns,
            )
            problem = None  # release the matrix before the next assembly
            new = sol.x if dim == 2 else sol.x.reshape(3, m1)
            if config.damping != 1.0:
                new = config.damping * new + (1.0 - config.damping) * iterate
            update = float(
                np.linalg.norm(new - iterate) / max(1.0, np.linalg.norm(new))
            )
            iterate = new
            history.records.append(
                IterationRecord(
                    index=len(history.records), stage=stage,
                    residual_norm=sol.residual_norm, update_norm=update,
                    seconds=time.perf_counter() - t0,
                )
            )
            if check_convergence and update < config.update_tol:
                history.status = "converged"
                return True
            if sol.residual_norm > config.divergence_growth * prev_residual:
                grow_streak += 1
                if grow_streak >= 3:
                    history.status = "diverged"
                    return True
            else:
                grow_streak = 0
            prev_residual = sol.residual_norm
        return False

    stopped = False
    if config.init_strategy == "stokes":
        stopped = run_stage("warmup", "picard-I", 1, False)
    elif config.init_strategy == "scheme-I":
        stopped = run_stage("warmup", "picard-I", config.warmup_iters, False)
    if not stopped:
        run_stage("main", config.scheme, config.max_iters, True)

    velocity = (
        StreamSolution2D(bank=bank, amap=amap, alpha=iterate)
        if dim == 2
        else PotentialSolution3D(bank=bank, amap=amap, alphas=iterate)
    )
    pressure_problem = assemble_pressure(
        bank, amap, colloc, nu, f, velocity, x0,
        nonlinear=True, pin_value=pin_value, tables=tables,
        velocity_tables=tables.interior,
    )
    pressure, _ = _solve_pressure(
        bank, amap, pressure_problem, x0, pin_value,
        config.solver_method, config.rank_tol, config.scale_columns,
    )
    return velocity, pressure, history
