"""Experiment orchestration: one (case, method, nu, M, seed) cell per row.

Cells rebuild everything from their parameters, so sweeps are restartable and
rows are self-describing.  Numeric results are deterministic given the same
configuration and seed; wall-time columns of course are not.
"""

import csv
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cases import BenchmarkCase, make_case
from .features import AffineMap, eval_derivatives, init_bank
from .metrics import expected_dimensions, relative_l2_error
from .navier_stokes import NonlinearConfig, solve_navier_stokes, gn_step_2d, gn_step_3d
from .sampling import grid_collocation_2d, halton_collocation_3d, halton_points, eval_grid_2d
from .stokes import (
    recover_pressure_2d,
    recover_pressure_3d,
    solve_coupled_baseline,
    solve_stokes_2d,
    solve_stokes_3d,
)

CASE_ALIASES = {
    "stokes2d": "stokes2d-kovasznay",
    "ns2d": "ns2d-cavitylike",
    "stokes3d": "stokes3d-exp",
    "ns3d": "ns3d-trig",
}

# experiment-section defaults per case
CASE_DEFAULT_NU = {
    "stokes2d-kovasznay": 1e-4,
    "ns2d-cavitylike": 1e-1,
    "stokes3d-exp": 1e-5,
    "ns3d-trig": 1e-2,
}
CASE_DEFAULT_M = {
    "stokes2d-kovasznay": 1000,
    "ns2d-cavitylike": 800,
    "stokes3d-exp": 1500,
    "ns3d-trig": 1000,
}

CSV_COLUMNS = [
    "case", "method", "nu", "m", "gamma", "seed",
    "n_interior", "n_boundary", "n_test", "scheme", "max_iters", "warmup",
    "update_tol", "error_u", "error_p", "error_div", "iters", "status",
    "rows", "cols", "rank", "pressure_rows", "pressure_cols",
    "assemble_seconds", "solve_seconds", "pressure_seconds", "total_seconds",
]

SWEEP_CELL_LIMIT = 200


def canonical_case(name: str) -> str:
    full = CASE_ALIASES.get(name, name)
    if full not in CASE_DEFAULT_NU:
        known = sorted(CASE_ALIASES) + sorted(CASE_DEFAULT_NU)
        raise ValueError(f"unknown case {name!r}; known: {known}")
    return full


@dataclass
class ExperimentConfig:
    """Everything one run needs; list-valued nu/m span a sweep."""

    case: str
    nus: list = field(default_factory=list)
    ms: list = field(default_factory=list)
    gamma: float = 2.0
    gammas: list = field(default_factory=list)
    seed: int = 0
    seeds: list = field(default_factory=list)
    method: str = "decoupled"  # decoupled | coupled | both
    out: str = "results.csv"
    nx: int = 50
    ny: int = 50
    nb: int = 50
    n_interior_3d: int = 10000
    n_face_3d: int = 20
    n_test_2d: int = 111
    n_test_3d: int = 2000
    scheme: str = "gauss-newton"
    max_iters: int | None = None
    warmup: int | None = None
    update_tol: float = 1e-8
    workers: int = 1
    dump_dir: str | None = None

    def __post_init__(self):
        self.case = canonical_case(self.case)
        if not self.nus:
            self.nus = [CASE_DEFAULT_NU[self.case]]
        if not self.ms:
            self.ms = [CASE_DEFAULT_M[self.case]]
        if not self.seeds:
            self.seeds = [self.seed]
        if not self.gammas:
            self.gammas = [self.gamma]
        for g in self.gammas:
            if not g > 0:
                raise ValueError(f"shape parameter must be positive, got {g}")
        if self.method not in ("decoupled", "coupled", "both"):
            raise ValueError(f"unknown method {self.method!r}")
        for nu in self.nus:
            if not nu > 0:
                raise ValueError(f"viscosity must be positive, got {nu}")
        for m in self.ms:
            if m < 1:
                raise ValueError(f"basis size must be >= 1, got {m}")

    def methods(self):
        return ("decoupled", "coupled") if self.method == "both" else (self.method,)

    def cells(self):
        return [
            {
                "case": self.case, "method": meth, "nu": float(nu),
                "m": int(m), "gamma": float(g), "seed": int(s),
            }
            for meth in self.methods()
            for nu in self.nus
            for m in self.ms
            for g in self.gammas
            for s in self.seeds
        ]


def _build_geometry(case: BenchmarkCase, config: ExperimentConfig):
    if case.dim == 2:
        colloc = grid_collocation_2d(case.domain, config.nx, config.ny, config.nb)
        test_points = eval_grid_2d(case.domain, config.n_test_2d)
    else:
        colloc = halton_collocation_3d(
            case.domain, config.n_interior_3d, config.n_face_3d, config.n_face_3d
        )
        # disjoint Halton index range for the test set
        test_points = halton_points(
            3, config.n_test_3d, case.domain, start_index=config.n_interior_3d + 1
        )
    return colloc, test_points


def _boundary_data(case: BenchmarkCase, colloc):
    if case.homogeneous_boundary:
        return {}
    if case.dim == 2:
        return {
            "bc_values": case.stream(colloc.boundary),
            "bc_normal_deriv": case.stream_normal_derivative(
                colloc.boundary, colloc.normals
            ),
        }
    return {"bc_velocity": case.velocity(colloc.boundary)}


def run_cell(cell: dict, config: ExperimentConfig) -> dict:
    """Execute one cell and return its CSV row."""
    t_start = time.perf_counter()
    case = make_case(cell["case"], cell["nu"])
    nu, m, seed, method = cell["nu"], cell["m"], cell["seed"], cell["method"]
    gamma = cell.get("gamma", config.gamma)
    if method == "coupled" and case.nonlinear:
        raise ValueError("the coupled baseline is implemented for Stokes cases only")
    colloc, test_points = _build_geometry(case, config)
    bank = init_bank(case.dim, m, gamma, seed)
    amap = AffineMap.for_box(case.domain.lower, case.domain.upper)
    x0 = case.domain.center
    pin_value = float(case.pressure(x0[None, :])[0])
    bc = _boundary_data(case, colloc)

    row = {
        "case": cell["case"], "method": method, "nu": nu, "m": m,
        "gamma": gamma, "seed": seed,
        "n_interior": colloc.n_interior, "n_boundary": colloc.n_boundary,
        "n_test": test_points.shape[0],
        "scheme": config.scheme if case.nonlinear else "",
        "max_iters": _default_iters(case, config) if case.nonlinear else 0,
        "warmup": _default_warmup(case, config) if case.nonlinear else 0,
        "update_tol": config.update_tol if case.nonlinear else 0.0,
        "iters": 0, "status": "ok",
        "pressure_rows": 0, "pressure_cols": 0,
    }

    if method == "coupled":
        solution, info = solve_coupled_baseline(
            bank, amap, colloc, nu, case.forcing(colloc.interior), case.dim,
            bc_velocity=case.velocity(colloc.boundary), x0=x0, pin_value=pin_value,
        )
        velocity = pressure = solution
        row.update(
            rows=info.rows, cols=info.cols, rank=info.rank,
            assemble_seconds=info.assemble_seconds, solve_seconds=info.solve_seconds,
            pressure_seconds=0.0,
        )
    elif not case.nonlinear:
        solver = solve_stokes_2d if case.dim == 2 else solve_stokes_3d
        velocity, info = solver(
            bank, amap, colloc, nu, case.curl_forcing(colloc.interior), **bc
        )
        recover = recover_pressure_2d if case.dim == 2 else recover_pressure_3d
        pressure, pinfo = recover(
            bank, amap, colloc, nu, case.forcing(colloc.interior), velocity, x0,
            pin_value=pin_value,
        )
        row.update(
            rows=info.rows, cols=info.cols, rank=info.rank,
            pressure_rows=pinfo.rows, pressure_cols=pinfo.cols,
            assemble_seconds=info.assemble_seconds + pinfo.assemble_seconds,
            solve_seconds=info.solve_seconds, pressure_seconds=pinfo.solve_seconds,
        )
    else:
        nl_config = NonlinearConfig(
            max_iters=_default_iters(case, config),
            update_tol=config.update_tol,
            init_strategy="scheme-I",
            warmup_iters=_default_warmup(case, config),
            scheme=config.scheme,
        )
        t0 = time.perf_counter()
        velocity, pressure, history = solve_navier_stokes(
            bank, amap, colloc, nu, case.curl_forcing(colloc.interior),
            case.forcing(colloc.interior), x0,
            config=nl_config, pin_value=pin_value, **bc,
        )
        dims = expected_dimensions(
            case.dim, colloc.n_interior, colloc.n_boundary, m, "decoupled"
        )
        row.update(
            iters=history.main_iterations, status=history.status,
            rows=dims["velocity"][0], cols=dims["velocity"][1], rank=0,
            pressure_rows=dims["pressure"][0], pressure_cols=dims["pressure"][1],
            assemble_seconds=0.0,
            solve_seconds=time.perf_counter() - t0, pressure_seconds=0.0,
        )

    kinds = {"grad", "hessian"} if method != "coupled" else {"value", "grad"}
    test_tables = eval_derivatives(bank, amap, test_points, kinds)
    u_nn = velocity.velocity(test_points, tables=test_tables) \
        if method != "coupled" else velocity.velocity(test_points)
    row["error_u"] = relative_l2_error(case.velocity(test_points), u_nn, test_points)
    if method == "coupled":
        div = solution.divergence(test_points)
        p_nn = solution.pressure(test_points)
    else:
        div = velocity.divergence(test_points, tables=test_tables)
        p_nn = pressure.pressure(test_points)
    row["error_div"] = float(np.sqrt(np.mean(div * div)))
    row["error_p"] = relative_l2_error(case.pressure(test_points), p_nn, test_points)
    row["total_seconds"] = time.perf_counter() - t_start

    if config.dump_dir:
        _dump_cell_system(cell, config, case, bank, amap, colloc, velocity, bc)
    return {k: row.get(k, "") for k in CSV_COLUMNS}


def _default_iters(case, config):
    if config.max_iters is not None:
        return config.max_iters
    return 40 if case.dim == 2 else 15


def _default_warmup(case, config):
    if config.warmup is not None:
        return config.warmup
    return 5 if case.dim == 2 else 10


def _dump_cell_system(cell, config, case, bank, amap, colloc, velocity, bc):
    import os

    from .stokes import assemble_stokes2d_velocity, assemble_stokes3d_velocity

    os.makedirs(config.dump_dir, exist_ok=True)
    tag = f"{cell['case']}_{cell['method']}_nu{cell['nu']:g}_m{cell['m']}_s{cell['seed']}"
    path = os.path.join(config.dump_dir, tag + ".npz")
    curl_f = case.curl_forcing(colloc.interior)
    if case.nonlinear:
        step = gn_step_2d if case.dim == 2 else gn_step_3d
        coeff = velocity.alpha if case.dim == 2 else velocity.alphas
        problem = step(bank, amap, colloc, case.nu, curl_f, coeff, **bc)
    elif case.dim == 2:
        problem = assemble_stokes2d_velocity(bank, amap, colloc, case.nu, curl_f, **bc)
    else:
        problem = assemble_stokes3d_velocity(bank, amap, colloc, case.nu, curl_f, **bc)
    problem.dump(path)


def _format_value(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _cell_key(row_or_cell):
    return (
        str(row_or_cell["case"]),
        str(row_or_cell["method"]),
        float(row_or_cell["nu"]),
        int(row_or_cell["m"]),
        float(row_or_cell["gamma"]),
        int(row_or_cell["seed"]),
    )


def _load_existing_keys(path):
    import os

    if not os.path.exists(path):
        return set()
    with open(path, newline="") as fh:
        return {_cell_key(row) for row in csv.DictReader(fh)}


def run_experiment(config: ExperimentConfig, skip_existing: bool = False) -> int:
    """Run all cells, appending rows to the output CSV plus a JSON summary.

    Returns 0 on success, 2 when any nonlinear cell failed to converge
    (rows are still written).  Configuration errors raise before any cell
    runs; the CLI maps those to exit code 1.
    """
    cells = config.cells()
    if skip_existing and len(cells) > SWEEP_CELL_LIMIT:
        raise ValueError(
            f"sweep spans {len(cells)} cells, above the guard of {SWEEP_CELL_LIMIT}"
        )
    done = _load_existing_keys(config.out) if skip_existing else set()
    todo = [c for c in cells if _cell_key(c) not in done]

    rows = []
    lock = threading.Lock()
    mode = "a" if (skip_existing and done) else "w"
    with open(config.out, mode, newline="") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            writer.writerow(CSV_COLUMNS)

        def work(cell):
            row = run_cell(cell, config)
            with lock:
                writer.writerow([_format_value(row[k]) for k in CSV_COLUMNS])
                fh.flush()
                rows.append(row)

        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                list(pool.map(work, todo))
        else:
            for cell in todo:
                work(cell)

    summary_path = str(config.out)
    summary_path = summary_path[: summary_path.rfind(".")] if "." in summary_path else summary_path
    with open(summary_path + ".json", "w") as fh:
        json.dump({"columns": CSV_COLUMNS, "rows": rows}, fh, indent=1, default=str)

    bad = [r for r in rows if r["status"] not in ("ok", "converged", "")]
    return 2 if bad else 0
