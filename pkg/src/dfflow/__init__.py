"""Mesh-free divergence-free solvers for steady incompressible flow.

Velocity fields are curls of randomized-feature stream functions (2D) or
vector potentials (3D), so incompressibility holds to machine precision by
construction; velocity and pressure are recovered from decoupled linear
least-squares problems, with Gauss-Newton/Picard sweeps for the nonlinear
convection term.
"""

from .cases import BenchmarkCase, make_case
from .features import AffineMap, DerivativeTable, FeatureBank, eval_derivatives, init_bank, tanh_chain
from .lsq import LeastSquaresProblem, LsqSolution, solve_lsq
from .metrics import complexity_report, divergence_error, relative_l2_error
from .navier_stokes import IterationHistory, NonlinearConfig, solve_navier_stokes
from .sampling import BoxDomain, CollocationSet, grid_collocation_2d, halton_points
from .stokes import (
    PotentialSolution3D,
    PressureSolution,
    StreamSolution2D,
    recover_pressure_2d,
    recover_pressure_3d,
    solve_coupled_baseline,
    solve_stokes_2d,
    solve_stokes_3d,
)

__all__ = [
    "AffineMap", "BenchmarkCase", "BoxDomain", "CollocationSet",
    "DerivativeTable", "FeatureBank", "IterationHistory",
    "LeastSquaresProblem", "LsqSolution", "NonlinearConfig",
    "PotentialSolution3D", "PressureSolution", "StreamSolution2D",
    "complexity_report", "divergence_error", "eval_derivatives",
    "grid_collocation_2d", "halton_points", "init_bank", "make_case",
    "recover_pressure_2d", "recover_pressure_3d", "relative_l2_error",
    "solve_coupled_baseline", "solve_lsq", "solve_navier_stokes",
    "solve_stokes_2d", "solve_stokes_3d", "tanh_chain",
]

__version__ = "0.1.0"
