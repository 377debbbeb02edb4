import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfflow.lsq import LeastSquaresProblem, solve_lsq


def _problem(a, b, **kwargs):
    return LeastSquaresProblem(matrix=np.asarray(a, float), rhs=np.asarray(b, float), **kwargs)


class TestSolveExamples:
    def test_identity(self):
        sol = solve_lsq(_problem(np.eye(2), [1.0, 2.0]))
        assert np.allclose(sol.x, [1.0, 2.0])
        assert sol.residual_norm <= 1e-14
        assert sol.rank == 2

    def test_overdetermined_single_column(self):
        # normal equations: x = (0 + 2) / 2 = 1, residual sqrt(2)
        sol = solve_lsq(_problem([[1.0], [1.0]], [0.0, 2.0]))
        assert np.allclose(sol.x, [1.0])
        assert sol.residual_norm == pytest.approx(np.sqrt(2.0), rel=1e-14)

    def test_rank_deficient_minimum_norm(self):
        # pseudoinverse solution of the doubled column is the symmetric one
        sol = solve_lsq(_problem([[1.0, 1.0], [1.0, 1.0]], [2.0, 2.0]), rank_tol=1e-10)
        assert np.allclose(sol.x, [1.0, 1.0])
        assert sol.rank == 1

    def test_underdetermined_allowed(self):
        sol = solve_lsq(_problem([[1.0, 1.0]], [4.0]))
        assert np.allclose(sol.x, [2.0, 2.0])
        assert sol.residual_norm <= 1e-13

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="non-finite"):
            solve_lsq(_problem([[np.nan, 1.0]], [1.0]))

    def test_rejects_unknown_method(self):
        with pytest.raises(ValueError, match="method"):
            solve_lsq(_problem(np.eye(2), [1.0, 2.0]), method="cholesky")


class TestProblemContainer:
    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            _problem(np.zeros((3, 2)), np.zeros(2))
        with pytest.raises(ValueError):
            LeastSquaresProblem(matrix=np.zeros((0, 2)), rhs=np.zeros(0))

    def test_block_lookup(self):
        prob = _problem(np.eye(3), np.ones(3), row_blocks=[("pde", 0, 2), ("pin", 2, 3)])
        assert prob.block("pde") == slice(0, 2)
        with pytest.raises(KeyError):
            prob.block("missing")

    def test_dump(self, tmp_path):
        prob = _problem(np.eye(2), [3.0, 4.0])
        path = tmp_path / "system.npz"
        prob.dump(path)
        data = np.load(path)
        assert np.array_equal(data["matrix"], prob.matrix)
        assert np.array_equal(data["rhs"], prob.rhs)


@given(st.integers(0, 1000), st.integers(5, 40), st.integers(1, 5))
@settings(max_examples=30, deadline=None)
def test_normal_equation_residual(seed, m, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    sol = solve_lsq(_problem(a, b))
    gradient = a.T @ (a @ sol.x - b)
    assert np.linalg.norm(gradient) <= 1e-8 * np.linalg.norm(a) * np.linalg.norm(b)


def test_optimality_under_perturbations():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((30, 8))
    b = rng.standard_normal(30)
    sol = solve_lsq(_problem(a, b))
    base = np.linalg.norm(a @ sol.x - b)
    for _ in range(100):
        delta = rng.standard_normal(8)
        delta /= np.linalg.norm(delta)
        perturbed = np.linalg.norm(a @ (sol.x + 1e-3 * delta) - b)
        assert perturbed >= base - 1e-12


def test_minimum_norm_on_rank_deficient():
    rng = np.random.default_rng(9)
    base = rng.standard_normal((20, 4))
    a = np.column_stack([base, base[:, 0]])  # column 4 duplicates column 0
    b = rng.standard_normal(20)
    sol = solve_lsq(_problem(a, b))
    null = np.array([1.0, 0, 0, 0, -1.0]) / np.sqrt(2)
    assert np.linalg.norm(a @ null) <= 1e-12
    for t in (-2.0, -0.5, 0.5, 2.0):
        other = sol.x + t * null
        assert np.linalg.norm(a @ other - b) == pytest.approx(sol.residual_norm, rel=1e-10)
        assert np.linalg.norm(sol.x) <= np.linalg.norm(other) + 1e-12


def test_svd_backend_matches_qr_when_well_conditioned():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((40, 6))
    b = rng.standard_normal(40)
    x_qr = solve_lsq(_problem(a, b), method="qr").x
    x_svd = solve_lsq(_problem(a, b), method="svd").x
    assert np.allclose(x_qr, x_svd, atol=1e-10)


def test_column_scaling_preserves_solution():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((40, 6)) * np.array([1e-6, 1.0, 1e4, 1.0, 1e-3, 1.0])
    b = rng.standard_normal(40)
    plain = solve_lsq(_problem(a, b))
    scaled = solve_lsq(_problem(a, b), scale_columns=True)
    assert np.allclose(plain.x, scaled.x, rtol=1e-8, atol=1e-12)
    assert scaled.residual_norm == pytest.approx(plain.residual_norm, abs=1e-10)


def test_ridge_shrinks_rank_deficient_solution():
    rng = np.random.default_rng(6)
    base = rng.standard_normal((20, 3))
    a = np.column_stack([base, base @ np.array([1.0, -1.0, 0.5])])
    b = rng.standard_normal(20)
    free = solve_lsq(_problem(a, b))
    ridged = solve_lsq(_problem(a, b), ridge=1e-6)
    assert np.linalg.norm(ridged.x) <= np.linalg.norm(free.x) + 1e-9
    # residual is still reported against the original system
    assert ridged.residual_norm == pytest.approx(
        np.linalg.norm(a @ ridged.x - b), abs=1e-12
    )
