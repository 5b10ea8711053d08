import numpy as np
import pytest

from llgbdf3.errors import DimensionTooLarge, SolverDiverged
from llgbdf3.grid import Grid
from llgbdf3.krylov import LinearOperator, assemble_dense, identity_operator, solve
from llgbdf3.scheme import SchemeParams, step_operator
from llgbdf3.solvability import random_coefficient, solvability_probe


def random_system(rng, dim, n, k, alpha, precondition=True, max_length=1.0):
    g = Grid(dim, n)
    m_hat = random_coefficient(g, rng, max_length)
    op = step_operator(m_hat, g, SchemeParams(alpha, k, precondition=precondition))
    return op, rng.standard_normal(op.dimension)


def test_diagonal_system():
    k = 1e6
    op = identity_operator(12, 11 / (6 * k))
    rhs = np.arange(1.0, 13.0)
    x, stats = solve(op, rhs, tol=1e-12)
    np.testing.assert_allclose(x, rhs * 6 * k / 11, rtol=1e-12)
    assert stats.converged


def test_zero_rhs():
    op, _ = random_system(np.random.default_rng(0), 1, 8, 0.01, 0.1)
    x, stats = solve(op, np.zeros(op.dimension))
    assert np.all(x == 0) and stats.iterations == 0 and stats.converged


@pytest.mark.parametrize("precondition", [False, True])
def test_matches_dense_direct_solve(rng, precondition):
    op, rhs = random_system(rng, 1, 16, 0.01, 0.1, precondition)
    x, stats = solve(op, rhs, tol=1e-13, maxit=2000)
    ref = np.linalg.solve(assemble_dense(op), rhs)
    assert np.linalg.norm(x - ref) <= 1e-10 * np.linalg.norm(ref)
    assert stats.converged


def test_reported_residual_is_true_residual(rng):
    op, rhs = random_system(rng, 3, 4, 0.05, 0.3)
    x, stats = solve(op, rhs, tol=1e-11)
    true = np.linalg.norm(rhs - op(x)) / np.linalg.norm(rhs)
    assert stats.final_relative_residual == pytest.approx(true, rel=1e-12)
    assert stats.final_relative_residual <= 1e-11


def test_initial_guess_is_used(rng):
    op, rhs = random_system(rng, 1, 16, 0.01, 0.1)
    x, _ = solve(op, rhs)
    x2, stats = solve(op, rhs, x0=x)
    assert stats.iterations == 0
    np.testing.assert_array_equal(x, x2)


def test_deterministic(rng):
    op, rhs = random_system(rng, 3, 4, 0.1, 0.01, precondition=False)
    a, sa = solve(op, rhs)
    b, sb = solve(op, rhs)
    np.testing.assert_array_equal(a, b)
    assert sa == sb


def test_maxit_raises(rng):
    op, rhs = random_system(rng, 1, 32, 1.0, 0.01, precondition=False)
    with pytest.raises(SolverDiverged) as info:
        solve(op, rhs, tol=1e-12, maxit=1)
    assert info.value.stats is not None and not info.value.stats.converged


def test_bad_arguments():
    op = identity_operator(3)
    with pytest.raises(ValueError):
        solve(op, np.ones(3), tol=1.5)
    with pytest.raises(ValueError):
        solve(op, np.ones(4))


def test_assemble_identity():
    np.testing.assert_array_equal(assemble_dense(identity_operator(3)), np.eye(3))


def test_assemble_guard():
    with pytest.raises(DimensionTooLarge):
        assemble_dense(LinearOperator(5000, lambda v: v))


def test_damping_only_operator_is_symmetric():
    g = Grid(1, 8)
    k, alpha = 0.01, 0.5
    A = assemble_dense(step_operator(np.zeros((8, 3)), g, SchemeParams(alpha, k)))
    assert np.max(np.abs(A - A.T)) <= 1e-12
    # smallest eigenvalue belongs to the constant mode, where the Laplacian is zero
    assert np.linalg.eigvalsh(A)[0] == pytest.approx(11 / (6 * k), rel=1e-12)


def test_full_operator_is_nonsymmetric(rng):
    g = Grid(1, 8)
    A = assemble_dense(step_operator(random_coefficient(g, rng), g, SchemeParams(0.1, 0.01)))
    assert np.linalg.norm(A - A.T) > 0


def test_preconditioner_is_exact_for_constant_coefficient(rng):
    g = Grid(3, 4)
    m_hat = np.broadcast_to([0.3, -0.4, 0.5], g.shape + (3,)).copy()
    op = step_operator(m_hat, g, SchemeParams(0.2, 0.1))
    v = rng.standard_normal(op.dimension)
    np.testing.assert_allclose(op(op.precond(v)), v, atol=1e-10)


@pytest.mark.parametrize("k,alpha", [(1e-3, 0.01), (10.0, 1.0)])
def test_probe_1d(k, alpha):
    report = solvability_probe(Grid(1, 32), k, alpha, trials=100, seed=1)
    assert report.all_positive and report.min_sigma > 0
    assert report.sigma_min.shape == (100,)


def test_probe_with_zero_coefficient_is_bounded_below():
    g = Grid(1, 32)
    k, alpha = 0.1, 0.5
    A = assemble_dense(step_operator(np.zeros((32, 3)), g, SchemeParams(alpha, k)))
    assert np.linalg.svd(A, compute_uv=False)[-1] == pytest.approx(11 / (6 * k), rel=1e-10)


def test_probe_size_guard():
    with pytest.raises(DimensionTooLarge):
        solvability_probe(Grid(1, 65), 0.1, 0.1, trials=1)
    with pytest.raises(DimensionTooLarge):
        solvability_probe(Grid(3, 5), 0.1, 0.1, trials=1)


def test_random_coefficient_lengths(rng):
    m = random_coefficient(Grid(3, 4), rng)
    lengths = np.linalg.norm(m, axis=-1)
    assert lengths.max() <= 2.0 and lengths.min() >= 0.0


def test_gmres_fallback_after_breakdown():
    # white-noise coefficient of length up to 2 with weak damping: BiCGSTAB breaks down here
    rng = np.random.default_rng(3)
    op, rhs = random_system(rng, 1, 128, 0.0316, 0.0176, max_length=2.0)
    x, stats = solve(op, rhs, tol=1e-12, maxit=5000)
    assert stats.method == "gmres" and stats.converged
    assert stats.final_relative_residual <= 1e-12
    ref = np.linalg.solve(assemble_dense(op), rhs)
    assert np.linalg.norm(x - ref) <= 1e-9 * np.linalg.norm(ref)


def test_fallback_respects_total_budget():
    rng = np.random.default_rng(3)
    op, rhs = random_system(rng, 1, 128, 0.0316, 0.0176, max_length=2.0)
    with pytest.raises(SolverDiverged) as info:
        solve(op, rhs, tol=1e-12, maxit=60)
    assert info.value.stats.iterations <= 60
