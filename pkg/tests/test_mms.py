import numpy as np
import pytest

from llgbdf3.grid import Grid
from llgbdf3.mms import (MMS_1D, MMS_3D, analytic_derivative_check, forcing, get_solution,
                         pde_residual)
from llgbdf3.study import initial_history

SOLS = [MMS_1D, MMS_3D]


def random_points(sol, rng, count):
    x = tuple(rng.uniform(0, 1, count) for _ in range(sol.dim))
    return x, rng.uniform(0, 3, count)


@pytest.mark.parametrize("sol", SOLS, ids=lambda s: s.name)
def test_unit_length(sol, rng):
    x, t = random_points(sol, rng, 1000)
    m = sol.eval(x, t)
    assert np.max(np.abs(np.linalg.norm(m, axis=-1) - 1)) <= 1e-14


@pytest.mark.parametrize("sol", SOLS, ids=lambda s: s.name)
def test_normal_derivative_vanishes_on_boundary(sol, rng):
    for axis in range(sol.dim):
        for face in (0.0, 1.0):
            x, t = random_points(sol, rng, 200)
            x = list(x)
            x[axis] = np.full(200, face)
            d = sol.normal_derivatives(tuple(x), t)[axis]
            assert np.max(np.abs(d)) <= 1e-12


def test_forcing_1d_at_time_zero():
    x = (np.linspace(0, 1, 17),)
    phi = np.cos(np.pi * x[0])
    expected = np.stack([np.cos(phi), np.sin(phi), 0 * phi], axis=-1)
    np.testing.assert_allclose(forcing(MMS_1D, 0.3)(x, 0.0), expected, atol=1e-15)


def test_forcing_3d_at_cube_center():
    # phase and its gradient vanish at the center, so Lap m = 0 and f = m_t
    x = (np.array(0.5),) * 3
    t = 0.7
    f = forcing(MMS_3D, 0.0)(x, t)
    np.testing.assert_allclose(f, [np.cos(t), 0.0, -np.sin(t)], atol=1e-15)


@pytest.mark.parametrize("sol", SOLS, ids=lambda s: s.name)
def test_pde_residual_vanishes(sol, rng):
    x, t = random_points(sol, rng, 1000)
    assert np.max(np.abs(pde_residual(sol, 0.01, x, t))) <= 1e-12


def test_time_derivative_at_sample_point():
    x, t, s = (np.array(0.3),), 0.7, 1e-3
    w = np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0
    fd = sum(wi * MMS_1D.eval(x, t + o * s) for wi, o in zip(w, range(-3, 4))) / s
    np.testing.assert_allclose(fd, MMS_1D.dt(x, t), atol=1e-8)


@pytest.mark.parametrize("sol", SOLS, ids=lambda s: s.name)
def test_analytic_derivative_check(sol):
    report = analytic_derivative_check(sol, samples=60, seed=3)
    assert report["max"] <= 1e-6, report


@pytest.mark.parametrize("sol", SOLS, ids=lambda s: s.name)
def test_grad_norm_sq_vanishes_at_time_zero(sol, rng):
    x, _ = random_points(sol, rng, 50)
    assert np.all(sol.grad_norm_sq(x, 0.0) == 0.0)


def test_initial_history():
    g = Grid(1, 32)
    k = 0.01
    levels = initial_history(MMS_1D, g, k)
    assert len(levels) == 3
    for m in levels:
        assert np.max(np.abs(np.linalg.norm(m, axis=-1) - 1)) <= 1e-14
    np.testing.assert_array_equal(levels[0], np.broadcast_to([0.0, 0.0, 1.0], (32, 3)))
    assert not np.allclose(levels[1], levels[2])


def test_get_solution():
    assert get_solution("mms3d") is MMS_3D
    with pytest.raises(KeyError):
        get_solution("nope")
