import math

import numpy as np
import numpy.testing as npt
import pytest
import scipy.linalg

from eigtrack.controls import ControlSignal, ImpulseNoise, RectTrain
from eigtrack.densemath import (Sampled, TimeGrid, commutator_super,
                                conjugation_super, control_pieces, cumtrapz,
                                herm_eigendecompose, lindblad_super,
                                matrix_exp, midpoint_values, ordered_product,
                                propagate_linear, rk4_sampled,
                                time_ordered_product, trace_distance, unvec,
                                vec)
from eigtrack.errors import NonFiniteError, NonHermitianError

SZ = np.diag([-1.0, 1.0])
SX = np.array([[0.0, 1.0], [1.0, 0.0]])


def random_hermitian(n, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def test_time_grid():
    grid = TimeGrid.span(2.0, 4)
    assert grid.dt == 0.5
    npt.assert_allclose(grid.times, [0, 0.5, 1, 1.5, 2])
    npt.assert_allclose(grid.midpoints, [0.25, 0.75, 1.25, 1.75])
    assert grid.index(1.5) == 3
    assert grid.refined(3).steps == 12


def test_time_grid_rejects():
    with pytest.raises(ValueError):
        TimeGrid.span(1.0, 1)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 10)
    with pytest.raises(ValueError):
        TimeGrid.span(1.0, 4).index(0.3)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 2.5)


def test_time_grid_integral_steps():
    grid = TimeGrid(0.0, 1.0, 2000.0)
    assert type(grid.steps) is int
    assert len(grid.times) == 2001
    assert grid.refined(2).steps == 4000


def test_eigendecompose():
    a = random_hermitian(4)
    values, vectors = herm_eigendecompose(a)
    assert np.all(np.diff(values) >= 0)
    npt.assert_allclose(vectors @ np.diag(values) @ vectors.conj().T, a,
                        atol=1e-12)
    npt.assert_allclose(vectors.conj().T @ vectors, np.eye(4), atol=1e-12)


def test_eigendecompose_stack():
    stack = np.stack([random_hermitian(3, seed) for seed in range(5)])
    values, vectors = herm_eigendecompose(stack)
    assert values.shape == (5, 3)
    assert vectors.shape == (5, 3, 3)


def test_eigendecompose_rejects():
    with pytest.raises(NonHermitianError):
        herm_eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(NonFiniteError):
        herm_eigendecompose(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        herm_eigendecompose(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_matrix_exp():
    a = -1j * random_hermitian(3)
    npt.assert_allclose(matrix_exp(a), scipy.linalg.expm(a), atol=1e-12)
    stack = matrix_exp(np.stack([np.diag([1.0, 2.0]), np.diag([0.0, -1.0])]))
    npt.assert_allclose(stack[0], np.diag([math.e, math.e ** 2]))
    npt.assert_allclose(stack[1], np.diag([1.0, math.exp(-1)]))


def test_ordered_product():
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    b = np.array([[1.0, 0.0], [1.0, 1.0]])
    npt.assert_allclose(ordered_product([a, b]), b @ a)
    cumulative = ordered_product([a, b], cumulative=True)
    npt.assert_allclose(cumulative[0], np.eye(2))
    npt.assert_allclose(cumulative[1], a)


def test_time_ordered_product_commuting():
    grid = TimeGrid.span(2.0, 50)
    u = time_ordered_product(lambda t: -1j * t * SZ, grid)
    npt.assert_allclose(u, np.diag(np.exp(2j * np.array([1.0, -1.0]))),
                        atol=1e-12)


def test_time_ordered_product_second_order():

    def generator(t):
        return -1j * (SZ + t * SX)

    grid = TimeGrid.span(1.0, 400)
    reference = time_ordered_product(generator, grid.refined(16))
    coarse = np.abs(time_ordered_product(generator, TimeGrid.span(1.0, 100))
                    - reference).max()
    fine = np.abs(time_ordered_product(generator, TimeGrid.span(1.0, 200))
                  - reference).max()
    assert 3.5 < coarse / fine < 4.5


def test_rk4_sampled():
    grid = TimeGrid.span(5.0, 1000)

    def rate(t):
        return -(1 + np.sin(t))

    y = rk4_sampled(rate(grid.times), rate(grid.midpoints), 1.0, grid.dt)
    t = grid.times
    npt.assert_allclose(y, np.exp(-(t + 1 - np.cos(t))), atol=1e-7)


def test_rk4_sampled_matrix():
    grid = TimeGrid.span(1.0, 200)
    nodes = np.broadcast_to(-1j * SX, (201, 2, 2))
    mids = np.broadcast_to(-1j * SX, (200, 2, 2))
    y = rk4_sampled(nodes, mids, np.array([1.0, 0.0]), grid.dt)
    npt.assert_allclose(y[-1], [math.cos(1.0), -1j * math.sin(1.0)], atol=1e-9)


def test_midpoint_values_cubic():
    t = np.linspace(0.0, 1.0, 11)
    mids = midpoint_values(t ** 3)
    npt.assert_allclose(mids, (0.5 * (t[:-1] + t[1:])) ** 3, atol=1e-14)


def test_midpoint_values_short():
    npt.assert_allclose(midpoint_values([0.0, 1.0, 4.0]), [0.5, 2.5])


def test_cumtrapz():
    npt.assert_allclose(cumtrapz(np.full(5, 2.0), 0.5), [0, 1, 2, 3, 4])


def test_sampled():
    grid = TimeGrid.span(1.0, 4)
    f = Sampled(grid, 2 * grid.times)
    assert f(0.3) == pytest.approx(0.6)
    assert f(1.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        Sampled(grid, np.zeros(3))


def test_control_pieces_split():
    control = ControlSignal(1.0, RectTrain(0.1, 0.04, 0.1))
    grid = TimeGrid.span(0.2, 4)
    pieces, kicks, _ = control_pieces(grid, control)
    edges = sorted({a for _, a, _ in pieces} | {b for _, _, b in pieces})
    npt.assert_allclose(edges, [0, 0.05, 0.06, 0.1, 0.15, 0.16, 0.2])
    assert [i for i, _, _ in pieces] == [0, 1, 1, 2, 3, 3]
    assert len(kicks) == 0


def test_propagate_linear_rect():
    control = ControlSignal(1.0, RectTrain(0.1, 0.04, 0.1))
    grid = TimeGrid.span(1.0, 2000)

    def generator(t, j):
        return np.array([[-1j * j]])

    y = propagate_linear(generator, np.array([1.0]), grid, control)
    npt.assert_allclose(y[-1, 0], np.exp(-1j * control.phase(1.0)), atol=1e-9)
    assert control.phase(1.0) == pytest.approx(2.0)


def test_propagate_linear_kicks():
    control = ControlSignal(1.0, ImpulseNoise(0.01, 0.05, mean_amplitude=0.3,
                                              seed=5))
    grid = TimeGrid.span(1.0, 500)

    def generator(t, j):
        return np.array([[-1j * j]])

    def kick(t, amplitude):
        return np.array([[np.exp(-1j * amplitude)]])

    y = propagate_linear(generator, np.array([1.0]), grid, control, kick)
    npt.assert_allclose(y[-1, 0], np.exp(-1j * control.phase(1.0)), atol=1e-8)
    assert control.phase(1.0) > 1.0
    with pytest.raises(ValueError):
        propagate_linear(generator, np.array([1.0]), grid, control)


def test_vec_column_stacking():
    rho = np.array([[1, 2], [3, 4]])
    npt.assert_array_equal(vec(rho), [1, 3, 2, 4])
    npt.assert_array_equal(unvec(vec(rho)), rho)


def test_superoperators():
    h = random_hermitian(3, 1)
    x = random_hermitian(3, 2) + 1j * np.eye(3)
    op = np.random.default_rng(3).normal(size=(3, 3))
    u = scipy.linalg.expm(-1j * h)
    npt.assert_allclose(commutator_super(h) @ vec(x), vec(h @ x - x @ h),
                        atol=1e-12)
    expected = (op @ x @ op.T - 0.5 * (op.T @ op @ x + x @ op.T @ op))
    npt.assert_allclose(lindblad_super(op) @ vec(x), vec(expected), atol=1e-12)
    npt.assert_allclose(conjugation_super(u) @ vec(x),
                        vec(u @ x @ u.conj().T), atol=1e-12)


def test_trace_distance():
    assert trace_distance(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == \
        pytest.approx(1.0)
    assert trace_distance(np.eye(2) / 2, np.eye(2) / 2) == 0.0
