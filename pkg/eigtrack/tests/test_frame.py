import math

import numpy as np
import numpy.testing as npt
import pytest

from eigtrack.bath import (DecayFunctions, bruteforce_liouville,
                           open_qubit_dissipator, open_qubit_liouvillian)
from eigtrack.controls import ControlSignal
from eigtrack.densemath import TimeGrid, trace_distance
from eigtrack.errors import GridResolutionError
from eigtrack.frame import (build_adiabatic_ops, build_spectral_frame,
                            degeneracy_flags, hilbert_ops, pair_differences,
                            propagate_frame, reconstruct)
from eigtrack.models import OpenQubitModel, RotatingFieldQubit
from eigtrack.partition import partition
from eigtrack.tcl import propagate_schrodinger


def golden_hamiltonian(rate, phase):
    up, down = np.exp(1j * phase), np.exp(-1j * phase)
    zero = np.zeros_like(up)
    rows = [[zero, -1j * up, -1j * down, zero],
            [1j * down, zero, zero, -1j * down],
            [1j * up, zero, zero, -1j * up],
            [zero, 1j * up, 1j * down, zero]]
    return rate * np.moveaxis(np.array(rows), -1, 0)


def golden_dissipator(kappa, shift, count):
    d = np.zeros((4, 4), dtype=complex)
    d[0, 0] = -kappa
    d[1, 1] = 2j * shift - kappa / 2
    d[2, 2] = -2j * shift - kappa / 2
    d[3, 0] = kappa
    return np.broadcast_to(d, (count, 4, 4))


def test_pair_differences():
    npt.assert_array_equal(pair_differences([1.0, 2.0, 5.0]),
                           [0, -1, -4, 1, 0, -3, 4, 3, 0])


def test_degeneracy_flags():
    flags = degeneracy_flags(np.array([[-1.0, 1.0], [0.0, 0.0]]))
    npt.assert_array_equal(flags, [[False, False], [True, True]])


def test_basis_columns():
    model = RotatingFieldQubit(ControlSignal(1.0))
    frame = model.frame(TimeGrid.span(1.0, 4))
    basis = frame.basis()
    v = frame.vectors[2]
    for n in range(2):
        for m in range(2):
            phi = np.outer(v[:, n], v[:, m].conj())
            npt.assert_allclose(basis[2][:, m + 2 * n], phi.T.reshape(-1),
                                atol=1e-15)


def open_qubit_setup(steps=2000, j0=1.3, kappa=0.4, shift=0.15):
    control = ControlSignal(j0)
    model = OpenQubitModel(control)
    grid = TimeGrid.span(1.0, steps)
    decay = DecayFunctions.markovian(grid, control, kappa, shift)
    return model, grid, decay


def test_golden_open_qubit_blocks():
    model, grid, decay = open_qubit_setup()
    frame = model.frame(grid).regauge([math.pi, 0.0])
    ops = build_adiabatic_ops(frame, open_qubit_dissipator(model, decay))
    blocks = partition(ops, 3)
    npt.assert_array_equal(blocks.permutation, [3, 1, 2, 0])
    expected = golden_hamiltonian(model.rotation_rate, 2 * 1.3 * grid.times)
    npt.assert_allclose(blocks.hamiltonian(), expected, atol=1e-8)
    npt.assert_allclose(blocks.dissipator(),
                        golden_dissipator(0.4, 0.15, grid.steps + 1), atol=1e-8)
    npt.assert_allclose(blocks.V_D, 0, atol=1e-12)


def test_golden_numeric_frame():
    model, grid, decay = open_qubit_setup()
    frame = build_spectral_frame(model.hamiltonian, grid).regauge(
        [math.pi, 0.0])
    assert frame.derivatives is None
    ops = build_adiabatic_ops(frame, open_qubit_dissipator(model, decay))
    blocks = partition(ops, 3)
    expected = golden_hamiltonian(model.rotation_rate, 2 * 1.3 * grid.times)
    npt.assert_allclose(blocks.hamiltonian(), expected, atol=1e-6)


def test_numeric_frame_matches_analytic():
    model = RotatingFieldQubit(ControlSignal(1.0))
    grid = TimeGrid.span(1.0, 8000)
    numeric = build_spectral_frame(model.hamiltonian, grid)
    analytic = model.frame(grid)
    npt.assert_allclose(numeric.energies, analytic.energies, atol=1e-12)
    npt.assert_allclose(numeric.level_phases, analytic.level_phases, atol=1e-9)
    overlap = np.abs(np.einsum('tan,tan->tn', numeric.vectors.conj(),
                               analytic.vectors))
    npt.assert_allclose(overlap, 1.0, atol=1e-12)
    npt.assert_allclose(np.abs(numeric.connection()[:, 0, 1]),
                        np.abs(analytic.connection()[:, 0, 1]), atol=1e-6)


def test_coarse_grid_rejected():
    model = OpenQubitModel(ControlSignal(1.0), angle=40 * math.pi)
    frame = build_spectral_frame(model.hamiltonian, TimeGrid.span(1.0, 50))
    with pytest.raises(GridResolutionError) as info:
        frame.connection()
    assert info.value.steps == 50
    assert info.value.suggested_steps > 50


def test_regauge_connection():
    model, grid, _ = open_qubit_setup(steps=10)
    a = model.frame(grid).connection()
    b = model.frame(grid).regauge([math.pi, 0.0]).connection()
    npt.assert_allclose(b[:, 0, 1], -a[:, 0, 1], atol=1e-15)
    npt.assert_allclose(b[:, 1, 0], -a[:, 1, 0], atol=1e-15)
    npt.assert_allclose(np.diagonal(b, axis1=1, axis2=2), 0, atol=1e-15)


def test_reconstruction_matches_lab_frame():
    control = ControlSignal(1.0)
    model = OpenQubitModel(control, t_end=2.0)
    grid = TimeGrid.span(2.0, 4000)
    decay = DecayFunctions.markovian(grid, control, 0.5, 0.2)
    ops = build_adiabatic_ops(model.frame(grid),
                              open_qubit_dissipator(model, decay))
    start = np.zeros(4, dtype=complex)
    start[3] = 1.0
    states = reconstruct(ops.frame, propagate_frame(ops, start))
    lab = bruteforce_liouville(open_qubit_liouvillian(model, decay),
                               np.diag([0.0, 1.0]), grid)
    worst = max(trace_distance(a, b) for a, b in zip(states, lab.states))
    assert worst <= 1e-6


def test_hilbert_reconstruction():
    model = RotatingFieldQubit(ControlSignal(1.0), t_end=1.0)
    grid = TimeGrid.span(1.0, 4000)
    ops = hilbert_ops(model.frame(grid))
    assert ops.space == 'hilbert'
    assert ops.dim == 2
    coefficients = propagate_frame(ops, np.array([0.0, 1.0]))
    lab = propagate_schrodinger(model, grid)
    npt.assert_allclose(reconstruct(ops.frame, coefficients, 'hilbert'),
                        lab.states, atol=1e-6)
