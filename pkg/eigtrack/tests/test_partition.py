import math
import re
from types import SimpleNamespace

import numpy as np
import numpy.testing as npt
from logbook import TestHandler
import pytest

from eigtrack.bath import DecayFunctions, open_qubit_dissipator
from eigtrack.controls import ControlSignal
from eigtrack.densemath import DEFAULT_POLICY, TimeGrid
from eigtrack.errors import DegenerateTargetError, InvalidTargetError
from eigtrack.frame import (analytic_frame, build_adiabatic_ops, hilbert_ops,
                            propagate_frame)
from eigtrack.models import OpenQubitModel, RotatingFieldQubit
from eigtrack.partition import (block_propagators, interaction_picture,
                                partition, target_level)


def open_qubit_ops(steps=400, j0=1.0):
    control = ControlSignal(j0)
    model = OpenQubitModel(control)
    grid = TimeGrid.span(1.0, steps)
    decay = DecayFunctions.markovian(grid, control, 0.3, 0.1)
    return model, grid, build_adiabatic_ops(model.frame(grid),
                                            open_qubit_dissipator(model, decay))


def test_target_level():
    assert target_level(3, 2) == 1
    assert target_level(0, 2) == 0
    assert target_level(1, 3, 'hilbert') == 1
    with pytest.raises(InvalidTargetError):
        target_level(1, 2)
    with pytest.raises(InvalidTargetError):
        target_level(4, 2)
    with pytest.raises(InvalidTargetError):
        target_level(3, 3, 'hilbert')


def test_partition_restores_blocks():
    _, _, ops = open_qubit_ops()
    blocks = partition(ops, 3)
    assert blocks.dim == 4
    assert blocks.space == 'liouville'
    perm = blocks.permutation
    npt.assert_allclose(blocks.hamiltonian(), ops.hamiltonian[:, perm][:, :, perm])
    npt.assert_allclose(blocks.generator(), ops.generator()[:, perm][:, :, perm])
    restored = blocks.restore(blocks.hamiltonian()[:, 0, :])
    npt.assert_allclose(restored, ops.hamiltonian[:, 3, :])
    p, q = blocks.projectors()
    npt.assert_array_equal(p + q, np.eye(4))
    npt.assert_array_equal(p @ q, 0)


def test_partition_rejects_coherence():
    _, _, ops = open_qubit_ops()
    with pytest.raises(InvalidTargetError):
        partition(ops, 1)


def test_partition_rejects_degenerate_target():
    grid = TimeGrid.span(1.0, 4)
    energies = np.zeros((5, 2))
    energies[:2] = [-1.0, 1.0]
    vectors = np.broadcast_to(np.eye(2), (5, 2, 2))
    frame = analytic_frame(grid, energies, vectors, np.zeros((5, 2)),
                           np.zeros((5, 2, 2)))
    ops = hilbert_ops(frame)
    with pytest.raises(DegenerateTargetError) as info:
        partition(ops, 1)
    assert info.value.time == pytest.approx(0.5)


def test_block_propagators():
    _, grid, ops = open_qubit_ops(steps=1000)
    blocks = partition(ops, 3)
    props = block_propagators(blocks, grid)
    npt.assert_allclose(props.g, 1.0)
    npt.assert_allclose(props.e[0], np.eye(3))
    eye = np.broadcast_to(np.eye(3), props.e.shape)
    npt.assert_allclose(np.conj(np.swapaxes(props.e, 1, 2)) @ props.e, eye,
                        atol=1e-10)
    npt.assert_allclose(props.ge(700, 300) @ props.ge(300, 0), props.ge(700, 0),
                        atol=1e-10)
    u0 = props.u0()
    assert u0.shape == (1001, 4, 4)
    assert u0[10, 0, 0] == props.g[10]


def test_block_propagator_unitarity_drift():
    _, grid, ops = open_qubit_ops(steps=1000)
    with TestHandler() as handler:
        props = block_propagators(partition(ops, 3), grid)
    assert props.drift <= DEFAULT_POLICY.unitarity_tol
    assert not handler.has_warnings

    n = grid.steps + 1
    leaky = SimpleNamespace(g_H=np.zeros(n),
                            e_H=np.broadcast_to(0.5j * np.eye(2), (n, 2, 2)))
    with TestHandler() as handler:
        props = block_propagators(leaky, grid)
    assert props.drift == pytest.approx(math.e - 1, rel=1e-6)
    assert handler.has_warning(re.compile('unitarity'))


def test_q_block_propagator_solves_block_equation():
    _, grid, ops = open_qubit_ops(steps=2000)
    blocks = partition(ops, 3)
    props = block_propagators(blocks, grid)
    e_only = np.zeros_like(blocks.hamiltonian())
    e_only[:, 1:, 1:] = blocks.e_H
    frame_ops = type(ops)(ops.frame, e_only, np.zeros_like(e_only))
    columns = propagate_frame(frame_ops, np.eye(4)[:, 1])
    npt.assert_allclose(columns[:, 1:], props.e[:, :, 0], atol=1e-6)


def test_interaction_picture():
    model = RotatingFieldQubit(ControlSignal(1.0), t_end=1.0)
    grid = TimeGrid.span(1.0, 200)
    ops = hilbert_ops(model.frame(grid))
    blocks = partition(ops, 1)
    props = block_propagators(blocks, grid)
    h_i, d_i = interaction_picture(ops, blocks, props)
    npt.assert_allclose(h_i[:, 0, 0], 0, atol=1e-15)
    npt.assert_allclose(np.abs(h_i[:, 0, 1]), np.abs(blocks.W_H_dag[:, 0]),
                        atol=1e-12)
    npt.assert_allclose(d_i, 0)
    with pytest.raises(ValueError):
        interaction_picture(open_qubit_ops()[2], blocks, props)


def test_open_qubit_interaction_row():
    _, grid, ops = open_qubit_ops(steps=1000, j0=20.0)
    blocks = partition(ops, 3)
    props = block_propagators(blocks, grid)
    h_i, _ = interaction_picture(ops, blocks, props)
    rate = math.pi / 4
    npt.assert_allclose(np.abs(h_i[:, 0, 1:3]), rate, atol=0.1 * rate)
    assert np.max(np.abs(h_i[:, 0, 3])) <= 0.1 * rate
