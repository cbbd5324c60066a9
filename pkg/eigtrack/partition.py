"""

Partitioning
============

Splits adiabatic-frame operators into the target block ``P`` and its
complement ``Q``. The basis is permuted so the target comes first, which
makes ``P = 1 (+) 0`` literally::

    H = [[g_H,  W_H^H],      D = [[g_D, V_D],
         [W_H,  e_H  ]]           [W_D, e_D]]

Block propagators are stored from the initial time only; pairs follow
from ``G(t, t') = G(t, 0) G(t', 0)^-1``.

"""

from dataclasses import dataclass

import numpy as np
from logbook import Logger

from .densemath import (DEFAULT_POLICY, cumtrapz, dagger, matrix_exp,
                        midpoint_values, ordered_product)
from .errors import DegenerateTargetError, InvalidTargetError

logger = Logger('partition')


@dataclass(frozen=True, eq=False)
class PartitionBlocks:
    """Blocks of the permuted frame operators, time on the first axis.

    `W_H` and `W_D` are Q-column blocks of shape ``(M + 1, d - 1)``;
    `W_H_dag` and `V_D` are the P-row blocks.

    """

    grid: object
    target: int
    permutation: np.ndarray
    g_H: np.ndarray
    W_H: np.ndarray
    W_H_dag: np.ndarray
    e_H: np.ndarray
    g_D: np.ndarray
    W_D: np.ndarray
    V_D: np.ndarray
    e_D: np.ndarray
    space: str = 'liouville'

    @property
    def dim(self):
        return self.e_H.shape[-1] + 1

    @staticmethod
    def _assemble(g, col, row, e):
        d = e.shape[-1] + 1
        out = np.empty((len(g), d, d), dtype=complex)
        out[:, 0, 0] = g
        out[:, 1:, 0] = col
        out[:, 0, 1:] = row
        out[:, 1:, 1:] = e
        return out

    def hamiltonian(self):
        """Permuted frame Hamiltonian reassembled from its blocks."""
        return self._assemble(self.g_H, self.W_H, self.W_H_dag, self.e_H)

    def dissipator(self):
        return self._assemble(self.g_D, self.W_D, self.V_D, self.e_D)

    def generator(self):
        return -1j * self.hamiltonian() + self.dissipator()

    def projectors(self):
        p = np.zeros((self.dim, self.dim))
        p[0, 0] = 1.0
        return p, np.eye(self.dim) - p

    def restore(self, values):
        """Undo the target-first permutation along the last axis."""
        values = np.asarray(values)
        return values[..., np.argsort(self.permutation)]


def target_level(target, size, space='liouville'):
    """Hilbert level of a target index; rejects coherence operators."""
    if space == 'hilbert':
        if not 0 <= target < size:
            raise InvalidTargetError(
                'target {0} outside {1} levels'.format(target, size))
        return target
    n, m = divmod(target, size)
    if not 0 <= target < size * size or n != m:
        raise InvalidTargetError(
            'target {0} is not a population operator'.format(target))
    return n


def partition(ops, target, space=None):
    space = ops.space if space is None else space
    frame = ops.frame
    level = target_level(target, frame.size, space)
    if frame.degenerate is not None and frame.degenerate[:, level].any():
        first = int(np.argmax(frame.degenerate[:, level]))
        raise DegenerateTargetError(level, float(frame.grid.times[first]))
    perm = np.arange(ops.dim)
    perm[0], perm[target] = target, 0
    h = ops.hamiltonian[:, perm][:, :, perm]
    d = ops.dissipator[:, perm][:, :, perm]
    return PartitionBlocks(ops.grid, target, perm,
                           h[:, 0, 0], h[:, 1:, 0], h[:, 0, 1:], h[:, 1:, 1:],
                           d[:, 0, 0], d[:, 1:, 0], d[:, 0, 1:], d[:, 1:, 1:],
                           space)


@dataclass(frozen=True, eq=False)
class BlockPropagators:
    """``G_g(t, 0)`` (scalars) and ``G_e(t, 0)`` on the grid nodes."""

    grid: object
    g: np.ndarray
    e: np.ndarray
    drift: float = 0.0

    def gg(self, i, j):
        """``G_g(t_i, t_j)``."""
        return self.g[i] * np.conj(self.g[j])

    def ge(self, i, j):
        """``G_e(t_i, t_j)``; unitary factors invert by conjugation."""
        return self.e[i] @ dagger(self.e[j])

    def u0(self):
        q = self.e.shape[-1]
        out = np.zeros((len(self.g), q + 1, q + 1), dtype=complex)
        out[:, 0, 0] = self.g
        out[:, 1:, 1:] = self.e
        return out


def block_propagators(blocks, grid, policy=DEFAULT_POLICY):
    """Propagators of the Hamiltonian diagonal blocks.

    `drift` is the largest deviation of ``G_e(T, 0)`` from unitarity; a
    warning is logged when it exceeds ``policy.unitarity_tol``.

    """
    g = np.exp(-1j * cumtrapz(blocks.g_H, grid.dt))
    steps = matrix_exp(-1j * grid.dt * midpoint_values(blocks.e_H))
    e = ordered_product(steps, cumulative=True)
    eye = np.eye(e.shape[-1])
    drift = float(np.max(np.abs(dagger(e[-1]) @ e[-1] - eye)))
    if drift > policy.unitarity_tol:
        logger.warning('Q-block propagator drifts from unitarity by '
                       '{0:.2e}', drift)
    else:
        logger.debug('Q-block propagator unitarity drift {0:.2e}', drift)
    return BlockPropagators(grid, g, e, drift)


def interaction_picture(ops, blocks, props):
    """``H_I = U0^H H_1 U0`` and ``D_I = U0^H D U0`` in the permuted basis.

    `ops` only fixes the dimension; the operators are taken from
    `blocks`.

    """
    if ops.dim != blocks.dim:
        raise ValueError('ops and blocks have different dimensions')
    u = props.u0()
    h1 = blocks.hamiltonian()
    h1[:, 0, 0] = 0.0
    h1[:, 1:, 1:] = 0.0
    return dagger(u) @ h1 @ u, dagger(u) @ blocks.dissipator() @ u
