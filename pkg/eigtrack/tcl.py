"""

Projected dynamics
==================

Time-convolutionless propagation of the target component.

In the Schrödinger picture the target coefficient obeys, to second
order in the block-off-diagonal couplings::

    r0' = -[i g_H - g_D + int_0^t h(t, t') dt' + int_0^t f(t, t') dt'] r0

with the transition kernels::

    h(t, t') = W_H^H(t) G_e(t, t') W_H(t') G_g^*(t, t')
    f(t, t') = i [W_H^H(t) G_e(t, t') W_D(t') + V_D(t) G_e(t, t') W_H(t')] G_g^*(t, t')

Every kernel factorizes as ``sum_r a_r(t) b_r(t')`` once the
propagators are written from the initial time, so running integrals
cost one pass over the grid (see `KernelTable`).

The closed-system limit uses the same machinery on state vectors, and
the Nakajima-Zwanzig form of the same equation is solved directly for
validation.

"""

from dataclasses import dataclass, field
from typing import List, Optional, Set

import numpy as np
from logbook import Logger

from .densemath import (DEFAULT_POLICY, TimeGrid, cumtrapz, matrix_exp,
                        midpoint_values, ordered_product, propagate_linear,
                        rk4_sampled)
from .errors import NonFiniteKernelError
from .frame import hilbert_ops
from .partition import block_propagators, interaction_picture, partition

logger = Logger('tcl')


@dataclass(eq=False)
class TrajectoryResult:
    """Target population ``r0(t)`` or amplitude ``c0(t)`` on a grid.

    `generator` holds ``r0'/r0`` when the run was time local. Recoverable
    problems are recorded in `diagnostics`, with a short tag in `flags`.

    """

    grid: TimeGrid
    amplitude: np.ndarray
    kind: str = 'population'
    generator: Optional[np.ndarray] = None
    states: Optional[np.ndarray] = None
    diagnostics: List[str] = field(default_factory=list)
    flags: Set[str] = field(default_factory=set)

    @property
    def fidelity_series(self):
        magnitude = np.abs(self.amplitude)
        return np.sqrt(magnitude) if self.kind == 'population' else magnitude

    @property
    def fidelity(self):
        return float(self.fidelity_series[-1])

    def note(self, flag, message):
        logger.warning(message)
        self.diagnostics.append(message)
        self.flags.add(flag)


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Separable kernels ``k(t_i, t_j) = sum_r left[i, r] right[j, r]``.

    `f_left` and `f_right` may be omitted for closed systems.

    """

    grid: TimeGrid
    h_left: np.ndarray
    h_right: np.ndarray
    f_left: Optional[np.ndarray] = None
    f_right: Optional[np.ndarray] = None

    def _factors(self, kind):
        if kind == 'h':
            return self.h_left, self.h_right
        if kind != 'f':
            raise ValueError('unknown kernel {0!r}'.format(kind))
        if self.f_left is None:
            return None
        return self.f_left, self.f_right

    def value(self, kind, i, j):
        factors = self._factors(kind)
        if factors is None:
            return 0j
        left, right = factors
        return complex(np.sum(left[i] * right[j]))

    def h(self, i, j):
        return self.value('h', i, j)

    def f(self, i, j):
        return self.value('f', i, j)

    def running(self, kind):
        """``int_0^t k(t, t') dt'`` at every node."""
        factors = self._factors(kind)
        if factors is None:
            return np.zeros(self.grid.steps + 1, dtype=complex)
        left, right = factors
        return np.sum(left * cumtrapz(right, self.grid.dt), axis=1)

    @property
    def running_h(self):
        return self.running('h')

    @property
    def running_f(self):
        return self.running('f')

    def matrix(self, kind='h'):
        """Kernel on all node pairs, zero above the diagonal."""
        factors = self._factors(kind)
        if factors is None:
            n = self.grid.steps + 1
            return np.zeros((n, n), dtype=complex)
        left, right = factors
        return np.tril(left @ right.T)

    def double_integral(self, kind='h'):
        """``int_0^T dt int_0^t k(t, t') dt'``."""
        return complex(cumtrapz(self.running(kind), self.grid.dt)[-1])

    def check_finite(self):
        times = self.grid.times
        for kind in ('h', 'f'):
            factors = self._factors(kind)
            if factors is None:
                continue
            left, right = factors
            bad_left = ~np.all(np.isfinite(left), axis=1)
            bad_right = ~np.all(np.isfinite(right), axis=1)
            if bad_right.any():
                j = int(np.argmax(bad_right))
                raise NonFiniteKernelError(times[j], times[j])
            if bad_left.any():
                i = int(np.argmax(bad_left))
                raise NonFiniteKernelError(times[i], times[0])


def _q_adjoint(ge, column):
    """``G_e^H column`` at every node."""
    return np.einsum('tba,tb->ta', ge.conj(), column)


def kernel_table(blocks, props):
    """Exact transition kernels of `blocks` as a `KernelTable`."""
    ge, gg = props.e, props.g
    phase = np.conj(gg)[:, None]
    h_row = np.einsum('ta,tab->tb', blocks.W_H_dag, ge)
    v_row = np.einsum('ta,tab->tb', blocks.V_D, ge)
    h_col = _q_adjoint(ge, blocks.W_H) * gg[:, None]
    d_col = _q_adjoint(ge, blocks.W_D) * gg[:, None]
    return KernelTable(props.grid, h_row * phase, h_col,
                       1j * np.concatenate([h_row, v_row], axis=1) * phase,
                       np.concatenate([d_col, h_col], axis=1))


def _pair(props, t, t_prime):
    grid = props.grid
    i, j = grid.index(t), grid.index(t_prime)
    if i < j:
        raise ValueError("kernels need t >= t'")
    return i, j


def kernel_h(blocks, props, t, t_prime):
    """Direct chain product ``W_H^H G_e W_H G_g^*`` at grid times."""
    i, j = _pair(props, t, t_prime)
    chain = blocks.W_H_dag[i] @ props.ge(i, j) @ blocks.W_H[j]
    return complex(chain * np.conj(props.gg(i, j)))


def kernel_f(blocks, props, t, t_prime):
    i, j = _pair(props, t, t_prime)
    ge = props.ge(i, j)
    chain = (blocks.W_H_dag[i] @ ge @ blocks.W_D[j]
             + blocks.V_D[i] @ ge @ blocks.W_H[j])
    return complex(1j * chain * np.conj(props.gg(i, j)))


def sigma_first_order(blocks, props, grid, t=None):
    """``Sigma1(t) = int_0^t Q L_I(t') P dt'``, the Q column.

    Returns every node unless a single time `t` is asked for.

    """
    column = _q_adjoint(props.e, -1j * blocks.W_H + blocks.W_D)
    sigma = cumtrapz(column * props.g[:, None], grid.dt)
    return sigma if t is None else sigma[grid.index(t)]


def sigma_norm(blocks, props, grid, policy=DEFAULT_POLICY):
    """Largest norm of `sigma_first_order` and whether it breaks the limit."""
    sigma = sigma_first_order(blocks, props, grid)
    value = float(np.max(np.linalg.norm(sigma, axis=1)))
    flagged = value >= policy.sigma_limit
    if flagged:
        logger.warning('|Sigma1| reaches {0:.3g}; the perturbative '
                       'expansion is not controlled', value)
    return value, flagged


def propagate_projected(blocks, kernels, grid, kind='population',
                        policy=DEFAULT_POLICY):
    """Integrate the second-order projected equation from ``r0(0) = 1``."""
    kernels.check_finite()
    rate = (1j * blocks.g_H + kernels.running_h - blocks.g_D
            + kernels.running_f)
    generator = -rate
    amplitude = rk4_sampled(generator, midpoint_values(generator), 1.0 + 0j,
                            grid.dt)
    result = TrajectoryResult(grid, amplitude, kind, generator)
    peak = float(np.max(np.abs(amplitude)))
    if peak > 1 + policy.population_tol:
        result.note('overflow', 'target component reaches {0:.12g} > 1; '
                    'truncation beyond its range'.format(peak))
    return result


def closed_blocks(model, grid, policy=DEFAULT_POLICY):
    """Hilbert-space blocks and propagators of a closed model."""
    ops = hilbert_ops(model.frame(grid, policy), policy)
    blocks = partition(ops, model.target)
    return ops, blocks, block_propagators(blocks, grid, policy)


def _exact_closed(model, grid, policy):
    levels, connection = model.levels, model.connection

    def generator(t, j):
        return -1j * j * np.diag(levels(t)) - connection(t)

    def kick(t, amplitude):
        return np.diag(np.exp(-1j * amplitude * levels(t)))

    start = np.zeros(len(levels(0.0)), dtype=complex)
    start[model.target] = 1.0
    states = propagate_linear(generator, start, grid, model.control, kick,
                              policy)
    return TrajectoryResult(grid, states[:, model.target], 'amplitude',
                            states=states)


def propagate_closed(model, grid, mode='second_order', kernels=None,
                     policy=DEFAULT_POLICY):
    """Target amplitude ``c0(t)`` of a closed model.

    ``mode='second_order'`` integrates the projected equation, with the
    exact frame kernels unless `kernels` is given. ``mode='exact'``
    integrates the Schrödinger equation in the instantaneous eigenbasis.

    """
    if mode == 'exact':
        result = _exact_closed(model, grid, policy)
    elif mode == 'second_order':
        _, blocks, props = closed_blocks(model, grid, policy)
        if kernels is None:
            kernels = kernel_table(blocks, props)
        result = propagate_projected(blocks, kernels, grid, 'amplitude', policy)
    else:
        raise ValueError('unknown mode {0!r}'.format(mode))
    degenerate = model.frame(grid, policy).degenerate
    if degenerate is not None and degenerate.any():
        result.note('degenerate', 'gap closes at {0} instants'.format(
            int(degenerate.any(axis=1).sum())))
    return result


def propagate_schrodinger(model, grid, psi0=None, policy=DEFAULT_POLICY):
    """Lab-frame Schrödinger propagation, projected on the target state."""
    psi0 = model.initial_state() if psi0 is None else psi0

    def generator(t, j):
        return -1j * model.hamiltonian(t, j)

    states = propagate_linear(generator, psi0, grid, model.control,
                              model.kick, policy)
    target = model.vectors(grid.times)[:, :, model.target]
    overlap = np.einsum('ta,ta->t', target.conj(), states)
    return TrajectoryResult(grid, overlap, 'amplitude', states=states)


def exact_tcl_generator(ops, blocks, props, states):
    """Exact interaction-picture generator ``K(t) = (L_I chi)_0 / chi_0``.

    `states` are frame coefficients ``R(t)`` in the unpermuted basis,
    for instance from `frame.propagate_frame`.

    """
    h_i, d_i = interaction_picture(ops, blocks, props)
    chi = np.einsum('tba,tb->ta', props.u0().conj(),
                    np.asarray(states)[:, blocks.permutation])
    flow = np.einsum('ta,ta->t', (-1j * h_i + d_i)[:, 0, :], chi)
    return flow / chi[:, 0]


@dataclass(eq=False)
class NZReport:
    """Outcome of `nakajima_zwanzig_check`.

    `residual` measures how well the Q component rebuilt from its
    formal solution satisfies its own differential equation.

    """

    nz: np.ndarray
    reference: np.ndarray
    deviation: float
    tcl_deviation: Optional[float]
    iterations: int
    converged: bool
    residual: float
    diagnostics: List[str] = field(default_factory=list)


def nakajima_zwanzig_check(blocks, props, grid, reference=None, tcl=None,
                           policy=DEFAULT_POLICY):
    """Solve the memory-kernel equation for ``r0`` by Picard iteration.

    ::

        r0' = (-i g_H + g_D) r0
              + int_0^t PLQ(t) G(t, t') QLP(t') r0(t') dt'

    where ``G`` propagates the Q block with ``-i e_H + e_D``. The
    reference defaults to direct propagation of the full permuted frame
    equation; `tcl` is an optional `TrajectoryResult` to compare too.

    """
    dt = grid.dt
    phi = cumtrapz(-1j * blocks.g_H + blocks.g_D, dt)
    q_generator = -1j * blocks.e_H + blocks.e_D
    memory = ordered_product(matrix_exp(dt * midpoint_values(q_generator)),
                             cumulative=True)
    inverse = np.linalg.inv(memory)
    row = -1j * blocks.W_H_dag + blocks.V_D
    column = -1j * blocks.W_H + blocks.W_D
    left = np.einsum('ta,tab->tb', row, memory) * np.exp(-phi)[:, None]
    right = np.einsum('tab,tb->ta', inverse, column) * np.exp(phi)[:, None]

    u = np.ones(grid.steps + 1, dtype=complex)
    converged = False
    iterations = 0
    for iterations in range(1, policy.picard_iterations + 1):
        inner = cumtrapz(right * u[:, None], dt)
        updated = 1 + cumtrapz(np.sum(left * inner, axis=1), dt)
        change = float(np.max(np.abs(updated - u)))
        u = updated
        if change <= policy.picard_tol:
            converged = True
            break
    nz = np.exp(phi) * u
    diagnostics = []
    if not converged:
        message = 'Picard iteration did not converge in {0} steps'.format(
            iterations)
        logger.warning(message)
        diagnostics.append(message)

    if reference is None:
        generator = blocks.generator()
        start = np.zeros(blocks.dim, dtype=complex)
        start[0] = 1.0
        reference = rk4_sampled(generator, midpoint_values(generator), start,
                                dt)[:, 0]
    tcl_deviation = None
    if tcl is not None:
        tcl_deviation = float(np.max(np.abs(tcl.amplitude - reference)))

    q_part = np.einsum('tab,tb->ta', memory,
                       cumtrapz(np.einsum('tab,tb->ta', inverse, column)
                                * nz[:, None], dt))
    flow = np.einsum('tab,tb->ta', q_generator, q_part) + column * nz[:, None]
    residual = float(np.max(np.abs(
        np.gradient(q_part, dt, axis=0, edge_order=2) - flow)))
    logger.debug('NZ check: {0} Picard steps, residual {1:.2e}',
                 iterations, residual)
    return NZReport(nz, np.asarray(reference),
                    float(np.max(np.abs(nz - reference))), tcl_deviation,
                    iterations, converged, residual, diagnostics)
