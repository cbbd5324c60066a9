"""

Adiabatic frame
===============

The instantaneous eigen-system of ``H(t)`` on a time grid, and the
Hamiltonian and dissipator superoperators expressed in the frame of the
eigenoperators ``Phi_k = |E_n><E_m|`` with ``k = m + n N``.

A density operator is expanded as::

    rho(t) = sum_k r_k(t) exp(-i Theta_k(t)) Phi_k(t)

and the coefficients obey ``R' = (-i H_a + D_a) R``. For closed systems
the same construction on state vectors gives the N x N frame
Hamiltonian (see `hilbert_ops`).

"""

from dataclasses import dataclass
import math
from typing import Optional

import numpy as np
from logbook import Logger

from .densemath import (DEFAULT_POLICY, TimeGrid, check_finite, cumtrapz,
                        dagger, herm_eigendecompose, midpoint_values,
                        rk4_sampled)
from .errors import GridResolutionError

logger = Logger('frame')


def pair_differences(values):
    """``values[n] - values[m]`` flattened to index ``k = m + n N``."""
    values = np.asarray(values)
    n = values.shape[-1]
    diff = values[..., :, None] - values[..., None, :]
    return diff.reshape(values.shape[:-1] + (n * n,))


def degeneracy_flags(energies, policy=DEFAULT_POLICY):
    energies = np.asarray(energies, dtype=float)
    n = energies.shape[-1]
    gaps = np.abs(energies[:, :, None] - energies[:, None, :])
    gaps = gaps + np.where(np.eye(n, dtype=bool), np.inf, 0.0)
    scale = np.maximum(1.0, np.max(np.abs(energies), axis=1))
    return np.min(gaps, axis=2) < policy.degeneracy_gap * scale[:, None]


@dataclass(frozen=True, eq=False)
class SpectralFrame:
    """Gauge-fixed eigen-system of H(t) sampled on a grid.

    `energies` has shape ``(M + 1, N)`` in ascending order, `vectors`
    holds the eigenvectors as columns, and `level_phases` are the
    dynamical phases ``theta_n = int_0^t E_n``. `derivatives`, when
    given, are exact time derivatives of the vectors.

    """

    grid: TimeGrid
    energies: np.ndarray
    vectors: np.ndarray
    level_phases: np.ndarray
    derivatives: Optional[np.ndarray] = None
    degenerate: Optional[np.ndarray] = None

    @property
    def size(self):
        return self.vectors.shape[-1]

    @property
    def lambdas(self):
        return pair_differences(self.energies)

    @property
    def thetas(self):
        return pair_differences(self.level_phases)

    def basis(self):
        """Vectorized eigenoperators, one column per ``k``."""
        n = self.size
        v = self.vectors
        kron = np.einsum('tab,tcd->tacbd', v.conj(), v).reshape(
            (len(v), n * n, n * n))
        k = np.arange(n * n)
        return kron[:, :, (k % n) * n + k // n]

    def connection(self, policy=DEFAULT_POLICY):
        """``A_mn = <E_m | d/dt E_n>`` at every grid node.

        Without exact derivatives the vectors are differenced on the
        grid, and the result is checked against anti-Hermiticity and a
        half-resolution estimate.

        """
        v = self.vectors
        if self.derivatives is not None:
            return dagger(v) @ self.derivatives
        dt = self.grid.dt
        a = dagger(v) @ np.gradient(v, dt, axis=0, edge_order=2)
        error = float(np.max(np.abs(a + dagger(a))))
        if self.grid.steps >= 4:
            coarse = dagger(v[::2]) @ np.gradient(
                v[::2], 2 * dt, axis=0, edge_order=2)
            error = max(error, float(np.max(np.abs(a[::2] - coarse))) / 3)
        tolerance = policy.derivative_tol * max(1.0, float(np.max(np.abs(a))))
        if error > tolerance:
            suggested = int(math.ceil(
                1.25 * self.grid.steps * math.sqrt(error / tolerance)))
            raise GridResolutionError(error, self.grid.steps, suggested)
        return a

    def regauge(self, phases, rates=None):
        """Multiply ``|E_n(t)>`` by ``exp(i phases[t, n])``.

        `rates` are the time derivatives of `phases`; they default to
        zero.

        """
        phases = np.broadcast_to(np.asarray(phases, dtype=float),
                                 self.energies.shape)
        factor = np.exp(1j * phases)[:, None, :]
        derivatives = None
        if self.derivatives is not None:
            derivatives = self.derivatives * factor
            if rates is not None:
                rates = np.broadcast_to(np.asarray(rates, dtype=float),
                                        self.energies.shape)
                derivatives = derivatives + (1j * rates[:, None, :]
                                             * self.vectors * factor)
        return SpectralFrame(self.grid, self.energies, self.vectors * factor,
                             self.level_phases, derivatives, self.degenerate)


def _fix_gauge(vectors):
    fixed = np.array(vectors, dtype=complex)
    first = fixed[0]
    pivot = np.argmax(np.abs(first), axis=0)
    cols = np.arange(first.shape[1])
    lead = first[pivot, cols]
    fixed[0] = first * (np.abs(lead) / lead)[None, :]
    for i in range(1, len(fixed)):
        overlap = np.einsum('an,an->n', fixed[i - 1].conj(), fixed[i])
        scale = np.abs(overlap)
        phase = np.where(scale > 0, overlap.conj() / np.where(
            scale > 0, scale, 1.0), 1.0)
        fixed[i] = fixed[i] * phase[None, :]
    return fixed


def build_spectral_frame(hamiltonian, grid, policy=DEFAULT_POLICY):
    """Numerical eigen-system of ``hamiltonian(t)`` on `grid`.

    Eigenvector phases are fixed by parallel transport: the largest
    component is made real-positive at the first node, and successive
    overlaps are made real-positive after that. Dynamical phases are
    accumulated with the trapezoid rule.

    """
    samples = np.stack([np.asarray(hamiltonian(t), dtype=complex)
                        for t in grid.times])
    energies, vectors = herm_eigendecompose(samples, policy)
    residual = np.max(np.abs(samples @ vectors - vectors * energies[:, None, :]))
    if residual > policy.residual_tol * max(1.0, float(np.max(np.abs(energies)))):
        logger.warning('eigen-residual {0:.3e} above tolerance', residual)
    vectors = _fix_gauge(vectors)
    flags = degeneracy_flags(energies, policy)
    if flags.any():
        logger.warning('{0} degenerate instants in frame', int(flags.any(axis=1).sum()))
    return SpectralFrame(grid, energies, vectors,
                         np.real(cumtrapz(energies, grid.dt)), None, flags)


def analytic_frame(grid, energies, vectors, level_phases, derivatives=None,
                   policy=DEFAULT_POLICY):
    energies = np.asarray(energies, dtype=float)
    return SpectralFrame(grid, energies,
                         check_finite(np.asarray(vectors, dtype=complex)),
                         np.asarray(level_phases, dtype=float),
                         None if derivatives is None
                         else np.asarray(derivatives, dtype=complex),
                         degeneracy_flags(energies, policy))


@dataclass(frozen=True, eq=False)
class AdiabaticFrameOps:
    """Frame Hamiltonian and dissipator samples, shape ``(M + 1, d, d)``.

    `space` is ``'liouville'`` (``d = N^2``) or ``'hilbert'`` (``d = N``).

    """

    frame: SpectralFrame
    hamiltonian: np.ndarray
    dissipator: np.ndarray
    space: str = 'liouville'

    @property
    def grid(self):
        return self.frame.grid

    @property
    def dim(self):
        return self.hamiltonian.shape[-1]

    def generator(self):
        return -1j * self.hamiltonian + self.dissipator


def _sandwich(phases, matrices):
    p = np.exp(1j * phases)
    return p[:, :, None] * matrices * p.conj()[:, None, :]


def build_adiabatic_ops(frame, dissipator=None, policy=DEFAULT_POLICY):
    """Frame superoperators for a lab-frame dissipator ``t -> N^2 x N^2``.

    ``H_a[k, l] = -i exp(-i (Theta_l - Theta_k)) <<Phi_k | d/dt Phi_l>>``
    and ``D_a[k, l] = exp(-i (Theta_l - Theta_k)) <<Phi_k | D Phi_l>>``.

    """
    a = frame.connection(policy)
    n = frame.size
    eye = np.eye(n)
    shape = (len(a), n * n, n * n)
    x = (np.einsum('tab,cd->tacbd', a, eye).reshape(shape)
         - np.einsum('ab,tdc->tacbd', eye, a).reshape(shape))
    thetas = frame.thetas
    h = -1j * _sandwich(thetas, x)
    h = 0.5 * (h + dagger(h))
    if dissipator is None:
        d = np.zeros(shape, dtype=complex)
    else:
        basis = frame.basis()
        lab = np.stack([np.asarray(dissipator(t), dtype=complex)
                        for t in frame.grid.times])
        d = _sandwich(thetas, dagger(basis) @ lab @ basis)
    logger.debug('built {0}x{0} frame superoperators on {1} steps',
                 n * n, frame.grid.steps)
    return AdiabaticFrameOps(frame, h, check_finite(d, 'frame dissipator'))


def hilbert_ops(frame, policy=DEFAULT_POLICY):
    """Closed-system frame Hamiltonian on state vectors.

    ``H_a[m, n] = -i exp(-i (theta_n - theta_m)) <E_m | d/dt E_n>``.

    """
    a = frame.connection(policy)
    h = -1j * _sandwich(frame.level_phases, a)
    h = 0.5 * (h + dagger(h))
    return AdiabaticFrameOps(frame, h, np.zeros_like(h), 'hilbert')


def propagate_frame(ops, initial):
    """Integrate ``R' = (-i H_a + D_a) R`` from `initial` on the ops grid."""
    generator = ops.generator()
    return rk4_sampled(generator, midpoint_values(generator), initial,
                       ops.grid.dt)


def reconstruct(frame, coefficients, space='liouville'):
    """Lab-frame density operators (or state vectors) from frame coefficients."""
    coefficients = np.asarray(coefficients)
    v = frame.vectors
    n = frame.size
    if space == 'hilbert':
        amplitudes = coefficients * np.exp(-1j * frame.level_phases)
        return np.einsum('tab,tb->ta', v, amplitudes)
    weights = (coefficients * np.exp(-1j * frame.thetas)).reshape(
        (len(coefficients), n, n))
    return v @ weights @ dagger(v)
