"""

Models
======

Hamiltonian families with analytic eigen-systems.

All models factor their Hamiltonian as ``H(t) = J(t) h(t)``, where
``J(t)`` comes from a `ControlSignal` and the geometry ``h(t)`` is
control independent. Eigenvalues are ``J(t) levels(t)`` and eigenvectors
depend only on the geometry, so any control leaves them untouched.

Every model exposes the same small interface used by the solvers::

    model.geometry(t)        # h(t), also for arrays of times
    model.levels(t)          # ascending eigenvalues of h(t)
    model.vectors(t)         # eigenvectors as columns
    model.derivatives(t)     # d/dt of the eigenvectors
    model.connection(t)      # A = V^H dV/dt
    model.level_phases(ts)   # int_0^t E_n, impulses included
    model.frame(grid)        # analytic SpectralFrame
    model.target             # index of the tracked eigenvector

"""

from dataclasses import dataclass, field
import math
from typing import Tuple

import numpy as np
from logbook import Logger

from .controls import ControlSignal
from .densemath import DEFAULT_POLICY, dagger, matrix_exp
from .frame import analytic_frame
from .tcl import KernelTable

logger = Logger('models')


def _matrix(*rows):
    entries = np.broadcast_arrays(
        *[np.asarray(x, dtype=complex) for row in rows for x in row])
    n = len(rows)
    return np.stack(entries, axis=-1).reshape(entries[0].shape + (n, n))


class EigenModel(object):
    """Shared behaviour of the analytic models."""

    name = 'model'
    target = 1

    def hamiltonian(self, t, j=None):
        j = self.control.sample_J(t) if j is None else j
        return np.asarray(j)[..., None, None] * self.geometry(t)

    def energies(self, t):
        return np.asarray(self.control.sample_J(t))[..., None] * self.levels(t)

    def connection(self, t):
        return dagger(self.vectors(t)) @ self.derivatives(t)

    def level_phases(self, times):
        times = np.asarray(times, dtype=float)
        return np.multiply.outer(self.control.phase(times), self.levels(0.0))

    def frame(self, grid, policy=DEFAULT_POLICY):
        times = grid.times
        return analytic_frame(grid, self.energies(times), self.vectors(times),
                              self.level_phases(times), self.derivatives(times),
                              policy)

    def initial_state(self):
        return self.vectors(0.0)[:, self.target]

    def kick(self, t, amplitude):
        """Lab-frame propagator of an impulse of area `amplitude` at `t`."""
        return matrix_exp(-1j * amplitude * self.geometry(t))


@dataclass(frozen=True)
class OpenQubitModel(EigenModel):
    """``H(t) = J(t) [cos(a t / T) sz + sin(a t / T) sx]`` with ``sz = diag(-1, 1)``.

    Column 0 of `vectors` is the ground state ``|E+>`` (energy ``-J``),
    column 1 the excited state ``|E->`` (``+J``), which is tracked. The
    default sweep angle ``a = pi / 2`` rotates ``|1>`` into
    ``(|0> + |1>) / sqrt(2)``.

    """

    control: ControlSignal = field(default_factory=ControlSignal)
    t_end: float = 1.0
    angle: float = math.pi / 2

    name = 'open_qubit'

    @property
    def rotation_rate(self):
        return self.angle / (2 * self.t_end)

    def _half_angle(self, t):
        return self.rotation_rate * np.asarray(t, dtype=float)

    def geometry(self, t):
        theta = 2 * self._half_angle(t)
        c, s = np.cos(theta), np.sin(theta)
        return _matrix((-c, s), (s, c))

    def levels(self, t):
        return np.broadcast_to(np.array([-1.0, 1.0]),
                               np.shape(t) + (2,)).copy()

    def vectors(self, t):
        phi = self._half_angle(t)
        c, s = np.cos(phi), np.sin(phi)
        return _matrix((c, s), (-s, c))

    def derivatives(self, t):
        phi = self._half_angle(t)
        c, s = np.cos(phi), np.sin(phi)
        return self.rotation_rate * _matrix((-s, c), (-c, -s))

    def sigma_z(self, t):
        """``sz(t) = V diag(-1, 1) V^H`` in the lab basis."""
        v = self.vectors(t)
        return v @ np.diag([-1.0, 1.0]) @ dagger(v)

    def lowering(self, t):
        """``|E+(t)><E-(t)|``, the decay channel of the excited level."""
        v = self.vectors(t)
        return np.einsum('...a,...b->...ab', v[..., :, 0], v[..., :, 1].conj())


def open_qubit_frame(model, grid, policy=DEFAULT_POLICY):
    return model.frame(grid, policy)


@dataclass(frozen=True)
class RotatingFieldQubit(EigenModel):
    """``H(t) = J(t) [cos(W t) sx + sin(W t) sy + (w / 2) sz]``.

    `omega_field` is the rotation rate ``W`` and `omega_z` the static
    field ``w``. Column 1 is the upper level ``|E0>`` (``+J k / 2``), the
    tracked state.

    """

    control: ControlSignal = field(default_factory=ControlSignal)
    omega_field: float = 5.0
    omega_z: float = 5.0
    t_end: float = math.pi

    name = 'rotating'

    @property
    def k(self):
        return math.sqrt(self.omega_z ** 2 + 4.0)

    @property
    def gamma_angle(self):
        return math.atan((self.k - self.omega_z) / 2)

    def geometry(self, t):
        beta = self.omega_field * np.asarray(t, dtype=float)
        half = 0.5 * self.omega_z
        return _matrix((half, np.exp(-1j * beta)), (np.exp(1j * beta), -half))

    def levels(self, t):
        return np.broadcast_to(np.array([-0.5, 0.5]) * self.k,
                               np.shape(t) + (2,)).copy()

    def vectors(self, t):
        phase = np.exp(-1j * self.omega_field * np.asarray(t, dtype=float))
        c, s = math.cos(self.gamma_angle), math.sin(self.gamma_angle)
        return _matrix((-phase * s, phase * c), (c + 0 * phase, s + 0 * phase))

    def derivatives(self, t):
        phase = np.exp(-1j * self.omega_field * np.asarray(t, dtype=float))
        c, s = math.cos(self.gamma_angle), math.sin(self.gamma_angle)
        zero = 0 * phase
        return -1j * self.omega_field * _matrix((-phase * s, phase * c),
                                                (zero, zero))


def _kernel_phase(model, times):
    s2 = math.sin(model.gamma_angle) ** 2
    return model.omega_field * s2 * times + model.k * model.control.phase(times)


def rotating_h11(model, t, t_prime, control=None):
    """Transition kernel of the rotating-field qubit.

    ``(W^2 / k^2) exp(i W sin^2(g) (t - t')) exp(i k int_{t'}^t J)``

    """
    if t < t_prime:
        raise ValueError('rotating_h11 needs t >= t_prime')
    if control is not None:
        model = RotatingFieldQubit(control, model.omega_field, model.omega_z,
                                   model.t_end)
    weight = model.omega_field ** 2 / model.k ** 2
    return weight * np.exp(1j * (_kernel_phase(model, t)
                                 - _kernel_phase(model, t_prime)))


def rotating_kernels(model, grid):
    """Separable `KernelTable` of `rotating_h11` on `grid`."""
    phase = _kernel_phase(model, grid.times)
    weight = model.omega_field ** 2 / model.k ** 2
    return KernelTable(grid, (weight * np.exp(1j * phase))[:, None],
                       np.exp(-1j * phase)[:, None])


def _sqrt_antiderivative(u):
    root = np.sqrt(u * u + 0.25)
    return 0.5 * (u * root + 0.25 * np.log(u + root))


@dataclass(frozen=True)
class TwoQubitEffectiveModel(EigenModel):
    """Two spins with ``a = t / T``, ``b = 0``, ``w / 2 = 1 - t / T``.

    The dynamics is confined to ``span{|ud>, |du>}``, mapped to the
    single-qubit states ``|u>, |d>``. The local noise field `noise_b`
    only acts on ``|uu>, |dd>`` (see `full_hamiltonian`). The tracked
    state is the upper level, ``|ud>`` at ``t = 0``.

    """

    control: ControlSignal = field(default_factory=ControlSignal)
    t_end: float = 1.0
    noise_b: float = 0.0

    name = 'two_qubit'

    def _s(self, t):
        return np.asarray(t, dtype=float) / self.t_end

    def k(self, t):
        s = self._s(t)
        return 2 * np.sqrt(1 - 2 * s + 2 * s * s)

    def k_integral(self, t):
        """``int_0^t k``."""
        s = self._s(t)
        return (2 * math.sqrt(2) * self.t_end
                * (_sqrt_antiderivative(s - 0.5) - _sqrt_antiderivative(-0.5)))

    def angle(self, t):
        s = self._s(t)
        return 0.5 * np.arctan2(s, 1 - s)

    def angle_rate(self, t):
        return 2 / (self.t_end * self.k(t) ** 2)

    def geometry(self, t):
        s = self._s(t)
        return _matrix((1 - s, s), (s, -(1 - s)))

    def full_hamiltonian(self, t, noise_b=None, j=None):
        """Four-level Hamiltonian in the basis ``uu, ud, du, dd``."""
        b = self.noise_b if noise_b is None else noise_b
        j = self.control.sample_J(t) if j is None else j
        s = float(self._s(t))
        return j * np.array([[2 * b, 0, 0, 0],
                             [0, 1 - s, s, 0],
                             [0, s, -(1 - s), 0],
                             [0, 0, 0, -2 * b]], dtype=complex)

    def levels(self, t):
        k = self.k(t)
        return np.stack([-0.5 * k, 0.5 * k], axis=-1)

    def vectors(self, t):
        g = self.angle(t)
        c, s = np.cos(g), np.sin(g)
        return _matrix((-s, c), (c, s))

    def derivatives(self, t):
        g = self.angle(t)
        c, s = np.cos(g), np.sin(g)
        return self.angle_rate(t)[..., None, None] * _matrix((-c, -s), (-s, c))

    def gap_phase(self, times):
        """``int_0^t J k``, impulses weighted by ``k(t_j)``."""
        return self.control.weighted_phase(times, self.k_integral, self.k)

    def level_phases(self, times):
        phase = np.asarray(self.gap_phase(times))
        return np.stack([-0.5 * phase, 0.5 * phase], axis=-1)


def twoqubit_h11(model, t, t_prime, control=None):
    """``4 / (T^2 k^2(t) k^2(t')) exp(i int_{t'}^t J k)``."""
    if t < t_prime:
        raise ValueError('twoqubit_h11 needs t >= t_prime')
    if control is not None:
        model = TwoQubitEffectiveModel(control, model.t_end, model.noise_b)
    return (model.angle_rate(t) * model.angle_rate(t_prime)
            * np.exp(1j * (model.gap_phase(t) - model.gap_phase(t_prime))))


def twoqubit_kernels(model, grid):
    times = grid.times
    rate = model.angle_rate(times)
    phase = np.exp(1j * model.gap_phase(times))
    return KernelTable(grid, (rate * phase)[:, None],
                       (rate * phase.conj())[:, None])


def open_qubit_kernels(model, decay, j_tilde=None):
    """Constant-gap kernel table of the open qubit.

    With the gap frozen at ``2 J~``::

        h(t, t') = 2 w^2 cos(2 J~ (t - t'))
        f(t, t') = -(w^2 kappa(t') / J~) sin(2 J~ (t - t'))

    where ``w`` is the rotation rate. `j_tilde` defaults to the mean
    of ``J`` over the run.

    """
    grid = decay.grid
    if j_tilde is None:
        j_tilde = model.control.mean_J(grid.t_end)
    t = grid.times
    w2 = model.rotation_rate ** 2
    up, down = np.exp(2j * j_tilde * t), np.exp(-2j * j_tilde * t)
    kappa = np.nan_to_num(decay.kappa)
    return KernelTable(grid,
                       w2 * np.stack([up, down], axis=-1),
                       np.stack([down, up], axis=-1),
                       -w2 / (2j * j_tilde) * np.stack([up, -down], axis=-1),
                       kappa[:, None] * np.stack([down, up], axis=-1))


def open_qubit_tcl_fidelity(model, decay, j_tilde=None):
    """Closed-form second-order fidelity of the open qubit at ``T``.

    ``exp(-K(T) / 2 + (w T / 2)^2 (cos 2 J~ T - 1) / (J~ T)^2)``

    """
    t_end = decay.grid.t_end
    if j_tilde is None:
        j_tilde = model.control.mean_J(t_end)
    scale = (model.rotation_rate * t_end / 2) ** 2
    return math.exp(-0.5 * float(decay.kappa_integral[-1])
                    + scale * (math.cos(2 * j_tilde * t_end) - 1)
                    / (j_tilde * t_end) ** 2)


@dataclass(frozen=True)
class AdiabaticEstimate:

    value: float
    t_end: float
    excluded: Tuple[float, ...] = ()

    @property
    def margin(self):
        """``T / value``; the adiabatic regime needs this to be large."""
        return math.inf if self.value == 0 else self.t_end / self.value


def adiabatic_condition(model, grid, policy=DEFAULT_POLICY):
    """``max_s max_q |<E_q| dH/ds |E_0>| / (E_q - E_0)^2`` with ``s = t / T``.

    The matrix element is evaluated as ``(E_0 - E_q) <E_q|dE_0/dt> T``.
    Instants where a gap to the target closes are skipped with a
    warning.

    """
    frame = model.frame(grid, policy)
    a = frame.connection(policy)
    energies = frame.energies
    target = model.target
    gaps = np.abs(energies - energies[:, target:target + 1])
    coupling = np.abs(a[:, :, target])
    others = np.arange(frame.size) != target
    scale = np.maximum(1.0, np.max(np.abs(energies), axis=1))
    closed = np.any(gaps[:, others] < policy.degeneracy_gap * scale[:, None],
                    axis=1)
    excluded = tuple(grid.times[closed].tolist())
    if excluded:
        logger.warning('excluded {0} degenerate instants from the '
                       'adiabatic estimate', len(excluded))
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = model.t_end * coupling[:, others] / gaps[:, others]
    ratio = ratio[~closed]
    value = float(np.max(ratio)) if ratio.size else 0.0
    return AdiabaticEstimate(value, model.t_end, excluded)
