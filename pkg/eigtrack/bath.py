"""

Bath
====

Non-Markovian decay of the open qubit in an exponentially correlated
bath, ``alpha(t - s) = (G g / 2) exp(-g |t - s|)``.

The excited amplitude is ``c+(t) = c~(t) exp(i Phi(t))`` with
``Phi = int_0^t J`` and::

    c~' = -int_0^t alpha(t - s) exp(-2i (Phi(t) - Phi(s))) c~(s) ds

For the exponential kernel the memory integral ``y`` obeys a local
equation, so ``(c~, y)`` is propagated exactly over every piece where
``J`` is constant::

    c~' = -y
    y'  = (G g / 2) c~ - (g + 2i J) y

An impulse of area ``W`` multiplies ``y`` by ``exp(-2i W)``.

The decay rate and the Lamb shift follow as ``kappa = 2 Re(y / c~)`` and
``S = Im(y / c~)``. Both exact solvers for the qubit and the brute-force
Liouville oracle live here too.

"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from logbook import Logger

from .densemath import (DEFAULT_POLICY, Sampled, commutator_super,
                        conjugation_super, control_pieces, dagger,
                        lindblad_super, matrix_exp, propagate_linear, unvec,
                        vec)
from .errors import InstabilityError, TraceDriftError

logger = Logger('bath')

LOWERING = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class BathSpec:
    """Coupling strength `coupling` (G) and inverse memory time `memory_rate` (g)."""

    coupling: float
    memory_rate: float

    def __post_init__(self):
        if not (self.coupling > 0 and self.memory_rate > 0):
            raise ValueError('bath coupling and memory rate must be positive')

    @property
    def strength(self):
        return 0.5 * self.coupling * self.memory_rate

    def kernel(self, lag):
        return self.strength * np.exp(-self.memory_rate * np.abs(lag))


@dataclass(frozen=True, eq=False)
class DecayFunctions:
    """``c~`` and the memory integral ``y`` on a grid.

    After a truncation (``|c~|`` below the floor) the remaining samples
    are NaN and `truncated_at` is the first missing index.

    """

    grid: object
    c_tilde: np.ndarray
    memory: np.ndarray
    phase: np.ndarray
    truncated_at: Optional[int] = None
    diagnostics: Tuple[str, ...] = ()

    @classmethod
    def quiet(cls, grid, control):
        """No bath: ``c~ = 1`` and no memory."""
        n = grid.steps + 1
        return cls(grid, np.ones(n, dtype=complex), np.zeros(n, dtype=complex),
                   np.asarray(control.phase(grid.times), dtype=float))

    @classmethod
    def markovian(cls, grid, control, kappa, shift=0.0):
        """Constant rates: ``c~ = exp(-(kappa / 2 + i S) t)``."""
        rate = 0.5 * kappa + 1j * shift
        times = grid.times
        c = np.exp(-rate * times)
        return cls(grid, c, rate * c,
                   np.asarray(control.phase(times), dtype=float))

    @property
    def c_plus(self):
        return self.c_tilde * np.exp(1j * self.phase)

    @property
    def kappa(self):
        return 2 * np.real(self.memory / self.c_tilde)

    @property
    def shift(self):
        return np.imag(self.memory / self.c_tilde)

    @property
    def kappa_integral(self):
        """``int_0^t kappa``, exact from ``|c~|``."""
        return -2 * np.log(np.abs(self.c_tilde))

    @property
    def shift_integral(self):
        return -np.unwrap(np.angle(self.c_tilde))

    def kappa_at(self):
        return Sampled(self.grid, self.kappa)

    def shift_at(self):
        return Sampled(self.grid, self.shift)


def closed_form_c_tilde(bath, j, times):
    """``c~(t)`` for constant ``J = j`` from the second-order equation.

    ``c~'' + (g + 2i j) c~' + (G g / 2) c~ = 0`` with ``c~(0) = 1`` and
    ``c~'(0) = 0``.

    """
    b = bath.memory_rate + 2j * j
    root = np.sqrt(b * b - 4 * bath.strength + 0j)
    plus, minus = 0.5 * (-b + root), 0.5 * (-b - root)
    times = np.asarray(times, dtype=float)
    return (plus * np.exp(minus * times)
            - minus * np.exp(plus * times)) / (plus - minus)


def solve_c_plus(bath, control, grid, policy=DEFAULT_POLICY):
    """Exact piecewise solution of the local ``(c~, y)`` system."""
    pieces, kick_times, kick_amps = control_pieces(grid, control)
    starts = np.array([a for _, a, _ in pieces])
    ends = np.array([b for _, _, b in pieces])
    j = np.asarray(control.sample_J(0.5 * (starts + ends)), dtype=float)
    generators = np.zeros((len(pieces), 2, 2), dtype=complex)
    generators[:, 0, 1] = -1.0
    generators[:, 1, 0] = bath.strength
    generators[:, 1, 1] = -(bath.memory_rate + 2j * j)
    steps = matrix_exp(generators * (ends - starts)[:, None, None])

    n = grid.steps + 1
    c = np.full(n, np.nan + 0j)
    y = np.full(n, np.nan + 0j)
    c[0], y[0] = 1.0, 0.0
    state = np.array([1.0, 0.0], dtype=complex)
    pending = 0
    truncated_at = None
    diagnostics = []
    for p, (i, _, b) in enumerate(pieces):
        state = steps[p] @ state
        while pending < len(kick_times) and kick_times[pending] <= b:
            state[1] *= np.exp(-2j * kick_amps[pending])
            pending += 1
        c[i + 1], y[i + 1] = state
        if abs(state[0]) < policy.truncation_floor:
            truncated_at = i + 1
            c[i + 1] = y[i + 1] = np.nan
            message = '|c+| fell below {0:g} at t = {1:.6g}; ' \
                      'decay functions truncated'.format(
                          policy.truncation_floor, grid.times[i + 1])
            logger.warning(message)
            diagnostics.append(message)
            break
    logger.debug('solved c+ over {0} pieces and {1} impulses',
                 len(pieces), len(kick_times))
    return DecayFunctions(grid, c, y,
                          np.asarray(control.phase(grid.times), dtype=float),
                          truncated_at, tuple(diagnostics))


def volterra_c_tilde(bath, control, grid, kernel=None):
    """Direct trapezoid quadrature of the memory equation for ``c~``.

    Works for any stationary `kernel` (a function of the lag); the cost
    is quadratic in the number of steps.

    """
    kernel = bath.kernel if kernel is None else kernel
    times = grid.times
    dt = grid.dt
    phase = np.asarray(control.phase(times), dtype=float)
    head = complex(kernel(0.0))
    c = np.empty(len(times), dtype=complex)
    c[0] = 1.0
    force = 0j
    for i in range(grid.steps):
        row = kernel(times[i + 1] - times[:i + 1]) * np.exp(
            -2j * (phase[i + 1] - phase[:i + 1]))
        history = -dt * (0.5 * row[0] * c[0] + np.dot(row[1:], c[1:i + 1]))
        c[i + 1] = (c[i] + 0.5 * dt * (force + history)) / (
            1 + 0.25 * dt * dt * head)
        force = history - 0.5 * dt * head * c[i + 1]
    return c


@dataclass(eq=False)
class DensityTrajectory:
    """Lab-frame density operators with target-basis populations."""

    grid: object
    states: np.ndarray
    populations: Optional[np.ndarray] = None
    target: int = 1
    diagnostics: List[str] = field(default_factory=list)

    @property
    def fidelity_series(self):
        return np.sqrt(np.abs(self.populations[:, self.target]))

    @property
    def fidelity(self):
        return float(self.fidelity_series[-1])


def populations(model, grid, states):
    """``<E_n(t)| rho(t) |E_n(t)>`` for every level."""
    v = model.vectors(grid.times)
    return np.real(np.einsum('tan,tab,tbn->tn', v.conj(), states, v))


def _check_density(states, grid, policy, diagnostics):
    finite = np.all(np.isfinite(states), axis=(1, 2))
    drift = np.abs(np.trace(states[finite], axis1=1, axis2=2) - 1)
    if drift.size and float(drift.max()) > policy.trace_tol:
        worst = int(np.argmax(drift))
        raise TraceDriftError(float(drift[worst]),
                              float(grid.times[finite][worst]))
    lowest = np.linalg.eigvalsh(0.5 * (states[finite] + dagger(states[finite])))
    if lowest.size and float(lowest.min()) < -policy.population_tol:
        message = 'density operator loses positivity: eigenvalue {0:.3e}'.format(
            float(lowest.min()))
        logger.warning(message)
        diagnostics.append(message)


def exact_qubit_me(model, decay, grid, diabatic=False, rho0=None,
                   policy=DEFAULT_POLICY):
    """Exact master equation of the open qubit.

    In the instantaneous eigenbasis ``(E+, E-)`` the equation is
    diagonal, so populations and coherence follow in closed form::

        p_e = p_e(0) exp(-K)
        rho_ge = rho_ge(0) exp(2i Phi + 2i int S - K / 2)

    With `diabatic`, the frame connection is kept and the equation is
    integrated with RK4 instead, which makes it exact for any sweep.

    """
    v0 = model.vectors(0.0)
    if rho0 is None:
        sigma0 = np.diag([0.0, 1.0]).astype(complex)
    else:
        sigma0 = dagger(v0) @ np.asarray(rho0, dtype=complex) @ v0
    if diabatic:
        sigma = _diabatic_qubit(model, decay, grid, sigma0, policy)
    else:
        decay_factor = np.exp(-decay.kappa_integral)
        coherence = sigma0[0, 1] * np.exp(
            2j * decay.phase + 2j * decay.shift_integral
            - 0.5 * decay.kappa_integral)
        sigma = np.empty((grid.steps + 1, 2, 2), dtype=complex)
        sigma[:, 1, 1] = sigma0[1, 1] * decay_factor
        sigma[:, 0, 0] = 1 - sigma[:, 1, 1]
        sigma[:, 0, 1] = coherence
        sigma[:, 1, 0] = np.conj(coherence)
    v = model.vectors(grid.times)
    states = v @ sigma @ dagger(v)
    result = DensityTrajectory(grid, states, np.real(
        np.diagonal(sigma, axis1=1, axis2=2)), model.target,
        list(decay.diagnostics))
    _check_density(states, grid, policy, result.diagnostics)
    return result


def _diabatic_qubit(model, decay, grid, sigma0, policy):
    kappa, shift = decay.kappa_at(), decay.shift_at()
    lamb = commutator_super(SIGMA_Z)
    jump = lindblad_super(LOWERING)

    def generator(t, j):
        frame_h = j * np.diag(model.levels(t)) - 1j * model.connection(t)
        return (-1j * commutator_super(frame_h) - 1j * shift(t) * lamb
                + kappa(t) * jump)

    def kick(t, amplitude):
        return conjugation_super(np.diag(np.exp(-1j * amplitude
                                                * model.levels(t))))

    flat = propagate_linear(generator, vec(sigma0), grid, model.control, kick,
                            policy)
    return unvec(flat)


def open_qubit_dissipator(model, decay):
    """Lab-frame ``D(t) = -i S [sz(t), .] + kappa L[s-(t)]``."""
    kappa, shift = decay.kappa_at(), decay.shift_at()

    def dissipator(t):
        return (-1j * shift(t) * commutator_super(model.sigma_z(t))
                + kappa(t) * lindblad_super(model.lowering(t)))
    return dissipator


def open_qubit_liouvillian(model, decay):
    dissipator = open_qubit_dissipator(model, decay)

    def liouvillian(t, j):
        return -1j * commutator_super(model.hamiltonian(t, j)) + dissipator(t)
    return liouvillian


def open_qubit_kick(model):
    def kick(t, amplitude):
        return conjugation_super(model.kick(t, amplitude))
    return kick


def bruteforce_liouville(liouvillian, rho0, grid, control=None, kick=None,
                         policy=DEFAULT_POLICY):
    """RK4 on ``d vec(rho)/dt = L(t, J) vec(rho)`` in the lab basis.

    `liouvillian` takes ``(t, j)``; `j` is ``None`` without a control.

    """
    start = vec(np.asarray(rho0, dtype=complex))
    flat = propagate_linear(liouvillian, start, grid, control, kick, policy)
    norms = np.linalg.norm(flat, axis=1)
    growth = norms / max(float(norms[0]), np.finfo(float).tiny)
    if float(growth.max()) > policy.growth_limit:
        worst = int(np.argmax(growth))
        raise InstabilityError(float(growth[worst]), float(grid.times[worst]))
    states = unvec(flat)
    result = DensityTrajectory(grid, states)
    _check_density(states, grid, policy, result.diagnostics)
    return result
