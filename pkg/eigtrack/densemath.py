"""

Dense linear algebra
====================

Small dense complex matrices on uniform time grids: Hermitian
eigendecomposition, matrix exponentials, time-ordered products, the
superoperator helpers for column-stacked density operators, and the
fixed-step integrators shared by the solvers.

Arrays of samples always carry time on the first axis, so a Hamiltonian
sampled on a grid of `M` steps has shape ``(M + 1, N, N)``.

Exports
-------

- ``NumericPolicy``, ``DEFAULT_POLICY``: tolerances used everywhere
- ``TimeGrid``: uniform grid on ``[t_start, t_end]``
- ``herm_eigendecompose``, ``matrix_exp``, ``time_ordered_product``
- ``propagate_linear``, ``rk4_sampled``: linear ODE integrators

"""

from dataclasses import dataclass, replace
import math

import numpy as np
import scipy.linalg
from scipy.integrate import cumulative_trapezoid
from logbook import Logger

from .errors import NonFiniteError, NonHermitianError

logger = Logger('densemath')


@dataclass(frozen=True)
class NumericPolicy:

    hermitian_tol: float = 1e-12
    residual_tol: float = 1e-10
    degeneracy_gap: float = 1e-10
    unitarity_tol: float = 1e-10
    trace_tol: float = 1e-6
    population_tol: float = 1e-9
    truncation_floor: float = 1e-12
    growth_limit: float = 10.0
    picard_iterations: int = 50
    picard_tol: float = 1e-12
    sigma_limit: float = 1.0
    derivative_tol: float = 1e-6

    def with_changes(self, **changes):
        return replace(self, **changes)


DEFAULT_POLICY = NumericPolicy()


@dataclass(frozen=True)
class TimeGrid:

    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 2:
            raise ValueError('a time grid needs at least 2 steps')
        object.__setattr__(self, 'steps', int(self.steps))
        if not self.t_end > self.t_start:
            raise ValueError('t_end must be larger than t_start')

    @classmethod
    def span(cls, t_end, steps):
        return cls(0.0, float(t_end), int(steps))

    @property
    def dt(self):
        return (self.t_end - self.t_start) / self.steps

    @property
    def times(self):
        return np.linspace(self.t_start, self.t_end, self.steps + 1)

    @property
    def midpoints(self):
        t = self.times
        return 0.5 * (t[:-1] + t[1:])

    def refined(self, factor):
        return TimeGrid(self.t_start, self.t_end, self.steps * int(factor))

    def index(self, t):
        """Index of the grid node at time `t`."""
        position = (np.asarray(t, dtype=float) - self.t_start) / self.dt
        nearest = np.rint(position).astype(int)
        if np.any(np.abs(position - nearest) > 1e-6) or np.any(
                (nearest < 0) | (nearest > self.steps)):
            raise ValueError('time {0} is not on the grid'.format(t))
        return nearest if nearest.ndim else int(nearest)


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def check_finite(a, what='matrix'):
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise NonFiniteError('{0} has non-finite entries'.format(what))
    return a


def hermitian_asymmetry(a):
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - dagger(a))))


def herm_eigendecompose(a, policy=DEFAULT_POLICY):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns).

    Accepts a single matrix or a stack of them on the leading axes.

    """
    a = check_finite(np.asarray(a, dtype=complex))
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    asymmetry = hermitian_asymmetry(a)
    if asymmetry > policy.hermitian_tol * scale:
        raise NonHermitianError(asymmetry)
    values, vectors = np.linalg.eigh(0.5 * (a + dagger(a)))
    return values, vectors


def matrix_exp(a):
    """e^A for a matrix or a stack of matrices."""
    a = check_finite(np.asarray(a, dtype=complex))
    return scipy.linalg.expm(a)


def ordered_product(steps, cumulative=False):
    """Product of step matrices with later factors on the left.

    With `cumulative`, returns every partial product, starting from the
    identity.

    """
    steps = np.asarray(steps)
    n = steps.shape[-1]
    out = np.empty((len(steps) + 1, n, n), dtype=complex)
    out[0] = np.eye(n)
    for i, step in enumerate(steps):
        out[i + 1] = step @ out[i]
    return out if cumulative else out[-1]


def time_ordered_product(generator, grid, cumulative=False):
    """Forward time-ordered exponential of `generator` over `grid`.

    Uses midpoint-rule step exponentials, so the error is second order
    in the step.

    """
    samples = np.stack([np.asarray(generator(t), dtype=complex)
                        for t in grid.midpoints])
    return ordered_product(matrix_exp(samples * grid.dt), cumulative)


class Sampled(object):
    """Piecewise-linear interpolation of samples on a uniform grid."""

    def __init__(self, grid, values):
        self.grid = grid
        self.values = np.asarray(values)
        if len(self.values) != grid.steps + 1:
            raise ValueError('need one sample per grid node')

    def __call__(self, t):
        x = (t - self.grid.t_start) / self.grid.dt
        i = min(max(int(math.floor(x)), 0), self.grid.steps - 1)
        w = x - i
        return (1 - w) * self.values[i] + w * self.values[i + 1]


def midpoint_values(values):
    """Interval midpoints of node samples by four-point interpolation.

    Falls back to the linear average on grids with fewer than three
    steps.

    """
    v = np.asarray(values)
    steps = len(v) - 1
    if steps < 3:
        return 0.5 * (v[:-1] + v[1:])
    mid = np.empty((steps,) + v.shape[1:], dtype=np.result_type(v, float))
    mid[1:-1] = (-v[:-3] + 9 * v[1:-2] + 9 * v[2:-1] - v[3:]) / 16
    mid[0] = (5 * v[0] + 15 * v[1] - 5 * v[2] + v[3]) / 16
    mid[-1] = (v[-4] - 5 * v[-3] + 15 * v[-2] + 5 * v[-1]) / 16
    return mid


def cumtrapz(values, dt):
    """Running trapezoid integral along the first axis, starting at 0."""
    values = np.asarray(values)
    if values.size == 0:
        return np.zeros_like(values, dtype=complex)
    return cumulative_trapezoid(values, dx=dt, axis=0, initial=0)


def _apply(a, y):
    return a * y if np.ndim(a) == 0 else a @ y


def rk4_sampled(nodes, mids, y0, dt):
    """Classical RK4 for y' = A(t) y with A known on nodes and midpoints.

    `nodes` has one generator per grid node, `mids` one per interval.
    Scalars and matrices are both accepted.

    """
    nodes = np.asarray(nodes)
    mids = np.asarray(mids)
    y = np.empty((len(nodes),) + np.shape(y0), dtype=complex)
    y[0] = y0
    for i in range(len(nodes) - 1):
        a0, am, a1 = nodes[i], mids[i], nodes[i + 1]
        k1 = _apply(a0, y[i])
        k2 = _apply(am, y[i] + 0.5 * dt * k1)
        k3 = _apply(am, y[i] + 0.5 * dt * k2)
        k4 = _apply(a1, y[i] + dt * k3)
        y[i + 1] = y[i] + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def _rk4_step(generator, y, a, b, j):
    h = b - a
    k1 = generator(a, j) @ y
    k2 = generator(a + 0.5 * h, j) @ (y + 0.5 * h * k1)
    k3 = generator(a + 0.5 * h, j) @ (y + 0.5 * h * k2)
    k4 = generator(b, j) @ (y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def control_pieces(grid, control=None):
    """Split every grid interval at the control's breakpoints.

    Returns ``(interval, a, b)`` triples in time order, plus the impulse
    times and amplitudes of the control on the grid.

    """
    times = grid.times
    if control is None:
        breaks = kick_times = kick_amps = np.empty(0)
    else:
        breaks = np.asarray(control.breakpoints(times[0], times[-1]))
        kick_times, kick_amps = control.impulses(times[0], times[-1])
    pieces = []
    for i in range(grid.steps):
        t0, t1 = times[i], times[i + 1]
        lo, hi = np.searchsorted(breaks, [t0, t1], side='right')
        edges = [t0] + [b for b in breaks[lo:hi] if t0 < b < t1] + [t1]
        pieces.extend((i, a, b) for a, b in zip(edges[:-1], edges[1:]))
    return pieces, np.asarray(kick_times), np.asarray(kick_amps)


def propagate_linear(generator, y0, grid, control=None, kick=None,
                     policy=DEFAULT_POLICY):
    """RK4 for y' = G(t, J) y on `grid`, aware of control discontinuities.

    Each grid interval is split at the control's breakpoints, and `J`
    is held at the control value of every piece. After a piece ending
    at an impulse `(t_j, amplitude)`, the state is multiplied by
    ``kick(t_j, amplitude)``. Without a control, `J` is ``None``.

    Returns the state at every grid node.

    """
    pieces, kick_times, kick_amps = control_pieces(grid, control)
    if len(kick_times) and kick is None:
        raise ValueError('control has impulses but no kick was given')
    y = np.empty((grid.steps + 1,) + np.shape(y0), dtype=complex)
    y[0] = y0
    state = np.asarray(y0, dtype=complex)
    pending = 0
    for i, a, b in pieces:
        j = None if control is None else control.sample_J(0.5 * (a + b))
        state = _rk4_step(generator, state, a, b, j)
        while pending < len(kick_times) and kick_times[pending] <= b:
            state = kick(kick_times[pending], kick_amps[pending]) @ state
            pending += 1
        y[i + 1] = state
    return check_finite(y, 'propagated state')


def vec(rho):
    """Column-stacking vectorization of (stacks of) square matrices."""
    rho = np.asarray(rho)
    n = rho.shape[-1]
    return np.swapaxes(rho, -1, -2).reshape(rho.shape[:-2] + (n * n,))


def unvec(v):
    v = np.asarray(v)
    n = math.isqrt(v.shape[-1])
    return np.swapaxes(v.reshape(v.shape[:-1] + (n, n)), -1, -2)


def commutator_super(h):
    """Superoperator of X -> [H, X]."""
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[-1])
    return np.kron(eye, h) - np.kron(h.T, eye)


def lindblad_super(op):
    """Superoperator of X -> L X L^H - {L^H L, X}/2."""
    op = np.asarray(op, dtype=complex)
    eye = np.eye(op.shape[-1])
    number = op.conj().T @ op
    return (np.kron(op.conj(), op)
            - 0.5 * np.kron(eye, number)
            - 0.5 * np.kron(number.T, eye))


def conjugation_super(u):
    """Superoperator of X -> U X U^H."""
    u = np.asarray(u, dtype=complex)
    return np.kron(u.conj(), u)


def trace_distance(a, b):
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(
        np.asarray(a) - np.asarray(b)))))
