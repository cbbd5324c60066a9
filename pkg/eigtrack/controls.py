"""

Controls
========

Control signals for the energy scale, ``J(t) = J0 + Omega(t)``.

Pulses live in windows ``(n chi - delta, n chi]`` for ``n >= 1`` and
vanish in the dark time between windows. The three variants are:

- ``RectTrain``: constant amplitude ``psi / delta`` in every window,
  so each pulse has area ``psi``;
- ``ChaoticTrain``: window ``n`` has amplitude ``psi L_n / delta``
  where ``L_{n+1} = mu (L_n - L_n^2)``;
- ``ImpulseNoise``: delta impulses with random times and positive
  random amplitudes inside each window.

Impulses are distributions: they never show up in `sample_J`, only in
phase integrals and as kicks in the propagators.

Use as::

    control = ControlSignal(1.0, RectTrain(psi=0.01, delta=0.005, chi=0.01))
    control.sample_J(0.007)         # 1 + 0.01/0.005
    control.phase_integral(0, 0.01)  # 0.01 + 0.01

"""

from dataclasses import dataclass, replace
from functools import lru_cache
import math

import numpy as np
from logbook import Logger

logger = Logger('controls')


def _check_windows(delta, chi):
    if not 0 < delta <= chi:
        raise ValueError('pulse duration must satisfy 0 < delta <= chi')


@dataclass(frozen=True)
class RectTrain:

    psi: float
    delta: float
    chi: float

    def __post_init__(self):
        _check_windows(self.delta, self.chi)
        if self.psi < 0:
            raise ValueError('pulse area must be non-negative')

    def amplitudes(self, count):
        """Amplitudes of windows ``0 .. count``; window 0 is empty."""
        out = np.full(count + 1, self.psi / self.delta)
        out[0] = 0.0
        return out


@lru_cache(maxsize=64)
def logistic_sequence(mu, l0, count):
    """``(L_0, ..., L_count)`` of the logistic map."""
    values = [l0]
    for _ in range(count):
        values.append(mu * (values[-1] - values[-1] ** 2))
    return tuple(values)


@dataclass(frozen=True)
class ChaoticTrain:

    psi: float
    delta: float
    chi: float
    mu: float = 3.9
    l0: float = 0.5

    def __post_init__(self):
        _check_windows(self.delta, self.chi)
        if self.psi < 0:
            raise ValueError('pulse area must be non-negative')
        if not 0 < self.l0 < 1:
            raise ValueError('logistic seed must lie in (0, 1)')
        if not 0 < self.mu <= 4:
            raise ValueError('logistic parameter must lie in (0, 4]')

    def amplitudes(self, count):
        out = self.psi / self.delta * np.array(
            logistic_sequence(self.mu, self.l0, count))
        out[0] = 0.0
        return out


@dataclass(frozen=True)
class ImpulseNoise:

    delta: float
    chi: float
    k_min: int = 6
    k_max: int = 16
    mean_amplitude: float = 1.0
    seed: int = 0
    realization: int = 0

    def __post_init__(self):
        _check_windows(self.delta, self.chi)
        if not 0 <= self.k_min <= self.k_max:
            raise ValueError('impulse counts must satisfy 0 <= k_min <= k_max')
        if self.mean_amplitude < 0:
            raise ValueError('mean impulse amplitude must be non-negative')
        if self.seed < 0 or self.realization < 0:
            raise ValueError('seed and realization must be non-negative')

    def amplitudes(self, count):
        return np.zeros(count + 1)

    def with_realization(self, realization):
        return replace(self, realization=realization)


@lru_cache(maxsize=4096)
def draw_impulses(noise, window, seed=None):
    """Impulses ``((t_j, Omega_j), ...)`` of window `window`, sorted by time.

    The stream is keyed by ``(seed, realization, window)``, so any
    window of any realization can be drawn independently. `seed`
    defaults to the signal's own seed.

    """
    seed = noise.seed if seed is None else seed
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence([seed, noise.realization, window])))
    count = int(rng.integers(noise.k_min, noise.k_max, endpoint=True))
    end = window * noise.chi
    times = end - noise.delta * rng.random(count)
    amplitudes = rng.exponential(noise.mean_amplitude, count)
    order = np.argsort(times)
    return tuple(zip(times[order].tolist(), amplitudes[order].tolist()))


@lru_cache(maxsize=64)
def _impulse_table(noise, windows):
    pairs = [pair for n in range(1, windows + 1)
             for pair in draw_impulses(noise, n)]
    times = np.array([t for t, _ in pairs])
    amplitudes = np.array([a for _, a in pairs])
    logger.debug('drew {0} impulses over {1} windows', len(pairs), windows)
    return times, amplitudes, np.concatenate([[0.0], np.cumsum(amplitudes)])


@dataclass(frozen=True)
class ControlSignal:
    """Baseline energy scale `j0` plus an optional pulse variant."""

    j0: float = 1.0
    variant: object = None

    def _windows(self, t_max):
        return max(int(math.ceil(t_max / self.variant.chi)), 0) + 1

    def _starts(self, n):
        return n * self.variant.chi - self.variant.delta

    def _impulse_data(self, t_max):
        if not isinstance(self.variant, ImpulseNoise):
            return np.empty(0), np.empty(0), np.zeros(1)
        return _impulse_table(self.variant, self._windows(t_max))

    def sample_J(self, t):
        """Smooth part of J at `t`; impulses are not included."""
        t = np.asarray(t, dtype=float)
        if self.variant is None:
            return self.j0 + 0.0 * t if t.ndim else float(self.j0)
        n = np.ceil(t / self.variant.chi).astype(int)
        amplitudes = self.variant.amplitudes(int(n.max()) + 1 if n.size else 1)
        active = (n >= 1) & (t > self._starts(n))
        out = self.j0 + np.where(active, amplitudes[np.maximum(n, 0)], 0.0)
        return out if out.ndim else float(out)

    def phase(self, t):
        """Cumulative phase ``int_0^t J``, impulses in ``(0, t]`` included."""
        return self.weighted_phase(t)

    def weighted_phase(self, t, antiderivative=None, weight=None):
        """``int_0^t J(x) w(x) dx`` for a weight with known antiderivative.

        Without a weight this is the plain phase. Impulses contribute
        ``Omega_j w(t_j)``.

        """
        t = np.asarray(t, dtype=float)
        if antiderivative is None:
            def antiderivative(x):
                return x

            def weight(x):
                return np.ones_like(x)
        base = antiderivative(t) - antiderivative(0.0 * t)
        out = self.j0 * base
        if self.variant is not None:
            t_max = float(np.max(t)) if t.size else 0.0
            count = self._windows(t_max)
            amplitudes = self.variant.amplitudes(count)
            n = np.arange(count + 1)
            starts = self._starts(n)
            ends = n * self.variant.chi
            pieces = amplitudes * (antiderivative(ends)
                                   - antiderivative(np.maximum(starts, 0.0)))
            pieces[0] = 0.0
            prefix = np.cumsum(pieces)
            full = np.clip(np.floor(t / self.variant.chi).astype(int),
                           0, count - 1)
            upcoming = full + 1
            partial = amplitudes[upcoming] * (
                antiderivative(np.maximum(t, starts[upcoming]))
                - antiderivative(starts[upcoming]))
            out = out + prefix[full] + partial
            times, kicks, _ = self._impulse_data(t_max)
            if len(times):
                cumulative = np.concatenate(
                    [[0.0], np.cumsum(kicks * weight(times))])
                out = out + cumulative[np.searchsorted(times, t, side='right')]
        return out if out.ndim else float(out)

    def phase_integral(self, t1, t2):
        """``int_{t1}^{t2} J``, impulses in ``(t1, t2]`` included."""
        if t2 < t1:
            raise ValueError('phase_integral needs t1 <= t2')
        return self.phase(t2) - self.phase(t1)

    def mean_J(self, t):
        """Average gap scale ``(1/t) int_0^t J``."""
        if t <= 0:
            return float(self.sample_J(0.0))
        return self.phase(t) / t

    def breakpoints(self, t1, t2):
        """Discontinuities of J strictly inside ``(t1, t2)``, sorted."""
        if self.variant is None:
            return np.empty(0)
        n = np.arange(1, self._windows(t2) + 1)
        edges = np.concatenate([self._starts(n), n * self.variant.chi])
        times, _, _ = self._impulse_data(t2)
        edges = np.unique(np.concatenate([edges, times]))
        return edges[(edges > t1) & (edges < t2)]

    def impulses(self, t1, t2):
        """Impulse times and amplitudes in ``(t1, t2]``."""
        times, kicks, _ = self._impulse_data(t2)
        keep = (times > t1) & (times <= t2)
        return times[keep], kicks[keep]

    def with_realization(self, realization):
        if not isinstance(self.variant, ImpulseNoise):
            return self
        return replace(self, variant=self.variant.with_realization(realization))
