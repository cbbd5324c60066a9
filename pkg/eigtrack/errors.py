"""

Errors
======

Every error raised on purpose by eigtrack derives from `EigtrackError`.
Numerical failures are also `ValueError`s, so callers that only care
about bad input can keep catching the builtin.

"""


class EigtrackError(Exception):
    pass


class NumericError(EigtrackError, ValueError):
    pass


class NonHermitianError(NumericError):

    def __init__(self, asymmetry):
        super().__init__(
            'matrix is not Hermitian: max |A - A^H| = {0:.3e}'.format(asymmetry))
        self.asymmetry = asymmetry


class NonFiniteError(NumericError):
    pass


class GridResolutionError(NumericError):
    """The grid is too coarse for finite-difference derivatives."""

    def __init__(self, error, steps, suggested_steps):
        super().__init__(
            'derivative self-consistency error {0:.3e} on {1} steps; '
            'try steps >= {2}'.format(error, steps, suggested_steps))
        self.error = error
        self.steps = steps
        self.suggested_steps = suggested_steps


class DegenerateTargetError(NumericError):

    def __init__(self, level, time):
        super().__init__(
            'target level {0} is degenerate at t = {1:.6g}'.format(level, time))
        self.level = level
        self.time = time


class InvalidTargetError(NumericError):
    pass


class NonFiniteKernelError(NumericError):

    def __init__(self, t, t_prime):
        super().__init__(
            "non-finite kernel value at (t, t') = ({0:.6g}, {1:.6g})".format(
                t, t_prime))
        self.t = t
        self.t_prime = t_prime


class TraceDriftError(NumericError):

    def __init__(self, drift, time):
        super().__init__(
            'trace drifted by {0:.3e} at t = {1:.6g}; refine the grid'.format(
                drift, time))
        self.drift = drift
        self.time = time


class InstabilityError(NumericError):

    def __init__(self, growth, time):
        super().__init__(
            'state norm grew by {0:.3g}x at t = {1:.6g}'.format(growth, time))
        self.growth = growth
        self.time = time


class ConfigError(EigtrackError, ValueError):

    def __init__(self, path, reason):
        super().__init__('{0}: {1}'.format(path or '<root>', reason))
        self.path = path
        self.reason = reason


class OutputError(EigtrackError):

    def __init__(self, path, reason):
        super().__init__('cannot write {0}: {1}'.format(path, reason))
        self.path = path


class DispatchError(EigtrackError):
    """An actor of a `gather` batch failed outside its task."""

    def __init__(self, actor):
        super().__init__('dispatch actor {0} failed'.format(actor))
        self.actor = actor
