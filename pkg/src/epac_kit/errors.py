"""Exception hierarchy shared by all modules."""


class EpacError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigError(EpacError, ValueError):
    """Invalid parameters or run configuration."""


class DomainError(EpacError, ValueError):
    """Argument outside the domain of a function (e.g. tau outside [0, beta*hbar])."""


class BoundaryLeakError(EpacError):
    """A retained eigenstate does not decay at the grid boundary; the grid is too small."""


class ConvergenceError(EpacError):
    """An eigensolve or iterative procedure failed."""


class TruncationError(EpacError):
    """The retained spectrum is too short for the requested temperature."""


class MonotonicityError(EpacError):
    """Q(J) is not strictly increasing along the source grid."""


class ConvexityError(EpacError):
    """An effective potential curve failed the convexity check."""


class FitError(EpacError):
    """Minimum at the window boundary or an ill-conditioned expansion fit."""


class SamplingError(EpacError):
    """Monte Carlo acceptance out of range after step tuning."""
