"""Exception types shared across the library."""


class MegError(Exception):
    """Base class for all library errors."""


class ValidationError(MegError, ValueError):
    """Invalid input data, parameters or configuration."""


class UndefinedIntensityError(MegError):
    """Intensity queried on an edge before its activation time."""


class NumericError(MegError):
    """Non-finite value encountered during evaluation."""


class UnsupportedSpecError(MegError):
    """Operation does not support the requested model structure."""


class FittingError(MegError):
    """Every optimisation attempt failed."""


class IngestError(MegError, ValueError):
    """Malformed input file."""


class SimulationTruncated(MegError):
    """Event cap reached before the horizon.

    The events generated so far are available as ``log``.
    """

    def __init__(self, message, log):
        super().__init__(message)
        self.log = log
