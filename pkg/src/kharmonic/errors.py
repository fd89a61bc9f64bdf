"""Exception types shared across the package."""


class KHarmonicError(Exception):
    """Base class for all errors raised by this package."""


class ConstraintViolationError(KHarmonicError):
    """A point does not satisfy the embedding constraint of its target."""


class PreconditionError(KHarmonicError):
    """An operation's precondition is not met (e.g. non-unit-speed input)."""


class UnsupportedOrderError(KHarmonicError):
    """Requested derivative order or energy index outside the supported range."""


class IncommensurateFrequenciesError(KHarmonicError):
    """A two-frequency curve has no common period (irrational frequency ratio)."""


class DomainError(KHarmonicError):
    """Operation not available on this domain (e.g. energy on an interval)."""


class EmptyWindowError(KHarmonicError):
    """Interval-domain validity window shrank to nothing."""


class FlowDivergedError(KHarmonicError):
    """Gradient flow produced a non-finite energy.  Carries the trace so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SpectrumTooLargeError(KHarmonicError):
    """Hessian dimension exceeds the configured dense-solver cap."""
