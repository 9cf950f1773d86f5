"""Exception types raised by the numerical layers."""


class ApproximationError(Exception):
    """Base class for all errors raised by this package."""


class NonConvergent(ApproximationError):
    """A truncated series or Jackson sum hit its term cap before its tail test."""


class DomainError(ApproximationError, ValueError):
    """An argument lies outside the region where a quantity is defined."""


class GammaOverflow(ApproximationError, OverflowError):
    """A generalized factorial exceeds the representable floating point range."""


class GridTooCoarse(ApproximationError, ValueError):
    """The evaluation grid cannot resolve the requested modulus window."""


class SpecUnverified(ApproximationError):
    """A claimed Lipschitz/Hoelder condition fails on the working grid."""


class MissingDerivative(ApproximationError, ValueError):
    """An analytic derivative needed for a smooth-function bound was not supplied."""
