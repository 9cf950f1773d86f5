"""Dunkl-generalized q-Szasz-Mirakjan-Kantorovich-Stancu operators."""

from .errors import (
    ApproximationError,
    DomainError,
    GammaOverflow,
    GridTooCoarse,
    MissingDerivative,
    NonConvergent,
    SpecUnverified,
)
from .qcalc import TruncationPolicy
from .functions import BiFunction, GridSpec, ScalarFunction
from .operator import OperatorParams

__version__ = "0.1.0"
