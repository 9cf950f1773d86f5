"""Test functions, evaluation grids and the default function registry."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ScalarFunction",
    "BiFunction",
    "GridSpec",
    "as_scalar_function",
    "monomial",
    "REGISTRY",
    "get_function",
    "verify_flags",
]


@dataclass(frozen=True)
class ScalarFunction:
    """A numpy-vectorized real function on ``[0, inf)`` plus what is known about it.

    ``lipschitz`` holds ``(M, nu)`` for a function in ``Lip_M(nu)``.
    ``d1``/``d2`` are analytic first and second derivatives when available.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    d1: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    nondecreasing: bool = False
    uniformly_continuous: bool = False
    bounded: bool = False
    lipschitz: Optional[tuple[float, float]] = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.fn(x), dtype=float), x.shape).copy()

    @property
    def smooth_bounded(self) -> bool:
        return self.bounded and self.d1 is not None and self.d2 is not None


def as_scalar_function(f) -> ScalarFunction:
    if isinstance(f, ScalarFunction):
        return f
    if not callable(f):
        raise TypeError(f"expected a callable or ScalarFunction, got {type(f).__name__}")
    return ScalarFunction(getattr(f, "__name__", "anonymous"), f)


def monomial(m: int) -> ScalarFunction:
    """``t**m`` (``m = 0`` gives the constant 1)."""
    if m == 0:
        return constant(1.0)
    if m == 1:
        return REGISTRY["t"]
    return ScalarFunction(f"t^{m}", lambda t: t**m, nondecreasing=True)


def constant(c: float) -> ScalarFunction:
    zero = lambda t: np.zeros_like(t)
    return ScalarFunction(
        f"const({c:g})",
        lambda t: np.full_like(t, c),
        d1=zero,
        d2=zero,
        nondecreasing=True,
        uniformly_continuous=True,
        bounded=True,
        lipschitz=(1.0, 1.0),
    )


@dataclass(frozen=True)
class BiFunction:
    """Function on the quadrant; ``factors`` is ``(g, h)`` when ``f(u, v) = g(u) h(v)``."""

    name: str
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    factors: Optional[tuple[ScalarFunction, ScalarFunction]] = None
    lipschitz: Optional[tuple[float, float, float]] = None

    def __call__(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast_shapes(u.shape, v.shape)
        return np.broadcast_to(np.asarray(self.fn(u, v), dtype=float), shape).copy()

    @classmethod
    def separable(cls, g: ScalarFunction, h: ScalarFunction, lipschitz=None) -> "BiFunction":
        return cls(f"{g.name}*{h.name}", lambda u, v: g(u) * h(v), (g, h), lipschitz)

    def transposed(self) -> "BiFunction":
        factors = None if self.factors is None else (self.factors[1], self.factors[0])
        lip = None if self.lipschitz is None else (self.lipschitz[0], self.lipschitz[2], self.lipschitz[1])
        return BiFunction(f"{self.name}^T", lambda u, v: self.fn(v, u), factors, lip)


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of ``points`` nodes on ``[0, x_max]``."""

    x_max: float
    points: int

    def __post_init__(self):
        if not self.x_max > 0:
            raise ValueError(f"x_max must be positive, got {self.x_max!r}")
        if self.points < 2:
            raise ValueError(f"a grid needs at least 2 points, got {self.points}")

    @property
    def spacing(self) -> float:
        return self.x_max / (self.points - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.x_max, self.points)

    @classmethod
    def with_spacing(cls, x_max: float, spacing: float) -> "GridSpec":
        """Smallest uniform grid on ``[0, x_max]`` whose spacing is ``<= spacing``."""
        points = int(np.ceil(x_max / spacing - 1e-9)) + 1
        return cls(x_max, max(points, 2))


def _sqrt_d1(t):
    with np.errstate(divide="ignore"):
        return 0.5 / np.sqrt(t)


REGISTRY: dict[str, ScalarFunction] = {
    "t": ScalarFunction(
        "t",
        lambda t: t,
        d1=np.ones_like,
        d2=np.zeros_like,
        nondecreasing=True,
        uniformly_continuous=True,
        lipschitz=(1.0, 1.0),
    ),
    "t2": ScalarFunction("t2", lambda t: t * t, d1=lambda t: 2 * t, d2=lambda t: np.full_like(t, 2.0), nondecreasing=True),
    "sqrt": ScalarFunction(
        "sqrt",
        np.sqrt,
        d1=_sqrt_d1,
        nondecreasing=True,
        uniformly_continuous=True,
        lipschitz=(1.0, 0.5),
    ),
    "t_over_1pt": ScalarFunction(
        "t_over_1pt",
        lambda t: t / (1.0 + t),
        d1=lambda t: 1.0 / (1.0 + t) ** 2,
        d2=lambda t: -2.0 / (1.0 + t) ** 3,
        nondecreasing=True,
        uniformly_continuous=True,
        bounded=True,
        lipschitz=(1.0, 1.0),
    ),
    "one_minus_exp": ScalarFunction(
        "one_minus_exp",
        lambda t: -np.expm1(-t),
        d1=lambda t: np.exp(-t),
        d2=lambda t: -np.exp(-t),
        nondecreasing=True,
        uniformly_continuous=True,
        bounded=True,
        lipschitz=(1.0, 1.0),
    ),
    "one": constant(1.0),
    "half": constant(0.5),
}


def get_function(name: str) -> ScalarFunction:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown registry function {name!r}; known: {sorted(REGISTRY)}") from None


def verify_flags(f: ScalarFunction, grid: GridSpec, atol: float = 1e-12) -> dict[str, bool]:
    """Check the registry flags of ``f`` on ``grid`` nodes.

    Returns a mapping flag -> holds; flags that are not claimed map to True.
    """
    x = grid.nodes()
    y = f(x)
    checks = {"nondecreasing": True, "lipschitz": True}
    if f.nondecreasing:
        checks["nondecreasing"] = bool(np.all(np.diff(y) >= -atol))
    if f.lipschitz is not None:
        M, nu = f.lipschitz
        dy = np.abs(y[:, None] - y[None, :])
        dx = np.abs(x[:, None] - x[None, :])
        checks["lipschitz"] = bool(np.all(dy <= M * dx**nu + atol))
    return checks
