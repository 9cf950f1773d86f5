"""Moduli of continuity, weighted norms and the quantitative error bounds.

All moduli are grid-restricted, i.e. lower estimates of the true suprema;
audits add :func:`grid_slack` to compensate.  Each rate bound takes a
``form`` argument choosing which closed form stands in for
``lambda_n(x)``: ``"printed"`` (verbatim, :func:`central2_upper`) or
``"corrected"`` (:func:`central2_upper_corrected`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarse, MissingDerivative, SpecUnverified
from .functions import GridSpec, ScalarFunction, as_scalar_function
from .operator import OperatorParams, central1_closed, central2_upper, central2_upper_corrected

__all__ = [
    "ModulusEstimate",
    "LipschitzSpec",
    "LAMBDA_FORMS",
    "lambda_n",
    "modulus",
    "estimate_modulus",
    "modulus2",
    "grid_slack",
    "weighted_norm",
    "cb2_norm",
    "modulus_delta",
    "bound_modulus",
    "bound_lipschitz",
    "bound_cb2",
    "bound_peetre_arg",
    "peetre_surrogate",
]

RESOLUTION = 8
_EPS = 1e-9

LAMBDA_FORMS = {"printed": central2_upper, "corrected": central2_upper_corrected}


def lambda_n(x, p: OperatorParams, form: str = "printed"):
    try:
        return LAMBDA_FORMS[form](x, p)
    except KeyError:
        raise ValueError(f"unknown lambda form {form!r}; choose from {sorted(LAMBDA_FORMS)}") from None


@dataclass(frozen=True)
class ModulusEstimate:
    delta: float
    value: float
    grid: GridSpec


@dataclass(frozen=True)
class LipschitzSpec:
    M: float
    nu: float

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError(f"Lipschitz constant must be positive, got {self.M!r}")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"Hoelder exponent must lie in (0, 1], got {self.nu!r}")

    def holds(self, f, grid: GridSpec, atol: float = 1e-12) -> bool:
        """``|f(a) - f(b)| <= M |a - b|**nu`` on all pairs of grid nodes."""
        f = as_scalar_function(f)
        x = grid.nodes()
        y = f(x)
        dy = np.abs(y[:, None] - y[None, :])
        dx = np.abs(x[:, None] - x[None, :])
        return bool(np.all(dy <= self.M * dx**self.nu + atol))


def _max_offset(window: float, grid: GridSpec) -> int:
    if grid.spacing > window / RESOLUTION * (1 + _EPS):
        raise GridTooCoarse(
            f"grid spacing {grid.spacing:.3g} exceeds window/{RESOLUTION} = {window / RESOLUTION:.3g}"
        )
    return int(math.floor(window / grid.spacing + _EPS))


def modulus(f, delta: float, grid: GridSpec) -> float:
    """``max |f(y) - f(x)|`` over grid pairs with ``|y - x| <= delta``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    f = as_scalar_function(f)
    steps = min(_max_offset(delta, grid), grid.points - 1)
    v = f(grid.nodes())
    best = 0.0
    for s in range(1, steps + 1):
        best = max(best, float(np.max(np.abs(v[s:] - v[:-s]))))
    return best


def estimate_modulus(f, delta: float, grid: GridSpec) -> ModulusEstimate:
    return ModulusEstimate(delta, modulus(f, delta, grid), grid)


def modulus2(f, delta_sqrt: float, grid: GridSpec) -> float:
    """Second-order modulus: ``sup |f(x+2h) - 2 f(x+h) + f(x)|`` over ``0 < h <= delta_sqrt``.

    ``x`` runs over the grid nodes and ``h`` over multiples of the spacing;
    ``f`` is evaluated on the same lattice extended to ``x_max + 2*delta_sqrt``.
    """
    if not delta_sqrt > 0:
        raise ValueError("delta_sqrt must be positive")
    f = as_scalar_function(f)
    steps = _max_offset(delta_sqrt, grid)
    h = grid.spacing
    ext = h * np.arange(grid.points + 2 * steps)
    v = f(ext)
    m = grid.points
    best = 0.0
    for s in range(1, steps + 1):
        second = v[2 * s : 2 * s + m] - 2.0 * v[s : s + m] + v[:m]
        best = max(best, float(np.max(np.abs(second))))
    return best


def grid_slack(f, grid: GridSpec) -> float:
    """``modulus(f, 2 * spacing)``: largest change of ``f`` across at most two grid spacings."""
    v = as_scalar_function(f)(grid.nodes())
    return max(float(np.max(np.abs(v[s:] - v[:-s]))) for s in range(1, min(2, len(v) - 1) + 1))


def weighted_norm(f, grid: GridSpec) -> float:
    """Truncated-domain ``sup |f(x)|/(1 + x**2)`` over the grid nodes."""
    x = grid.nodes()
    values = f(x) if callable(f) else np.asarray(f, dtype=float)
    return float(np.max(np.abs(values) / (1.0 + x**2)))


def cb2_norm(g: ScalarFunction, grid: GridSpec) -> float:
    """``||g|| + ||g'|| + ||g''||`` with grid sup norms; derivatives must be analytic."""
    if g.d1 is None or g.d2 is None:
        raise MissingDerivative(f"{g.name} lacks an analytic first or second derivative")
    x = grid.nodes()
    parts = [g(x), np.asarray(g.d1(x), dtype=float), np.asarray(g.d2(x), dtype=float)]
    return float(sum(np.max(np.abs(np.broadcast_to(v, x.shape))) for v in parts))


def modulus_delta(p: OperatorParams) -> float:
    """The modulus window ``1/sqrt([n]_q)``."""
    return 1.0 / math.sqrt(p.nq)


def bound_modulus(f, x, p: OperatorParams, grid: GridSpec, form: str = "printed"):
    """``(1 + sqrt(lambda_n(x))) * omega(f; 1/sqrt([n]_q))``."""
    omega = modulus(f, modulus_delta(p), grid)
    return (1.0 + np.sqrt(lambda_n(x, p, form))) * omega


def bound_lipschitz(f, spec: LipschitzSpec, x, p: OperatorParams, grid: GridSpec | None = None, form: str = "printed"):
    """``M * lambda_n(x)**(nu/2)``; the class membership is checked on ``grid`` first."""
    if grid is not None and not spec.holds(f, grid):
        raise SpecUnverified(f"{as_scalar_function(f).name} is not Lip_{spec.M}({spec.nu}) on the grid")
    return spec.M * np.asarray(lambda_n(x, p, form)) ** (spec.nu / 2.0)


def bound_cb2(g: ScalarFunction, x, p: OperatorParams, grid: GridSpec, form: str = "printed"):
    """``{K(t - x; x) + lambda_n(x)/2} * ||g||_{C_B^2}``.

    The first-moment term is signed, as printed; it can be negative.
    """
    return (central1_closed(x, p) + 0.5 * lambda_n(x, p, form)) * cb2_norm(g, grid)


def bound_peetre_arg(x, p: OperatorParams, form: str = "printed"):
    """``lambda_n(x)/4 + K(t - x; x)/2``, the argument of the K-functional bound."""
    return 0.25 * lambda_n(x, p, form) + 0.5 * central1_closed(x, p)


def peetre_surrogate(f, x: float, p: OperatorParams, grid: GridSpec, form: str = "printed") -> float:
    """``omega_2(f, sqrt(delta)) + min(1, delta) ||f||`` at ``delta = bound_peetre_arg(x)``.

    The absolute constants in front are unknown, so this is reported only.
    Returns ``nan`` when the argument is not positive.
    """
    delta = float(bound_peetre_arg(x, p, form))
    if not delta > 0:
        return float("nan")
    f = as_scalar_function(f)
    root = math.sqrt(delta)
    fine = GridSpec.with_spacing(grid.x_max, min(grid.spacing, root / RESOLUTION))
    sup = float(np.max(np.abs(f(fine.nodes()))))
    return modulus2(f, root, fine) + min(1.0, delta) * sup
