"""Tensor-product (bivariate) extension of the univariate operator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import operator as uni
from .bounds import RESOLUTION, lambda_n, modulus_delta
from .errors import DomainError, GridTooCoarse, SpecUnverified
from .functions import BiFunction, GridSpec
from .operator import OperatorParams
from .qcalc import DEFAULT_TRUNCATION, TruncationPolicy, jackson_node_count

__all__ = [
    "BivariateParams",
    "apply2",
    "bi_moment_closed",
    "bi_moment2_upper",
    "bi_central2_upper",
    "bi_modulus",
    "bi_bound_modulus",
    "bi_bound_lipschitz",
    "bi_lipschitz_holds",
]


@dataclass(frozen=True)
class BivariateParams:
    px: OperatorParams
    py: OperatorParams

    def swapped(self) -> "BivariateParams":
        return BivariateParams(self.py, self.px)

    def axis(self, axis: str) -> OperatorParams:
        if axis == "x":
            return self.px
        if axis == "y":
            return self.py
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def _signed_nodes(ks, p: OperatorParams, trunc: TruncationPolicy):
    """Jackson nodes and signed weights of ``int_{A_k}^{B_k}`` for each ``k``; shape (K, 2J)."""
    J = jackson_node_count(p.q, trunc)
    powers = p.q ** np.arange(J, dtype=float)
    lo, hi = uni.interval_bounds(np.asarray(ks), p)
    lo = np.atleast_1d(lo)
    hi = np.atleast_1d(hi)
    nodes = np.concatenate([hi[:, None] * powers, lo[:, None] * powers], axis=1)
    weights = (1.0 - p.q) * np.concatenate([hi[:, None] * powers, -lo[:, None] * powers], axis=1)
    return nodes, weights


def _live_weights(x, p, trunc):
    ks, w = uni.kernel_weights(x, p, trunc)
    live = w > 0
    return ks[live], w[live]


def _apply2_double(f: BiFunction, x: float, y: float, bp: BivariateParams, trunc: TruncationPolicy) -> float:
    px, py = bp.px, bp.py
    k1, w1 = _live_weights(x, px, trunc)
    k2, w2 = _live_weights(y, py, trunc)
    u_nodes, u_w = _signed_nodes(k1, px, trunc)
    v_nodes, v_w = _signed_nodes(k2, py, trunc)
    v_flat = py.stancu(v_nodes.reshape(-1))
    # inner sums for every k2 at once, one k1 stripe at a time
    total = 0.0
    for i in range(len(k1)):
        u = px.stancu(u_nodes[i])
        values = f(u[:, None], v_flat[None, :])
        if not np.all(np.isfinite(values)):
            raise DomainError(f"{f.name} is not finite on the shifted integration nodes")
        inner = (u_w[i] @ values).reshape(v_nodes.shape)
        rect = (inner * v_w).sum(axis=1)
        total += w1[i] * px.nq * float(np.dot(w2 * py.nq, rect))
    return total


def apply2(
    f: BiFunction,
    x,
    y,
    bp: BivariateParams,
    trunc: TruncationPolicy = DEFAULT_TRUNCATION,
    method: str = "auto",
):
    """Evaluate the bivariate operator at ``(x, y)``; arrays broadcast together.

    ``method="separable"`` multiplies two univariate evaluations (requires
    ``f.factors``), ``"double"`` runs the double series with the double
    Jackson sum over each rectangle, and ``"auto"`` picks separable when
    factors are known.
    """
    if method == "auto":
        method = "separable" if f.factors is not None else "double"
    xs, ys = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if np.any(xs < 0) or np.any(ys < 0):
        raise DomainError("bivariate operator needs x, y >= 0")
    if method == "separable":
        if f.factors is None:
            raise ValueError(f"{f.name} has no known factorisation")
        g, h = f.factors
        out = uni.apply(g, xs.reshape(-1), bp.px, trunc) * uni.apply(h, ys.reshape(-1), bp.py, trunc)
    elif method == "double":
        out = np.array([_apply2_double(f, a, b, bp, trunc) for a, b in zip(xs.reshape(-1), ys.reshape(-1))])
    else:
        raise ValueError(f"unknown method {method!r}")
    out = np.asarray(out).reshape(xs.shape)
    return float(out) if out.ndim == 0 else out


def bi_moment_closed(i: int, j: int, x, y, bp: BivariateParams, central: bool = False):
    """Closed forms for ``e_{0,0}``, ``e_{1,0}``, ``e_{0,1}``; ``central`` subtracts ``x`` (or ``y``)."""
    if (i, j) == (0, 0):
        if central:
            raise ValueError("no central form for e_{0,0}")
        return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape) + 0.0
    if (i, j) == (1, 0):
        return (uni.central1_closed if central else uni.moment1_closed)(x, bp.px)
    if (i, j) == (0, 1):
        return (uni.central1_closed if central else uni.moment1_closed)(y, bp.py)
    raise ValueError(f"no closed form for e_{{{i},{j}}}")


def bi_moment2_upper(axis: str, x, y, bp: BivariateParams):
    """Printed upper bounds for ``e_{2,0}`` (axis ``"x"``) or ``e_{0,2}`` (axis ``"y"``)."""
    arg = x if axis == "x" else y
    return uni.moment2_bounds(arg, bp.axis(axis))[1]


def bi_central2_upper(axis: str, x, y, bp: BivariateParams, form: str = "printed"):
    """``lambda_{n1}(x)`` or ``lambda_{n2}(y)``."""
    arg = x if axis == "x" else y
    return lambda_n(arg, bp.axis(axis), form)


def bi_modulus(f: BiFunction, d1: float, d2: float, grid_x: GridSpec, grid_y: GridSpec) -> float:
    """Grid estimate of ``sup |f(u,v) - f(x,y)|`` over ``|u-x| <= d1``, ``|v-y| <= d2``."""
    steps = []
    for d, g in ((d1, grid_x), (d2, grid_y)):
        if not d > 0:
            raise ValueError("moduli windows must be positive")
        if g.spacing > d / RESOLUTION * (1 + 1e-9):
            raise GridTooCoarse(f"grid spacing {g.spacing:.3g} exceeds window/{RESOLUTION}")
        steps.append(min(int(math.floor(d / g.spacing + 1e-9)), g.points - 1))
    s1, s2 = steps
    F = f(grid_x.nodes()[:, None], grid_y.nodes()[None, :])
    n1, n2 = F.shape
    best = 0.0
    for a in range(0, s1 + 1):
        for b in range(-s2, s2 + 1):
            if a == 0 and b <= 0:
                continue
            base = F[: n1 - a, max(0, -b) : n2 - max(0, b)]
            moved = F[a:, max(0, b) : n2 - max(0, -b)]
            best = max(best, float(np.max(np.abs(moved - base))))
    return best


def bi_bound_modulus(f: BiFunction, x, y, bp: BivariateParams, grid_x: GridSpec, grid_y: GridSpec, form: str = "printed"):
    """``omega(f; 1/sqrt([n1]), 1/sqrt([n2])) * lambda_{n1}(x) * lambda_{n2}(y)``, as printed.

    This product shape has no additive constants, so it is audited in report mode only.
    """
    omega = bi_modulus(f, modulus_delta(bp.px), modulus_delta(bp.py), grid_x, grid_y)
    return omega * bi_central2_upper("x", x, y, bp, form) * bi_central2_upper("y", x, y, bp, form)


def bi_lipschitz_holds(f: BiFunction, M: float, nu1: float, nu2: float, grid_x: GridSpec, grid_y: GridSpec, atol: float = 1e-12) -> bool:
    """Check ``|f(u,v) - f(x,y)| <= M |u-x|**nu1 |v-y|**nu2`` on all grid pairs."""
    u = grid_x.nodes()
    v = grid_y.nodes()
    F = f(u[:, None], v[None, :]).reshape(-1)
    U, V = np.meshgrid(u, v, indexing="ij")
    U = U.reshape(-1)
    V = V.reshape(-1)
    lhs = np.abs(F[:, None] - F[None, :])
    rhs = M * np.abs(U[:, None] - U[None, :]) ** nu1 * np.abs(V[:, None] - V[None, :]) ** nu2
    return bool(np.all(lhs <= rhs + atol))


def bi_bound_lipschitz(
    f: BiFunction,
    M: float,
    nu1: float,
    nu2: float,
    x,
    y,
    bp: BivariateParams,
    grid: tuple[GridSpec, GridSpec] | None = None,
    form: str = "printed",
):
    """``M lambda_{n1}(x)**(nu1/2) lambda_{n2}(y)**(nu2/2)``.

    When ``grid`` is given the class condition is checked first and
    :class:`SpecUnverified` raised if it fails.
    """
    if not (M > 0 and 0 < nu1 <= 1 and 0 < nu2 <= 1):
        raise ValueError("need M > 0 and exponents in (0, 1]")
    if grid is not None and not bi_lipschitz_holds(f, M, nu1, nu2, *grid):
        raise SpecUnverified(f"{f.name} is not in Lip_{M}({nu1}, {nu2}) on the grid")
    lx = np.asarray(bi_central2_upper("x", x, y, bp, form))
    ly = np.asarray(bi_central2_upper("y", x, y, bp, form))
    return M * lx ** (nu1 / 2.0) * ly ** (nu2 / 2.0)
