"""Dunkl q-Szasz-Mirakjan-Kantorovich-Stancu operator and its moment formulas.

For ``f`` on ``[0, inf)`` the operator is

    K(f; x) = [n]_q sum_k p_k(x) int_{A_k}^{B_k} f((n t + alpha)/(n + beta)) d_q t

with Poisson-type weights

    p_k(x) = ([n]_q x)**k q**(k(k-1)/2) / (gamma_{mu,q}(k) E_{mu,q}([n]_q x))

and Jackson integration intervals

    A_k = [k + 2 mu theta_k]_q / (q**(k-2) [n]_q)
    B_k = ([k + 1 + 2 mu theta_k]_q - 1) / (q**(k-1) [n]_q) + 1/[n]_q.

Closed forms for the first moments and the printed second-moment bounds are
provided alongside, together with ``*_corrected`` variants (see
:func:`central2_upper_corrected`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import mpmath
import numpy as np
from scipy.special import logsumexp

from .dunkl import DunklParams, log_E_terms, log_gamma_table, shifted_index
from .errors import DomainError, NonConvergent
from .functions import ScalarFunction, as_scalar_function
from .qcalc import DEFAULT_TRUNCATION, TruncationPolicy, jackson_node_count, q_integer

__all__ = [
    "OperatorParams",
    "KernelTerm",
    "MomentReport",
    "interval_bounds",
    "interval_bounds_mp",
    "kernel_weights",
    "kernel_weight",
    "kernel_terms",
    "apply",
    "moment1_closed",
    "moment2_bounds",
    "moment2_bounds_corrected",
    "central1_closed",
    "shifted1_closed",
    "central2_upper",
    "central2_upper_corrected",
    "moment2_exact",
]


@dataclass(frozen=True)
class OperatorParams:
    """One operator instance: index ``n``, base ``q``, Dunkl ``mu``, Stancu ``alpha``/``beta``."""

    n: int
    q: float
    mu: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 < self.q < 1.0:
            raise DomainError(f"q must lie in (0, 1), got {self.q!r}")
        if not self.mu > -0.5:
            raise DomainError(f"mu must exceed -1/2, got {self.mu!r}")
        if not 0.0 <= self.alpha <= self.beta:
            raise DomainError(f"Stancu parameters need 0 <= alpha <= beta, got {self.alpha}, {self.beta}")

    @cached_property
    def nq(self) -> float:
        """The q-integer ``[n]_q``."""
        return q_integer(self.n, self.q)

    @property
    def dunkl(self) -> DunklParams:
        return DunklParams(self.mu, self.q)

    def stancu(self, t):
        """The argument map ``t -> (n t + alpha)/(n + beta)``."""
        return (self.n * t + self.alpha) / (self.n + self.beta)


@dataclass(frozen=True)
class KernelTerm:
    k: int
    weight: float
    lower: float
    upper: float


@dataclass(frozen=True)
class MomentReport:
    """Numeric value of a moment against a closed-form value or ``(lower, upper)`` pair."""

    label: str
    x: float
    numeric: float
    closed_low: float
    closed_high: float
    tolerance: float

    @property
    def is_equality(self) -> bool:
        return self.closed_low == self.closed_high

    @property
    def discrepancy(self) -> float:
        """Distance of ``numeric`` outside ``[closed_low, closed_high]`` (0 inside)."""
        return max(self.closed_low - self.numeric, self.numeric - self.closed_high, 0.0)

    @property
    def satisfied(self) -> bool:
        return self.discrepancy <= self.tolerance


def interval_bounds(k, p: OperatorParams):
    """Jackson integration limits ``(A_k, B_k)``; ``k`` may be an array.

    The negative powers ``q**(k-2)``, ``q**(k-1)`` at ``k = 0, 1`` are taken
    literally.
    """
    k = np.asarray(k)
    if np.any(k < 0):
        raise DomainError("interval index k must be nonnegative")
    m = shifted_index(k, p.mu)
    q = p.q
    lower = q_integer(m, q) * q ** (2.0 - k) / p.nq
    upper = (q_integer(m + 1, q) - 1.0) * q ** (1.0 - k) / p.nq + 1.0 / p.nq
    if np.ndim(lower) == 0:
        return float(lower), float(upper)
    return lower, upper


def interval_bounds_mp(k: int, p: OperatorParams, dps: int = 60):
    """:func:`interval_bounds` evaluated in ``dps``-digit arithmetic (mpmath)."""
    with mpmath.workdps(dps):
        q = mpmath.mpf(p.q)
        nq = (1 - q**p.n) / (1 - q)
        m = k + 2 * mpmath.mpf(p.mu) * (k % 2)
        lower = (1 - q**m) / (1 - q) / (q ** (k - 2) * nq)
        upper = ((1 - q ** (m + 1)) / (1 - q) - 1) / (q ** (k - 1) * nq) + 1 / nq
        return lower, upper, 1 / nq


def kernel_weights(x: float, p: OperatorParams, trunc: TruncationPolicy = DEFAULT_TRUNCATION):
    """Retained indices ``k`` and weights ``p_k(x)``.

    Weights are normalised in log space, so their sum is the retained share
    of ``E_{mu,q}([n]_q x)``; the E-series stopping rule makes it
    ``1 - O(tail_tol)``.
    """
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    log_terms = log_E_terms(p.nq * x, p.dunkl, trunc)
    weights = np.exp(log_terms - logsumexp(log_terms))
    return np.arange(len(weights)), weights


def _extend_weights(x, p, trunc, size):
    """Weights for ``k < size`` using the E-normaliser of the certified series."""
    log_terms = log_E_terms(p.nq * x, p.dunkl, trunc)
    log_norm = logsumexp(log_terms)
    if size <= len(log_terms) or x == 0:
        w = np.exp(log_terms - log_norm)
        w = np.pad(w, (0, max(0, size - len(w))))
        return w[:size]
    k = np.arange(size)
    extra = k * math.log(p.nq * x) + 0.5 * k * (k - 1) * math.log(p.q) - log_gamma_table(p.dunkl, size - 1)
    return np.exp(extra - log_norm)


def kernel_weight(k: int, x: float, p: OperatorParams, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    """Single weight ``p_k(x)``; zero for ``k`` beyond numerical relevance."""
    if k < 0:
        raise DomainError("k must be nonnegative")
    return float(_extend_weights(x, p, trunc, k + 1)[k])


def kernel_terms(x: float, p: OperatorParams, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> list[KernelTerm]:
    ks, w = kernel_weights(x, p, trunc)
    lo, hi = interval_bounds(ks, p)
    return [KernelTerm(int(k), float(a), float(b), float(c)) for k, a, b, c in zip(ks, w, lo, hi)]


def jackson_differences(g, lower, upper, q: float, trunc: TruncationPolicy) -> np.ndarray:
    """``int_{lower_i}^{upper_i} g d_q t`` for arrays of limits, with a fixed geometric node set.

    Nodes ``c q**j`` run to ``j = J`` with ``q**J <= tail_tol``; the two
    final increments of every zero-based sum are checked against the tail test.
    """
    J = jackson_node_count(q, trunc)
    powers = q ** np.arange(J, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    out = np.empty(lower.shape)
    for start in range(0, lower.size, 64):
        sl = slice(start, start + 64)
        a = lower[sl, None] * powers
        b = upper[sl, None] * powers
        ta = (1.0 - q) * a * np.asarray(g(a), dtype=float)
        tb = (1.0 - q) * b * np.asarray(g(b), dtype=float)
        for terms in (ta, tb):
            bound = trunc.tail_tol * np.maximum(1.0, np.abs(terms.sum(axis=1)))
            if np.any(np.abs(terms[:, -2:]).max(axis=1) > bound):
                raise NonConvergent("Jackson node set too short for the integrand")
        out[sl] = tb.sum(axis=1) - ta.sum(axis=1)
    return out


def apply(f, x, p: OperatorParams, trunc: TruncationPolicy = DEFAULT_TRUNCATION):
    """Evaluate ``K(f; x)``; ``x`` may be a scalar or a 1-d array.

    The k-series runs over the indices retained by the E-series tail test and
    is extended (doubling) until the last contribution is below ``tail_tol``
    times the sum of absolute contributions.
    """
    f = as_scalar_function(f)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([_apply_one(f, float(xi), p, trunc) for xi in xs])
    return float(out[0]) if np.ndim(x) == 0 else out


def _apply_one(f: ScalarFunction, x: float, p: OperatorParams, trunc: TruncationPolicy) -> float:
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")

    def g(t):
        vals = f(p.stancu(t))
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"{f.name} is not finite on the shifted integration nodes")
        return vals

    size = len(log_E_terms(p.nq * x, p.dunkl, trunc))
    while True:
        w = _extend_weights(x, p, trunc, size)
        live = w > 0
        ks = np.nonzero(live)[0]
        lo, hi = interval_bounds(ks, p)
        contrib = np.zeros(size)
        contrib[ks] = w[ks] * p.nq * jackson_differences(g, lo, hi, p.q, trunc)
        total = contrib.sum()
        scale = np.abs(contrib).sum()
        if x == 0 or abs(contrib[-1]) <= trunc.tail_tol * scale:
            return float(total)
        if size >= trunc.max_terms:
            raise NonConvergent(f"operator series at x={x} not converged within {trunc.max_terms} terms")
        size = min(2 * size, trunc.max_terms)


# --- closed forms -----------------------------------------------------------


def _consts(p: OperatorParams):
    q, n, b, nq = p.q, p.n, p.beta, p.nq
    return q, n, p.alpha, b, nq, q_integer(2, q), q_integer(3, q)


def moment1_closed(x, p: OperatorParams):
    """``K(t; x) = n/(n+beta) (alpha/n + 1/([2][n])) + 2 n q x / ([2](n+beta))``."""
    q, n, a, b, nq, q2, _ = _consts(p)
    return n / (n + b) * (a / n + 1.0 / (q2 * nq)) + 2.0 * n * q / (q2 * (n + b)) * np.asarray(x)


def central1_closed(x, p: OperatorParams):
    """``K(t - x; x)``."""
    return moment1_closed(x, p) - np.asarray(x)


def shifted1_closed(x, p: OperatorParams):
    """``K(t - 1; x)`` in the printed grouping."""
    q, n, a, b, nq, q2, _ = _consts(p)
    return n / (n + b) * (a / n + 1.0 / (q2 * nq) - (n + b) / n) + 2.0 * n * q / (q2 * (n + b)) * np.asarray(x)


def _x0_block(p: OperatorParams, corrected: bool):
    q, n, a, b, nq, q2, q3 = _consts(p)
    last = 1.0 / (q3 * nq**2) if corrected else 1.0 / (q3 * nq**2 * (n + b))
    return n**2 / (n + b) ** 2 * (a**2 / n**2 + 2.0 * a / (q2 * n * nq) + last)


def _moment2_coefficients(p: OperatorParams, corrected: bool):
    """``(c0, lower c1, lower c2, upper c1, upper c2)`` of the second-moment bounds."""
    q, n, a, b, nq, q2, q3 = _consts(p)
    mu = p.mu
    pref = n**2 / (n + b) ** 2
    c0 = _x0_block(p, corrected)
    q12mu = q_integer(1.0 + 2.0 * mu, q)
    lo1 = q * pref * (3.0 * q ** (2.0 * mu + 1.0) * q12mu / (q3 * nq) + 3.0 / (q3 * nq) + 4.0 * a / (q2 * n))
    lo2 = 3.0 * q * pref / q3
    hi1 = pref * (3.0 * q12mu / (q3 * nq) + 3.0 * q / (q3 * nq) + 4.0 * q * a / (q2 * n))
    hi2 = 3.0 * pref / q3
    return c0, lo1, lo2, hi1, hi2


def moment2_bounds(x, p: OperatorParams):
    """Printed ``(lower, upper)`` sandwich for ``K(t**2; x)``, taken verbatim.

    The shared constant block carries a factor ``1/([3][n]**2 (n+beta))``; at
    ``x = 0`` the exact value is ``n**2/(n+beta)**2 (... + 1/([3][n]**2))``,
    so the printed upper bound fails near the origin for ``n > 1``.
    """
    x = np.asarray(x, dtype=float)
    c0, lo1, lo2, hi1, hi2 = _moment2_coefficients(p, corrected=False)
    return c0 + lo1 * x + lo2 * x**2, c0 + hi1 * x + hi2 * x**2


def moment2_bounds_corrected(x, p: OperatorParams):
    """:func:`moment2_bounds` with the constant block ``1/([3][n]**2)``."""
    x = np.asarray(x, dtype=float)
    c0, lo1, lo2, hi1, hi2 = _moment2_coefficients(p, corrected=True)
    return c0 + lo1 * x + lo2 * x**2, c0 + hi1 * x + hi2 * x**2


def central2_upper(x, p: OperatorParams):
    """Printed upper bound ``lambda_n(x)`` for ``K((t-x)**2; x)``, taken verbatim."""
    q, n, a, b, nq, q2, q3 = _consts(p)
    x = np.asarray(x, dtype=float)
    c0, _, _, hi1, hi2 = _moment2_coefficients(p, corrected=False)
    c1 = hi1 - 2.0 * n / (n + b) * (a / n + 1.0 / (q2 * nq))
    c2 = hi2 - 2.0 * n * q / (q2 * (n + b)) + 1.0
    return c0 + c1 * x + c2 * x**2


def central2_upper_corrected(x, p: OperatorParams):
    """``upper(K(t**2)) - 2 x K(t) + x**2`` with the corrected constant block.

    Differs from :func:`central2_upper` in two coefficients: the constant
    block (``1/([3][n]**2)``) and the ``x**2`` coefficient, where expanding
    ``-2x K(t; x)`` gives ``-4nq/([2](n+beta))``.  This is the form that
    tends to 0 as ``n -> inf`` with ``q_n -> 1``.
    """
    x = np.asarray(x, dtype=float)
    _, hi = moment2_bounds_corrected(x, p)
    return hi - 2.0 * x * moment1_closed(x, p) + x**2


def moment2_exact(x, p: OperatorParams, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    """``K(t**2; x)`` through the even/odd weight masses instead of quadrature.

    Using ``gamma(k) = [k + 2 mu theta_k]_q gamma(k-1)`` and
    ``int_A^B t**2 d_q t = (B**3 - A**3)/[3]_q`` the series collapses to

        K0(t**2) = 3q x**2/[3] + 3x (q + q**2 (1 + [2mu]_q (q P_even - P_odd)))/([3][n]) + 1/([3][n]**2)

    for ``alpha = beta = 0``, where ``P_even``/``P_odd`` are the total
    kernel weights on even/odd ``k``.  The Stancu map is then expanded.
    """
    if x == 0:
        p_even, p_odd = 1.0, 0.0
    else:
        ks, w = kernel_weights(x, p, trunc)
        p_even = float(w[ks % 2 == 0].sum())
        p_odd = float(w[ks % 2 == 1].sum())
    q, n, a, b, nq, q2, q3 = _consts(p)
    q2mu = q_integer(2.0 * p.mu, q)
    k0_sq = (
        3.0 * q * x**2 / q3
        + 3.0 * x * (q + q**2 * (1.0 + q2mu * (q * p_even - p_odd))) / (q3 * nq)
        + 1.0 / (q3 * nq**2)
    )
    k0_lin = 1.0 / (q2 * nq) + 2.0 * q * x / q2
    return (n**2 * k0_sq + 2.0 * n * a * k0_lin + a**2) / (n + b) ** 2
