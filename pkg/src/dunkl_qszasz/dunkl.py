"""Dunkl generalized factorials and the two q-Dunkl exponentials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError, GammaOverflow, NonConvergent
from .qcalc import DEFAULT_TRUNCATION, TruncationPolicy, q_integer

__all__ = [
    "DunklParams",
    "theta",
    "log_gamma_table",
    "gamma_table",
    "gamma_mu_q",
    "gamma_mu_classical",
    "e_mu_q",
    "E_mu_q",
    "log_E_terms",
]

_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class DunklParams:
    mu: float
    q: float

    def __post_init__(self):
        if not self.mu > -0.5:
            raise DomainError(f"Dunkl parameter mu must exceed -1/2, got {self.mu!r}")
        if not 0.0 < self.q < 1.0:
            raise DomainError(f"q must lie in (0, 1), got {self.q!r}")


def theta(n):
    """Parity indicator: 0 for even ``n``, 1 for odd ``n``."""
    if np.ndim(n) == 0:
        if n < 0:
            raise DomainError(f"theta needs n >= 0, got {n}")
        return int(n) % 2
    return np.asarray(n, dtype=np.int64) % 2


def shifted_index(k, mu: float):
    """``k + 2*mu*theta_k``, the argument of every Dunkl q-integer."""
    k = np.asarray(k)
    return k + 2.0 * mu * (k % 2)


@lru_cache(maxsize=256)
def _log_gamma_cached(mu: float, q: float, size: int) -> np.ndarray:
    k = np.arange(1, size)
    factors = q_integer(shifted_index(k, mu), q)
    out = np.concatenate(([0.0], np.cumsum(np.log(factors))))
    out.setflags(write=False)
    return out


def log_gamma_table(p: DunklParams, kmax: int) -> np.ndarray:
    """``log gamma_{mu,q}(k)`` for ``k = 0..kmax`` (read-only, memoized).

    Built from ``gamma(0) = 1`` and
    ``gamma(k+1) = (1 - q**(2 mu theta_{k+1} + k + 1)) / (1 - q) * gamma(k)``.
    Table sizes are rounded up to powers of two so the cache only grows.
    """
    size = 1 << max(4, int(kmax).bit_length())
    return _log_gamma_cached(float(p.mu), float(p.q), size)[: kmax + 1]


def gamma_table(p: DunklParams, kmax: int) -> np.ndarray:
    return np.exp(log_gamma_table(p, kmax))


def gamma_mu_q(k: int, p: DunklParams) -> float:
    if k < 0:
        raise DomainError(f"gamma_mu_q needs k >= 0, got {k}")
    log_value = float(log_gamma_table(p, k)[k])
    if log_value > _LOG_FLOAT_MAX:
        raise GammaOverflow(f"gamma_{{mu,q}}({k}) exceeds the float range")
    return math.exp(log_value)


def gamma_mu_classical(k: int, mu: float) -> float:
    """Classical Dunkl factorial ``gamma_mu(k)`` from its Gamma-function form."""
    if k < 0:
        raise DomainError(f"gamma_mu_classical needs k >= 0, got {k}")
    if not mu > -0.5:
        raise DomainError(f"mu must exceed -1/2, got {mu!r}")
    half, odd = divmod(k, 2)
    log_value = (
        k * math.log(2.0)
        + gammaln(half + 1)
        + gammaln(half + mu + 0.5 + odd)
        - gammaln(mu + 0.5)
    )
    if log_value > _LOG_FLOAT_MAX:
        raise GammaOverflow(f"gamma_mu({k}) exceeds the float range")
    return math.exp(log_value)


def _series_log_terms(x: float, p: DunklParams, trunc: TruncationPolicy, damped: bool):
    """Log-terms of the e (``damped=False``) or E (``damped=True``) series.

    Terms are generated until the remaining tail is certified below
    ``tail_tol`` times the partial sum.  Past index ``k`` every term ratio is
    at most ``x q**k / [k + 1 + 2 min(mu, 0)]_q`` (``q**k`` dropped for the
    undamped series), so the tail is dominated by a geometric series.
    """
    q, mu = p.q, p.mu
    log_x = math.log(x)
    log_q = math.log(q)
    size = 64
    while True:
        size = min(size, trunc.max_terms)
        k = np.arange(size)
        log_terms = k * log_x - log_gamma_table(p, size - 1)
        if damped:
            log_terms = log_terms + 0.5 * k * (k - 1) * log_q
        log_partial = np.logaddexp.accumulate(log_terms)
        denom = q_integer(k + 1 + 2.0 * min(mu, 0.0), q)
        ratio = x / denom
        if damped:
            ratio = ratio * np.exp(k * log_q)
        with np.errstate(divide="ignore"):
            log_tail = log_terms + np.log(ratio) - np.log1p(-np.minimum(ratio, 1.0))
        ok = (ratio < 1.0) & (log_tail <= math.log(trunc.tail_tol) + log_partial)
        if ok.any():
            stop = int(np.argmax(ok))
            return log_terms[: stop + 1]
        if size >= trunc.max_terms:
            raise NonConvergent(
                f"Dunkl exponential at x={x} not converged within {trunc.max_terms} terms"
            )
        size *= 2


def log_E_terms(z: float, p: DunklParams, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> np.ndarray:
    """``log(q**(k(k-1)/2) z**k / gamma_{mu,q}(k))`` for the retained ``k``."""
    if z < 0:
        raise DomainError(f"argument must be nonnegative, got {z}")
    if z == 0:
        return np.zeros(1)
    return _series_log_terms(float(z), p, trunc, damped=True)


def e_mu_q(x: float, p: DunklParams, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    """``sum_k x**k / gamma_{mu,q}(k)``, convergent for ``x < 1/(1-q)``."""
    if x < 0:
        raise DomainError(f"e_mu_q needs x >= 0, got {x}")
    if x * (1.0 - p.q) >= 1.0:
        raise DomainError(f"e_mu_q diverges for x >= 1/(1-q) = {1.0 / (1.0 - p.q)}")
    if x == 0:
        return 1.0
    return float(np.exp(logsumexp(_series_log_terms(float(x), p, trunc, damped=False))))


def E_mu_q(x: float, p: DunklParams, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    """``sum_k q**(k(k-1)/2) x**k / gamma_{mu,q}(k)``; entire in ``x``."""
    return float(np.exp(logsumexp(log_E_terms(x, p, trunc))))
