"""q-calculus primitives and Jackson q-integration.

All functions accept ``q`` in ``(0, 1]``; ``q == 1`` selects the classical
branch wherever one is defined.  q-integers are evaluated through
``expm1``/``log`` so that they stay accurate as ``q`` approaches 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NonConvergent

__all__ = [
    "TruncationPolicy",
    "DEFAULT_TRUNCATION",
    "check_q",
    "q_integer",
    "q_factorial",
    "q_binomial",
    "q_pochhammer_plus",
    "gauss_binomial_expansion",
    "jackson_node_count",
    "jackson_integral",
    "jackson_integral_zero",
]


@dataclass(frozen=True)
class TruncationPolicy:
    """Stopping rule shared by every infinite series and Jackson sum.

    ``tail_tol`` is a relative threshold on the (bounded) remaining tail and
    ``max_terms`` a hard cap on the number of terms of any single sum.
    """

    tail_tol: float = 1e-14
    max_terms: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.tail_tol < 1.0:
            raise ValueError(f"tail_tol must lie in (0, 1), got {self.tail_tol!r}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 8:
            raise ValueError(f"max_terms must be an integer >= 8, got {self.max_terms!r}")

    def tightened(self, factor: float = 100.0) -> "TruncationPolicy":
        """Policy with ``tail_tol`` divided by ``factor``; the cap grows to match."""
        extra = math.ceil(math.log(factor, 2))
        return TruncationPolicy(self.tail_tol / factor, self.max_terms * (1 + extra))


DEFAULT_TRUNCATION = TruncationPolicy()


def check_q(q: float, allow_one: bool = True) -> float:
    q = float(q)
    upper_ok = q <= 1.0 if allow_one else q < 1.0
    if not (q > 0.0 and upper_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise DomainError(f"q must lie in {bound}, got {q!r}")
    return q


def q_integer(n, q: float):
    """The q-integer ``(1 - q**n) / (1 - q)``, or ``n`` itself when ``q == 1``.

    ``n`` may be a real number or an array; real arguments are needed for the
    Dunkl-shifted indices ``k + 2*mu*theta_k``.
    """
    q = check_q(q)
    n_arr = np.asarray(n, dtype=float)
    if q == 1.0:
        out = n_arr.copy()
    else:
        out = -np.expm1(n_arr * math.log(q)) / (1.0 - q)
    return float(out) if out.ndim == 0 else out


def q_factorial(n: int, q: float) -> float:
    """``[n]_q [n-1]_q ... [1]_q`` with the empty product ``[0]_q! = 1``."""
    if n < 0:
        raise DomainError(f"q_factorial needs n >= 0, got {n}")
    if n == 0:
        return 1.0
    return float(np.prod(q_integer(np.arange(1, n + 1), q)))


def q_binomial(n: int, k: int, q: float) -> float:
    """Gaussian binomial coefficient ``[n]_q! / ([k]_q! [n-k]_q!)``."""
    if n < 0 or k < 0:
        raise DomainError("q_binomial needs nonnegative arguments")
    if k > n:
        raise DomainError(f"q_binomial needs k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    if k == 0:
        return 1.0
    # ratio form avoids forming the large factorials
    top = q_integer(np.arange(n - k + 1, n + 1), q)
    bottom = q_integer(np.arange(1, k + 1), q)
    return float(np.prod(top / bottom))


def q_pochhammer_plus(x: float, n: int, q: float) -> float:
    """q-analogue of ``(1 + x)**n``: ``prod_{j<n} (1 + q**j * x)``."""
    if n < 0:
        raise DomainError(f"q_pochhammer_plus needs n >= 0, got {n}")
    q = check_q(q)
    if n == 0:
        return 1.0
    return float(np.prod(1.0 + q ** np.arange(n) * x))


def gauss_binomial_expansion(x: float, a: float, n: int, q: float) -> float:
    """Right-hand side of the Gauss binomial formula for ``(x + a)_q^n``.

    ``sum_k [n choose k]_q q**(k(k-1)/2) a**k x**(n-k)``; with ``x = 1`` it
    must reproduce :func:`q_pochhammer_plus` at ``a``.
    """
    return float(
        sum(
            q_binomial(n, k, q) * q ** (k * (k - 1) / 2) * a**k * x ** (n - k)
            for k in range(n + 1)
        )
    )


def jackson_node_count(q: float, trunc: TruncationPolicy) -> int:
    """Number of geometric nodes ``c*q**j`` after which ``q**j <= tail_tol``."""
    q = check_q(q, allow_one=False)
    count = math.ceil(math.log(trunc.tail_tol) / math.log(q)) + 2
    if count > trunc.max_terms:
        raise NonConvergent(
            f"Jackson sum at q={q} needs {count} nodes, above max_terms={trunc.max_terms}"
        )
    return count


_CHUNK = 256


def jackson_integral_zero(f: Callable, c: float, q: float, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    """``int_0^c f d_q t = (1-q) c sum_j q**j f(c q**j)``, truncated adaptively.

    Summation stops once two consecutive increments satisfy
    ``|increment| <= tail_tol * max(1, |accumulated|)``.
    """
    q = check_q(q, allow_one=False)
    if c == 0.0:
        return 0.0
    total = 0.0
    start = 0
    while start < trunc.max_terms:
        stop = min(start + _CHUNK, trunc.max_terms)
        scale = c * q ** np.arange(start, stop, dtype=float)
        terms = (1.0 - q) * scale * np.asarray(f(scale), dtype=float)
        partial = total + np.cumsum(terms)
        small = np.abs(terms) <= trunc.tail_tol * np.maximum(1.0, np.abs(partial))
        both = small[1:] & small[:-1]
        if both.any():
            idx = int(np.argmax(both)) + 1
            return float(partial[idx])
        total = float(partial[-1])
        start = stop
    raise NonConvergent(f"Jackson sum did not meet its tail test within {trunc.max_terms} terms")


def jackson_integral(
    f: Callable,
    a: float,
    b: float,
    q: float,
    trunc: TruncationPolicy = DEFAULT_TRUNCATION,
) -> float:
    """Jackson q-integral over ``[a, b]`` as ``int_0^b - int_0^a``.

    ``f`` must accept numpy arrays.  Negative integrands are allowed.
    """
    if q == 1.0:
        raise NonConvergent("the Jackson integral is only defined here for q < 1")
    if a < 0 or b < a:
        raise DomainError(f"need 0 <= a <= b, got a={a}, b={b}")
    return jackson_integral_zero(f, b, q, trunc) - jackson_integral_zero(f, a, q, trunc)
