"""Limit constants 1/zeta(2k) and prod_p (1 - 2 p^-2k) with certified error.

Both are truncated Euler products prod_{p <= P} (1 - c p^-s), s = 2k, c in
{1, 2}. Every dropped factor lies in (0, 1), so the truncation overshoots and

    0 <= value_P - true <= 1 - prod_{p>P} (1 - c p^-s) <= c * sum_{p>P} p^-s.

The prime tail is bounded by partial summation against the Rosser-Schoenfeld
estimate pi(x) < 1.25506 x / log x (x > 1):

    sum_{p>P} p^-s <= 1.25506 * s / ((s - 1) log P) * P^(1-s).

A rounding allowance for the long-double log accumulation is added on top.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import ToleranceUnreachableError
from .primes import iter_prime_segments

DEFAULT_TOL = 1e-9
# Tolerance used when a constant is only a comparison target.
TARGET_TOL = 1e-8
DEFAULT_MAX_CUTOFF = 1_000_000_000
ROSSER_SCHOENFELD = 1.25506
_EPS_LD = float(np.finfo(np.longdouble).eps)


class ConstantKind(str, Enum):
    INV_ZETA_2K = "inv_zeta_2k"
    TWIN_PRODUCT = "twin_product"

    @property
    def coefficient(self):
        return 1 if self is ConstantKind.INV_ZETA_2K else 2


@dataclass(frozen=True)
class ConstantResult:
    kind: ConstantKind
    k: int
    value: float
    tail_bound: float
    prime_cutoff: int

    def to_dict(self):
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


def prime_tail_bound(s, cutoff):
    """Upper bound on sum_{p > cutoff} p^-s for s > 1, cutoff >= 2."""
    return ROSSER_SCHOENFELD * s / ((s - 1) * math.log(cutoff)) * cutoff ** (1 - s)


def _rounding_allowance(cutoff):
    # ~cutoff/log(cutoff) log1p terms, each with a few ulps of error, plus the
    # final exp and the rounding to float64.
    n_terms = 1.3 * cutoff / math.log(cutoff) + 10
    return 8 * n_terms * _EPS_LD + 2.0**-52


def _cutoff_for(kind, k, tol, max_cutoff):
    """Smallest power-of-two-ish cutoff whose certified bound is <= tol."""
    s = 2 * k
    c = kind.coefficient

    def total(P):
        return c * prime_tail_bound(s, P) + _rounding_allowance(P)

    lo, hi = 2, 2
    while total(hi) > tol:
        if hi >= max_cutoff:
            raise ToleranceUnreachableError(
                f"{kind.value}(k={k}) needs a prime cutoff above {max_cutoff} for tol={tol}"
            )
        lo, hi = hi, min(hi * 2, max_cutoff)
    while hi - lo > max(1, lo // 1000):
        mid = (lo + hi) // 2
        if total(mid) <= tol:
            hi = mid
        else:
            lo = mid
    return hi


def euler_partial_product(kind, k, cutoff):
    """prod_{p <= cutoff} (1 - c p^-2k) accumulated in long-double log space."""
    kind = ConstantKind(kind)
    s = 2 * k
    c = kind.coefficient
    log_total = np.longdouble(0)
    for primes in iter_prime_segments(cutoff):
        p = primes.astype(np.longdouble)
        log_total += np.sum(np.log1p(-c * p ** (-s)))
    return float(np.exp(log_total))


@lru_cache(maxsize=64)
def _evaluate(kind, k, tol, max_cutoff):
    if k < 1:
        raise ValueError("k must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    P = _cutoff_for(kind, k, tol, max_cutoff)
    value = euler_partial_product(kind, k, P)
    bound = kind.coefficient * prime_tail_bound(2 * k, P) + _rounding_allowance(P)
    return ConstantResult(kind=kind, k=k, value=value, tail_bound=bound, prime_cutoff=P)


def inv_zeta_2k(k, tol=DEFAULT_TOL, max_cutoff=DEFAULT_MAX_CUTOFF):
    """1/zeta(2k) as a truncated Euler product with |error| <= tail_bound <= tol."""
    return _evaluate(ConstantKind.INV_ZETA_2K, k, float(tol), max_cutoff)


def twin_product(k, tol=DEFAULT_TOL, max_cutoff=DEFAULT_MAX_CUTOFF):
    """prod_p (1 - 2/p^(2k)) with |error| <= tail_bound <= tol."""
    return _evaluate(ConstantKind.TWIN_PRODUCT, k, float(tol), max_cutoff)


def limit_constant(kind, k, tol=DEFAULT_TOL):
    kind = ConstantKind(kind)
    f = inv_zeta_2k if kind is ConstantKind.INV_ZETA_2K else twin_product
    return f(k, tol)


def dirichlet_partial_sum(tables, N, twin=False):
    """sum_{n<=N} g_k(n)/n^2, or with the extra tau*(n) weight when ``twin``.

    Independent route to the same constants via the Dirichlet series.
    """
    n = np.arange(1, N + 1, dtype=np.float64)
    terms = tables.gk[1 : N + 1] / (n * n)
    if twin:
        terms = terms * tables.tau_star[1 : N + 1]
    return math.fsum(terms)
