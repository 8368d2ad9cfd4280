"""Binomial kernel C_alpha(n, s) and constrained sums over it.

All constrained sums are computed by direct iteration over s with gcd and
k-free lookups, never through the Mobius-inversion route used to estimate
them; the predicted main terms live in separate ``*_main_term`` functions so
the two can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.stats import binom as _binom

from .arith import factorize, tau_l
from .errors import CapacityError, OutOfRangeError, PreconditionError

RATIONAL_MAX_N = 64


@dataclass(frozen=True)
class BinomKernel:
    alpha: float
    n: int
    log_weights: np.ndarray
    weights: np.ndarray
    mode: str = "float"
    rational_weights: Optional[tuple] = None

    @property
    def exact(self):
        return self.mode == "rational"

    def _sum(self, mask):
        """Sum of weights where mask holds: Fraction in rational mode, else fsum."""
        if self.exact:
            return sum((w for w, keep in zip(self.rational_weights, mask) if keep), Fraction(0))
        return math.fsum(self.weights[mask])


def _parse_alpha(alpha, rational):
    if rational:
        if isinstance(alpha, float):
            raise ValueError("rational mode needs alpha as a Fraction, int ratio or 'p/q' string")
        alpha = Fraction(alpha)
    elif isinstance(alpha, str):
        alpha = Fraction(alpha)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def build_kernel(alpha, n, mode="float"):
    """Kernel for fixed (alpha, n).

    Float weights come from scipy's binomial pmf (relative error ~1e-15);
    log-weights fall back to logpmf only where the pmf underflows.
    """
    if mode not in ("float", "rational"):
        raise ValueError(f"unknown mode {mode!r}")
    if n < 0:
        raise ValueError("n must be >= 0")
    rational = mode == "rational"
    a = _parse_alpha(alpha, rational)
    s = np.arange(n + 1)
    weights = _binom.pmf(s, n, float(a))
    positive = weights > 0
    log_weights = np.log(np.where(positive, weights, 1.0))
    if not positive.all():
        log_weights[~positive] = _binom.logpmf(s[~positive], n, float(a))
    exact = None
    if rational:
        if n > RATIONAL_MAX_N:
            raise CapacityError(f"rational kernel capped at n={RATIONAL_MAX_N}, got {n}")
        exact = tuple(math.comb(n, j) * a**j * (1 - a) ** (n - j) for j in range(n + 1))
        weights = np.array([float(w) for w in exact])
    weights.setflags(write=False)
    log_weights.setflags(write=False)
    return BinomKernel(float(a), n, log_weights, weights, mode, exact)


def max_weight(kernel):
    """max_s C_alpha(n, s); the local CLT says this is O(1/sqrt(n))."""
    if kernel.exact:
        return max(kernel.rational_weights)
    return float(np.max(kernel.weights))


def _residue_mask(n, d, r):
    return np.arange(n + 1) % d == r


def residue_class_sum(kernel, d, r):
    """sum of C_alpha(n, l) over l = r (mod d)."""
    if not 1 <= d <= max(kernel.n, 1):
        raise OutOfRangeError(f"need 1 <= d <= n, got d={d}, n={kernel.n}")
    if not 0 <= r < d:
        raise OutOfRangeError(f"residue r={r} not in [0, {d})")
    return kernel._sum(_residue_mask(kernel.n, d, r))


def residue_class_sums(kernel, d):
    """All d residue-class sums at once (float mode), index r."""
    if not 1 <= d <= max(kernel.n, 1):
        raise OutOfRangeError(f"need 1 <= d <= n, got d={d}, n={kernel.n}")
    w = kernel.weights
    return np.array([math.fsum(w[r::d]) for r in range(d)])


def kfree_gcd_mask(n, a, b, tables):
    """mask[m] = gcd(m + a, b) is k-free, for m = 0..n (gcd(0, b) = b)."""
    if not 1 <= b <= tables.limit:
        raise OutOfRangeError(f"b={b} outside tables range [1, {tables.limit}]")
    g = np.gcd(np.arange(n + 1, dtype=np.int64) + a, b)
    return tables.kfree[g]


def _check_k(k, tables):
    if k != tables.k:
        raise ValueError(f"tables were built for k={tables.k}, got k={k}")


def gcd_kfree_sum(kernel, a, b, k, tables):
    """sum of C_alpha(n, m) over 0 <= m <= n with gcd(m + a, b) k-free.

    Tends to f_k(b) with error O(tau_3(b)/sqrt(n)).
    """
    _check_k(k, tables)
    return kernel._sum(kfree_gcd_mask(kernel.n, a, b, tables))


def double_gcd_kfree_sum(kernel, a1, b1, a2, b2, k, tables):
    """Same with both gcd(m + a1, b1) and gcd(m + a2, b2) k-free; needs gcd(b1, b2) = 1."""
    _check_k(k, tables)
    if math.gcd(b1, b2) != 1:
        raise PreconditionError(f"moduli must be coprime, got b1={b1}, b2={b2}")
    mask = kfree_gcd_mask(kernel.n, a1, b1, tables) & kfree_gcd_mask(kernel.n, a2, b2, tables)
    return kernel._sum(mask)


def double_gcd_kfree_grid(kernel, a1, a2, b_max, tables):
    """Matrix S[b1, b2] of double_gcd_kfree_sum for 1 <= b1, b2 <= b_max.

    Entries with gcd(b1, b2) > 1 are meaningless and set to NaN. Uses one
    dense product instead of b_max**2 separate sums, so each entry carries
    plain float64 dot-product rounding (relative error <= (n+1) * 2**-53).
    """
    b = np.arange(1, b_max + 1)
    M1 = np.stack([kfree_gcd_mask(kernel.n, a1, int(x), tables) for x in b]).astype(np.float64)
    M2 = np.stack([kfree_gcd_mask(kernel.n, a2, int(x), tables) for x in b]).astype(np.float64)
    S = (M1 * kernel.weights) @ M2.T
    out = np.full((b_max + 1, b_max + 1), np.nan)
    out[1:, 1:] = S
    coprime = np.gcd.outer(b, b) == 1
    out[1:, 1:][~coprime] = np.nan
    return out


def _check_constraints(constraints):
    us = [u for _, u, _ in constraints]
    for a, u, d in constraints:
        if u < 1 or d < 1 or u % d:
            raise PreconditionError(f"need d | u with u, d >= 1, got u={u}, d={d}")
    for i in range(len(us)):
        for j in range(i + 1, len(us)):
            if math.gcd(us[i], us[j]) != 1:
                raise PreconditionError(f"moduli {us[i]} and {us[j]} are not coprime")


def coprime_moduli_sum(kernel, constraints):
    """sum of C_alpha(n, s) over s with gcd(s + a_j, u_j) = d_j for every (a_j, u_j, d_j)."""
    _check_constraints(constraints)
    s = np.arange(kernel.n + 1, dtype=np.int64)
    mask = np.ones(kernel.n + 1, dtype=bool)
    for a, u, d in constraints:
        mask &= np.gcd(s + a, u) == d
    return kernel._sum(mask)


def coprime_moduli_main_term(constraints):
    """Predicted limit prod_j (1/d_j) * sum_{r | u_j/d_j} mu(r)/r = prod_j phi(u_j/d_j)/u_j."""
    _check_constraints(constraints)
    out = 1.0
    for _, u, d in constraints:
        m = u // d
        out *= math.prod(1 - 1 / p for p in factorize(m)) / d
    return out


def coprime_moduli_error_scale(constraints):
    """prod_j tau_2(u_j/d_j), the size of the error term's numerator."""
    return math.prod(tau_l(u // d, 2) for _, u, d in constraints)
