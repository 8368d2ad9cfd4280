"""Exact expectations and variances of the k-free proportions S_n, T_n.

Two independent routes are provided:

* kernel sums over the endpoint distribution (``expect_*``) and a forward
  propagation of the x-coordinate distribution for the variances;
* ``path_enumeration_oracle``, which walks all 2**n step strings.

"Exact" means exact up to float rounding; all long sums use math.fsum. The
oracle returns Fractions when alpha is given as a Fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .arith import build_tables, kfree_flags
from .binom import build_kernel
from .constants import TARGET_TOL, inv_zeta_2k, twin_product
from .errors import CapacityError, OutOfRangeError

DEFAULT_MAX_N = 10_000
ORACLE_MAX_N = 20
_CHUNK = 1 << 15


class Quantity(str, Enum):
    MEAN_S = "mean_s"
    MEAN_T = "mean_t"
    VAR_S = "var_s"
    VAR_T = "var_t"


def _need(tables, top):
    if top > tables.limit:
        raise OutOfRangeError(f"needs tables up to {top}, have {tables.limit}")


def _gcd_mask(tables, x, j):
    return tables.kfree[np.gcd(x, j)]


def expect_Xi(i, alpha, k, tables):
    """P(P_i is k-free) = sum of C_alpha(i, l) over l with gcd(l, i) k-free."""
    if i < 1:
        raise ValueError("i must be >= 1")
    _need(tables, i)
    w = build_kernel(float(alpha), i).weights
    l = np.arange(i + 1)
    return math.fsum(w[_gcd_mask(tables, l, i)])


def expect_XiXi1(i, alpha, k, tables):
    """P(P_i and P_{i+1} both k-free)."""
    _need(tables, i + 1)
    a = float(alpha)
    w = build_kernel(a, i).weights
    l = np.arange(i + 1)
    here = _gcd_mask(tables, l, i)
    up = _gcd_mask(tables, l, i + 1)  # step (0, 1): x unchanged
    right = _gcd_mask(tables, l + 1, i + 1)
    return math.fsum(w[here] * ((1 - a) * up[here] + a * right[here]))


def expect_XiXj(i, j, alpha, k, tables):
    """P(P_i and P_j both k-free), i < j, as the literal double sum over (l, m)."""
    if not 1 <= i < j:
        raise ValueError("need 1 <= i < j")
    _need(tables, j)
    a = float(alpha)
    wi = build_kernel(a, i).weights
    wj = build_kernel(a, j - i).weights
    l = np.arange(i + 1)
    m = np.arange(j - i + 1)
    first = wi * _gcd_mask(tables, l, i)
    second = _gcd_mask(tables, l[:, None] + m[None, :], j)
    return math.fsum((first[:, None] * wj[None, :] * second).ravel())


def product_approximation(i, j, tables):
    """f_k(i) f_k(j), the large-n approximation to E(X_i X_j)."""
    return float(tables.fk_value(i) * tables.fk_value(j))


def _check_cap(n, max_n):
    if n > max_n:
        raise CapacityError(f"n={n} above the exact-engine cap {max_n}")


def expect_Sn(n, alpha, k, tables, max_n=DEFAULT_MAX_N):
    """E(S_n) = (1/n) sum_i E(X_i). Quadratic in n."""
    _check_cap(n, max_n)
    _need(tables, n)
    return math.fsum(expect_Xi(i, alpha, k, tables) for i in range(1, n + 1)) / n


def expect_Tn(n, alpha, k, tables, max_n=DEFAULT_MAX_N):
    """E(T_n) = (1/n) sum_i E(X_i X_{i+1})."""
    _check_cap(n, max_n)
    _need(tables, n + 1)
    return math.fsum(expect_XiXi1(i, alpha, k, tables) for i in range(1, n + 1)) / n


def _step(v, a):
    """Advance an x-distribution one step: x += 1 with probability a."""
    out = np.empty(v.size + 1)
    out[:-1] = (1 - a) * v
    out[-1] = 0.0
    out[1:] += a * v
    return out


def _variance_profile_S(alpha, tables, grid):
    """V(S_t) at each t in grid via the second-moment decomposition.

    E(X_i X_j) for all i < j is obtained by pushing forward R, the sum over
    i < t of the x_t-distribution restricted to paths with X_i = 1.
    """
    a = float(alpha)
    top = max(grid)
    _need(tables, top)
    P = np.array([1.0])  # x-distribution at time t
    R = np.zeros(1)
    mean_terms, cross_terms, out = [], [], {}
    for t in range(1, top + 1):
        P, R = _step(P, a), _step(R, a)
        m = _gcd_mask(tables, np.arange(t + 1), t)
        mean_terms.append(math.fsum(P[m]))
        cross_terms.append(math.fsum(R[m]))
        R = R + np.where(m, P, 0.0)
        if t in grid:
            s1 = math.fsum(mean_terms)
            s2 = math.fsum(cross_terms)
            out[t] = (s1 + 2 * s2 - s1 * s1) / (t * t)
    return [out[t] for t in grid]


def _variance_profile_T(alpha, tables, grid):
    """V(T_t) at each t in grid, with Y_i = X_i X_{i+1} in place of X_i."""
    a = float(alpha)
    top = max(grid)
    _need(tables, top + 1)
    P = np.array([1.0])
    R = np.zeros(1)  # sum over i < t of the x_t-mass weighted by Y_i
    pending = np.zeros(2)  # Y_{t-1}-weighted mass, known only once x_t is
    mean_terms, cross_terms, out = [], [], {}
    for t in range(1, top + 1):
        P = _step(P, a)
        R = _step(R, a) + pending
        m_now = _gcd_mask(tables, np.arange(t + 1), t)
        m_next = _gcd_mask(tables, np.arange(t + 2), t + 1)
        # P(Y_t = 1 | x_t = x): up-step keeps x, right-step moves to x + 1
        cont = m_now * ((1 - a) * m_next[:-1] + a * m_next[1:])
        mean_terms.append(math.fsum(P * cont))
        cross_terms.append(math.fsum(R * cont))
        pending = _step(np.where(m_now, P, 0.0), a) * m_next
        if t in grid:
            s1 = math.fsum(mean_terms)
            s2 = math.fsum(cross_terms)
            out[t] = (s1 + 2 * s2 - s1 * s1) / (t * t)
    return [out[t] for t in grid]


def variance_Sn(n, alpha, k, tables):
    """V(S_n) from E(X_i) and all E(X_i X_j), for n beyond enumeration range."""
    return _variance_profile_S(alpha, tables, [n])[0]


def variance_Tn(n, alpha, k, tables):
    """V(T_n) by the same decomposition applied to X_i X_{i+1}."""
    return _variance_profile_T(alpha, tables, [n])[0]


# --- exhaustive enumeration --------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    """Moments over all 2**n paths of n steps.

    The T statistics use the n steps as n-1 consecutive pairs, i.e. they
    describe T_{n-1}; they are None when n == 1. Distributions map the count
    of k-free points (resp. twin pairs) to its probability.
    """

    n: int
    alpha: object
    k: int
    mean_s: object
    var_s: object
    mean_t: object
    var_t: object
    s_distribution: dict = field(repr=False)
    t_distribution: dict = field(repr=False)


def _path_counts(n, flags):
    """Integer counts of paths by (#right steps, #k-free points, #twin pairs)."""
    size = (n + 1) * (n + 1) * n
    counts = np.zeros(size, dtype=np.int64)
    shifts = np.arange(n, dtype=np.int64)
    idx_t = np.arange(1, n + 1, dtype=np.int64)
    for lo in range(0, 1 << n, _CHUNK):
        paths = np.arange(lo, min(lo + _CHUNK, 1 << n), dtype=np.int64)
        right = (paths[:, None] >> shifts) & 1
        x = np.cumsum(right, axis=1)
        X = flags[np.gcd(x, idx_t - x)]
        cs = X.sum(axis=1)
        ct = (X[:, :-1] & X[:, 1:]).sum(axis=1)
        key = (x[:, -1] * (n + 1) + cs) * n + ct
        counts += np.bincount(key, minlength=size)
    return counts.reshape(n + 1, n + 1, n)


def path_enumeration_oracle(n, alpha, k):
    """Ground truth by walking all 2**n up/right strings (n <= 20)."""
    if not 1 <= n <= ORACLE_MAX_N:
        raise CapacityError(f"enumeration needs 1 <= n <= {ORACLE_MAX_N}, got {n}")
    exact = isinstance(alpha, Fraction)
    a = alpha if exact else float(alpha)
    if not 0 < a < 1:
        raise ValueError("alpha must lie in (0, 1)")
    counts = _path_counts(n, kfree_flags(n, k))
    total = (lambda xs: sum(xs, Fraction(0))) if exact else math.fsum

    s_dist, t_dist = {}, {}
    for R, cs, ct in zip(*np.nonzero(counts)):
        p = int(counts[R, cs, ct]) * a ** int(R) * (1 - a) ** (n - int(R))
        s_dist.setdefault(int(cs), []).append(p)
        t_dist.setdefault(int(ct), []).append(p)
    s_dist = {c: total(v) for c, v in sorted(s_dist.items())}
    t_dist = {c: total(v) for c, v in sorted(t_dist.items())}

    def moments(dist, denom):
        m1 = total([p * c for c, p in dist.items()]) / denom
        m2 = total([p * c * c for c, p in dist.items()]) / (denom * denom)
        return m1, m2 - m1 * m1

    mean_s, var_s = moments(s_dist, n)
    mean_t = var_t = None
    if n > 1:
        mean_t, var_t = moments(t_dist, n - 1)
    return OracleResult(n, alpha, k, mean_s, var_s, mean_t, var_t, s_dist, t_dist)


def variance_Sn_exact(n, alpha, k):
    """V(S_n) by exhaustive enumeration of the 2**n paths."""
    return path_enumeration_oracle(n, alpha, k).var_s


def variance_Tn_exact(n, alpha, k):
    """V(T_n) by exhaustive enumeration of the 2**(n+1) paths."""
    return path_enumeration_oracle(n + 1, alpha, k).var_t


# --- series -----------------------------------------------------------------


@dataclass(frozen=True)
class ExpectationSeries:
    quantity: Quantity
    alpha: float
    k: int
    grid: tuple
    values: tuple
    limit_constant: float
    residuals: tuple

    def loglog_slope(self):
        """Least-squares slope of log|residual| against log n (informational)."""
        r = np.abs(np.asarray(self.residuals, dtype=float))
        if len(self.grid) < 2 or np.any(r == 0):
            return float("nan")
        return float(np.polyfit(np.log(self.grid), np.log(r), 1)[0])

    def rows(self):
        for n, v, r in zip(self.grid, self.values, self.residuals):
            yield {
                "quantity": self.quantity.value,
                "alpha": self.alpha,
                "k": self.k,
                "n": n,
                "value": v,
                "limit_constant": self.limit_constant,
                "residual": r,
                "residual_times_sqrt_n": r * math.sqrt(n),
            }


def expectation_series(quantity, alpha, k, grid, tables=None, max_n=DEFAULT_MAX_N, tol=TARGET_TOL):
    """Exact values of one quantity over an increasing grid of n."""
    quantity = Quantity(quantity)
    grid = tuple(int(n) for n in grid)
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
        raise ValueError("grid must be a non-empty, strictly increasing list of n >= 1")
    top = grid[-1]
    _check_cap(top, max_n)
    if tables is None:
        tables = build_tables(top + 1, k)

    if quantity is Quantity.MEAN_S:
        terms = [expect_Xi(i, alpha, k, tables) for i in range(1, top + 1)]
        values = [math.fsum(terms[:n]) / n for n in grid]
        limit = inv_zeta_2k(k, tol).value
    elif quantity is Quantity.MEAN_T:
        terms = [expect_XiXi1(i, alpha, k, tables) for i in range(1, top + 1)]
        values = [math.fsum(terms[:n]) / n for n in grid]
        limit = twin_product(k, tol).value
    elif quantity is Quantity.VAR_S:
        values = _variance_profile_S(alpha, tables, grid)
        limit = 0.0
    else:
        values = _variance_profile_T(alpha, tables, grid)
        limit = 0.0
    return ExpectationSeries(
        quantity=quantity,
        alpha=float(alpha),
        k=k,
        grid=grid,
        values=tuple(values),
        limit_constant=limit,
        residuals=tuple(v - limit for v in values),
    )
