"""Sieved arithmetic functions: Mobius, k-free flags, g_k, f_k, tau_l, tau*.

Everything here is exact. ``f_k(n)`` is stored as the integer ``n * f_k(n)``
(always an integer, since every term of the divisor sum has a denominator
dividing ``n``), so ``f_k(n) == Fraction(fk_num[n], n)``.

The ``*_direct`` functions are brute-force oracles. They factor by trial
division and enumerate divisors; they share no code with the sieves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product

import numpy as np

from .errors import CapacityError, OutOfRangeError
from .primes import primes_up_to, smallest_prime_factor

DEFAULT_MAX_LIMIT = 20_000_000
# Above this, partial sums fall back to a correctly rounded float sum.
EXACT_SUM_LIMIT = 10_000


def _frozen(a):
    a.setflags(write=False)
    return a


def _prime_power_split(spf):
    """For every n >= 2 return (p, e, m) with n = p**e * m, p = spf[n], p !| m."""
    n_all = np.arange(spf.size, dtype=np.int64)
    p = spf.copy()
    p[:2] = 1
    m = n_all // p
    e = np.ones(spf.size, dtype=np.int64)
    e[:2] = 0
    live = m % p == 0
    live[:2] = False
    while live.any():
        idx = np.flatnonzero(live)
        m[idx] //= p[idx]
        e[idx] += 1
        live[idx] = m[idx] % p[idx] == 0
    return p, e, m


def _multiplicative(split, at_prime_power, dtype=np.int64):
    """Evaluate a multiplicative h from h(p**e) = at_prime_power(p, e).

    Values for [2**j, 2**(j+1)) only need h at cofactors m <= n/2, which were
    filled in an earlier block, so each block is one vectorised pass.
    """
    p, e, m = split
    size = p.size
    h = np.zeros(size, dtype=dtype)
    if size > 1:
        h[1] = 1
    lo = 2
    while lo < size:
        hi = min(2 * lo, size)
        h[lo:hi] = at_prime_power(p[lo:hi], e[lo:hi]).astype(dtype) * h[m[lo:hi]]
        lo = hi
    return h


def _divisor_sum_numerators(gk, limit):
    """F(n) = sum_{w | n} g_k(w) * (n / w), i.e. n * f_k(n), by a sieve pass.

    Small w add to all their multiples at once; large w (only few multiples
    each) are handled by looping over the multiplier q instead.
    """
    F = np.zeros(limit + 1, dtype=np.int64)
    support = np.flatnonzero(gk)
    support = support[support >= 1]
    cut = math.isqrt(limit)
    for w in support[support <= cut]:
        F[w::w] += gk[w] * np.arange(1, limit // w + 1, dtype=np.int64)
    large = support[support > cut]
    gl = gk[large].astype(np.int64)
    for q in range(1, limit // (cut + 1) + 1):
        sel = large <= limit // q
        if not sel.any():
            break
        F[q * large[sel]] += q * gl[sel]
    return F


@dataclass(frozen=True)
class ArithTables:
    """Sieved values for 0 <= n <= limit (index 0 is padding).

    Arrays are read-only, so one instance can be shared between threads.
    """

    limit: int
    k: int
    mobius: np.ndarray
    kfree: np.ndarray
    gk: np.ndarray
    fk_num: np.ndarray
    tau_star: np.ndarray
    smallest_prime_factor: np.ndarray

    @cached_property
    def fk(self):
        """f_k as float64 (index 0 is 0)."""
        n = np.arange(self.limit + 1, dtype=np.float64)
        n[0] = 1.0
        out = self.fk_num / n
        out[0] = 0.0
        return _frozen(out)

    def fk_value(self, n):
        """Exact f_k(n) as a Fraction."""
        self._check(n)
        return Fraction(int(self.fk_num[n]), n)

    def factorize(self, n):
        """Prime signature of n via the spf table, as {p: e}."""
        self._check(n)
        out = {}
        while n > 1:
            p = int(self.smallest_prime_factor[n])
            while n % p == 0:
                n //= p
                out[p] = out.get(p, 0) + 1
        return out

    def tau_l(self, n, l):
        return _tau_l_from_signature(self.factorize(n), l)

    def _check(self, n):
        if not 1 <= n <= self.limit:
            raise OutOfRangeError(f"n={n} outside tables range [1, {self.limit}]")


def build_tables(N, k, max_limit=DEFAULT_MAX_LIMIT):
    """Sieve mu, k-free flags, g_k, f_k and tau* for 1 <= n <= N."""
    if N < 1 or k < 1:
        raise ValueError(f"need N >= 1 and k >= 1, got N={N}, k={k}")
    if N > max_limit:
        raise CapacityError(f"N={N} exceeds the table cap {max_limit}")
    spf = smallest_prime_factor(N)
    split = _prime_power_split(spf)

    mobius = _multiplicative(split, lambda p, e: np.where(e == 1, -1, 0), np.int8)
    kfree = _multiplicative(split, lambda p, e: e < k, np.int8).astype(bool)
    kfree[0] = False
    gk = _multiplicative(split, lambda p, e: np.where(e == k, -1, 0), np.int8)
    tau_star = _multiplicative(split, lambda p, e: np.full(p.shape, 2), np.int64)
    fk_num = _divisor_sum_numerators(gk, N)

    return ArithTables(
        limit=N,
        k=k,
        mobius=_frozen(mobius),
        kfree=_frozen(kfree),
        gk=_frozen(gk),
        fk_num=_frozen(fk_num),
        tau_star=_frozen(tau_star),
        smallest_prime_factor=_frozen(spf),
    )


def kfree_flags(limit, k):
    """Boolean array flags[g] = (g is k-free) for 0 <= g <= limit; flags[0] is False."""
    flags = np.ones(limit + 1, dtype=bool)
    flags[0] = False
    if k == 1:
        flags[2:] = False
        return flags
    for p in primes_up_to(math.isqrt(limit)):
        if p**k > limit:
            break
        flags[p**k :: p**k] = False
    return flags


def _exact_sum(nums, dens):
    """Exact sum of nums[i]/dens[i] over a common denominator."""
    nums = [int(a) for a in nums]
    dens = [int(b) for b in dens]
    reduced = []
    for a, b in zip(nums, dens):
        g = math.gcd(a, b)
        reduced.append((a // g, b // g))
    D = math.lcm(*(b for _, b in reduced)) if reduced else 1
    return Fraction(sum(a * (D // b) for a, b in reduced), D)


def partial_sum_fk(tables, N, exact=None):
    """sum_{1<=n<=N} f_k(n).

    Returns a Fraction when ``exact`` (default: N <= EXACT_SUM_LIMIT), else a
    float from math.fsum of float64 terms; that sum is off by at most
    N * 2**-53 from the exact value.
    """
    if not 1 <= N <= tables.limit:
        raise OutOfRangeError(f"N={N} outside tables range [1, {tables.limit}]")
    if exact is None:
        exact = N <= EXACT_SUM_LIMIT
    if exact:
        return _exact_sum(tables.fk_num[1 : N + 1], range(1, N + 1))
    return math.fsum(tables.fk[1 : N + 1])


def partial_sum_fk_pair(tables, N, exact=None):
    """sum_{1<=n<=N} f_k(n) f_k(n+1); exactness rules as partial_sum_fk."""
    if not 1 <= N or N + 1 > tables.limit:
        raise OutOfRangeError(f"N+1={N + 1} outside tables range [2, {tables.limit}]")
    if exact is None:
        exact = N <= EXACT_SUM_LIMIT
    if exact:
        F = tables.fk_num
        nums = [int(F[n]) * int(F[n + 1]) for n in range(1, N + 1)]
        return _exact_sum(nums, [n * (n + 1) for n in range(1, N + 1)])
    fk = tables.fk
    return math.fsum(fk[1 : N + 1] * fk[2 : N + 2])


# --- on-demand functions and brute-force oracles ---------------------------


def factorize(n):
    """Trial-division factorisation {p: e}."""
    if n < 1:
        raise ValueError("n must be positive")
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n):
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def mobius_direct(n):
    sig = factorize(n)
    if any(e > 1 for e in sig.values()):
        return 0
    return -1 if len(sig) % 2 else 1


def is_kfree_direct(n, k):
    """Trial division: no prime p with p**k | n. 1 is k-free for every k."""
    if n < 1:
        return False
    p = 2
    while p**k <= n:
        if n % p**k == 0:
            return False
        p += 1
    return True


def g_k_direct(n, k):
    """sum of mu(r) over ordered n = r*d with d k-free (full enumeration)."""
    return sum(mobius_direct(r) for r in divisors(n) if is_kfree_direct(n // r, k))


def f_k_direct(n, k):
    """sum of mu(r)/(r*d) over pairs with r*d | n and d k-free, as a Fraction."""
    num = 0
    for e in divisors(n):
        for r in divisors(e):
            if is_kfree_direct(e // r, k):
                num += mobius_direct(r) * (n // e)
    return Fraction(num, n)


def _tau_l_from_signature(sig, l):
    return math.prod(math.comb(e + l - 1, l - 1) for e in sig.values())


def tau_l(n, l):
    """l-fold divisor function from the prime signature."""
    if l < 2:
        raise ValueError("l must be >= 2")
    return _tau_l_from_signature(factorize(n), l)


def tau_l_direct(n, l):
    """Count ordered l-tuples with product n by recursive enumeration."""
    if l == 1:
        return 1
    return sum(tau_l_direct(n // d, l - 1) for d in divisors(n))


def tau_star(n):
    """Unitary divisor count 2**omega(n)."""
    return 2 ** len(factorize(n))


def tau_star_direct(n):
    return sum(1 for a, b in product(divisors(n), repeat=2) if a * b == n and math.gcd(a, b) == 1)
