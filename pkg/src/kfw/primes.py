"""Prime sieves shared by the arithmetic tables and the Euler products."""

import numpy as np

# Segment length for the segmented sieve, in integers covered.
SEGMENT = 1 << 22


def primes_up_to(n):
    """Return all primes p <= n as an int64 array (plain Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for p in range(3, int(n**0.5) + 1, 2):
        if sieve[p]:
            sieve[p * p :: 2 * p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def iter_prime_segments(limit, segment=SEGMENT):
    """Yield arrays of consecutive primes covering [2, limit], in order.

    Memory stays O(sqrt(limit) + segment) so cutoffs around 1e8-1e9 are fine.
    """
    if limit < 2:
        return
    root = int(limit**0.5) + 1
    base = primes_up_to(root)
    odd_base = base[1:]
    yield base[base <= limit]
    lo = root + 1
    while lo <= limit:
        hi = min(lo + segment, limit + 1)
        mark = np.ones(hi - lo, dtype=bool)
        for p in odd_base:
            if p * p >= hi:
                break
            start = max(p * p, ((lo + p - 1) // p) * p)
            mark[start - lo :: p] = False
        # evens
        mark[(lo & 1) :: 2] = False
        found = np.flatnonzero(mark).astype(np.int64) + lo
        if found.size:
            yield found
        lo = hi


def smallest_prime_factor(n):
    """spf[m] for 0 <= m <= n (spf[0] = 0, spf[1] = 1)."""
    spf = np.zeros(n + 1, dtype=np.int64)
    if n >= 1:
        spf[1] = 1
    for p in primes_up_to(int(n**0.5) + 1):
        if p > n:
            break
        view = spf[p * p :: p]
        view[view == 0] = p
    rest = spf == 0
    rest[0] = False
    spf[rest] = np.flatnonzero(rest)
    return spf
