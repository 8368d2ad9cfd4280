"""Parameter-grid checks of the binomial-sum and partial-sum estimates.

Each check yields rows with the direct left-hand side, the predicted main
term, the residual and a residual scaled by the claimed error rate. The
implied constants are never assumed; the caller compares scaled residuals
against a threshold and reports the observed maximum.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .arith import build_tables, divisors, partial_sum_fk, partial_sum_fk_pair, tau_l
from .binom import (
    build_kernel,
    coprime_moduli_error_scale,
    coprime_moduli_main_term,
    coprime_moduli_sum,
    double_gcd_kfree_grid,
    gcd_kfree_sum,
    max_weight,
    residue_class_sums,
)
from .constants import TARGET_TOL, inv_zeta_2k, twin_product

COLUMNS = ["lemma", "alpha", "n", "k", "params", "lhs", "main_term", "residual", "scaled_residual"]


class Lemma(str, Enum):
    L2_2 = "L2_2"  # local CLT: max binomial weight
    L2_5 = "L2_5"  # residue-class sums
    L2_6 = "L2_6"  # gcd(s + a_j, u_j) = d_j over coprime moduli
    L3_1 = "L3_1"  # gcd(m + a, b) k-free
    L4_1 = "L4_1"  # two k-free gcd conditions, coprime moduli
    L2_9 = "L2_9"  # mean of f_k
    L2_10 = "L2_10"  # mean of f_k(n) f_k(n+1)


DEFAULTS = {
    "alpha": [0.3, 0.5, 0.7],
    "n": [100, 1000, 10000],
    "k": [1, 2],
    "d_max": 50,
    "u_max": 12,
    "b_max": 200,
    "a": 0,
    "a1": 0,
    "a2": 1,
    "N": [1_000_000],
}


def _row(lemma, alpha, n, k, params, lhs, main, scale):
    residual = float(lhs) - float(main)
    return {
        "lemma": lemma.value,
        "alpha": alpha,
        "n": n,
        "k": k,
        "params": params,
        "lhs": float(lhs),
        "main_term": float(main),
        "residual": residual,
        "scaled_residual": float(abs(residual) * scale),
    }


def local_clt_rows(alphas, ns):
    for a in alphas:
        for n in ns:
            kern = build_kernel(a, n)
            yield _row(Lemma.L2_2, a, n, None, "", max_weight(kern), 0.0, math.sqrt(n))


def residue_rows(alphas, ns, d_max, all_residues=False):
    """One row per (alpha, n, d) at the worst residue, or every residue."""
    for a in alphas:
        for n in ns:
            kern = build_kernel(a, n)
            for d in range(1, min(d_max, n) + 1):
                sums = residue_class_sums(kern, d)
                dev = np.abs(sums - 1 / d)
                picks = range(d) if all_residues else [int(np.argmax(dev))]
                for r in picks:
                    yield _row(Lemma.L2_5, a, n, None, f"d={d};r={r}", sums[r], 1 / d, math.sqrt(n))


def coprime_moduli_rows(alphas, ns, u_max, a1, a2):
    for a in alphas:
        for n in ns:
            kern = build_kernel(a, n)
            for u1 in range(1, u_max + 1):
                for u2 in range(1, u_max + 1):
                    if math.gcd(u1, u2) != 1:
                        continue
                    for d1 in divisors(u1):
                        for d2 in divisors(u2):
                            cons = [(a1, u1, d1), (a2, u2, d2)]
                            lhs = coprime_moduli_sum(kern, cons)
                            main = coprime_moduli_main_term(cons)
                            scale = math.sqrt(n) / coprime_moduli_error_scale(cons)
                            params = f"u1={u1};d1={d1};a1={a1};u2={u2};d2={d2};a2={a2}"
                            yield _row(Lemma.L2_6, a, n, None, params, lhs, main, scale)


def _tables_for(k, top, cache):
    t = cache.get(k)
    if t is None or t.limit < top:
        t = cache[k] = build_tables(top, k)
    return t


def gcd_kfree_rows(alphas, ns, ks, b_max, a, cache=None):
    cache = {} if cache is None else cache
    for k in ks:
        tables = _tables_for(k, b_max, cache)
        for al in alphas:
            for n in ns:
                kern = build_kernel(al, n)
                for b in range(1, b_max + 1):
                    lhs = gcd_kfree_sum(kern, a, b, k, tables)
                    scale = math.sqrt(n) / tau_l(b, 3)
                    yield _row(Lemma.L3_1, al, n, k, f"a={a};b={b}", lhs, tables.fk[b], scale)


def double_gcd_rows(alphas, ns, ks, b_max, a1, a2, all_pairs=False, cache=None):
    """One row per (alpha, n, k, b1) at the worst coprime b2, or every pair."""
    cache = {} if cache is None else cache
    tau3 = np.array([0] + [tau_l(b, 3) for b in range(1, b_max + 1)], dtype=float)
    for k in ks:
        tables = _tables_for(k, b_max, cache)
        fk = tables.fk[: b_max + 1]
        main = np.outer(fk, fk)
        for al in alphas:
            for n in ns:
                S = double_gcd_kfree_grid(build_kernel(al, n), a1, a2, b_max, tables)
                with np.errstate(invalid="ignore"):
                    scaled = np.abs(S - main) * math.sqrt(n) / np.outer(tau3, tau3)
                for b1 in range(1, b_max + 1):
                    row = scaled[b1]
                    ok = np.flatnonzero(~np.isnan(row))
                    picks = ok if all_pairs else [ok[np.argmax(row[ok])]]
                    for b2 in picks:
                        b2 = int(b2)
                        params = f"a1={a1};b1={b1};a2={a2};b2={b2}"
                        yield _row(Lemma.L4_1, al, n, k, params, S[b1, b2], main[b1, b2],
                                   math.sqrt(n) / (tau3[b1] * tau3[b2]))


def partial_sum_rows(lemma, ks, Ns, tol=TARGET_TOL, cache=None):
    """Mean of f_k (or of f_k(n)f_k(n+1)) up to N against its limit.

    The scaled residual is N * |mean - limit|, i.e. the error of the sum
    itself, which should stay O(N^eps).
    """
    cache = {} if cache is None else cache
    twin = Lemma(lemma) is Lemma.L2_10
    for k in ks:
        for N in Ns:
            tables = _tables_for(k, N + 1, cache)
            if twin:
                total = partial_sum_fk_pair(tables, N, exact=False)
                limit = twin_product(k, tol)
            else:
                total = partial_sum_fk(tables, N, exact=False)
                limit = inv_zeta_2k(k, tol)
            yield _row(Lemma(lemma), None, N, k, f"N={N}", total / N, limit.value, N)


def run_lemma(lemma, alpha=None, n=None, k=None, d_max=None, u_max=None, b_max=None,
              a=None, a1=None, a2=None, N=None, all_rows=False):
    """Dispatch one lemma over its grid; unspecified parameters use DEFAULTS."""
    lemma = Lemma(lemma)
    p = dict(DEFAULTS)
    for key, val in dict(alpha=alpha, n=n, k=k, d_max=d_max, u_max=u_max, b_max=b_max,
                         a=a, a1=a1, a2=a2, N=N).items():
        if val is not None:
            p[key] = val
    if lemma is Lemma.L2_2:
        return list(local_clt_rows(p["alpha"], p["n"]))
    if lemma is Lemma.L2_5:
        return list(residue_rows(p["alpha"], p["n"], p["d_max"], all_rows))
    if lemma is Lemma.L2_6:
        return list(coprime_moduli_rows(p["alpha"], p["n"], p["u_max"], p["a1"], p["a2"]))
    if lemma is Lemma.L3_1:
        return list(gcd_kfree_rows(p["alpha"], p["n"], p["k"], p["b_max"], p["a"]))
    if lemma is Lemma.L4_1:
        return list(double_gcd_rows(p["alpha"], p["n"], p["k"], p["b_max"], p["a1"], p["a2"], all_rows))
    return list(partial_sum_rows(lemma, p["k"], p["N"]))


def breaches(rows, threshold):
    return [r for r in rows if not r["scaled_residual"] < threshold]
