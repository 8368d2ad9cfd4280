"""Acceptance gate: the ten primary criteria at their stated tolerances."""

import csv
import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from kfw import cli
from kfw.arith import (
    build_tables,
    f_k_direct,
    g_k_direct,
    partial_sum_fk,
    partial_sum_fk_pair,
    tau_l_direct,
    tau_star_direct,
)
from kfw.constants import inv_zeta_2k, twin_product
from kfw.exact import (
    Quantity,
    expect_Sn,
    expect_Tn,
    expectation_series,
    path_enumeration_oracle,
    variance_Sn,
    variance_Sn_exact,
)
from kfw.montecarlo import WalkConfig, run_trials
from kfw.verify import Lemma, run_lemma

SIX_OVER_PI2 = 6 / math.pi**2


@pytest.fixture(scope="module")
def walks():
    out = {}
    for alpha, k in [(0.5, 1), (0.1, 1), (0.9, 1), (0.5, 2)]:
        t0 = time.perf_counter()
        _, agg = run_trials(WalkConfig(alpha=alpha, k=k, n=100_000, trials=200, base_seed=42))
        out[alpha, k] = (agg, time.perf_counter() - t0)
    return out


def test_c1_mean_s_and_alpha_independence(walks, verdict):
    agg, secs = walks[0.5, 1]
    dev = abs(agg.mean_s - 0.607927)
    worst = 0.0
    for a, b in itertools.combinations([0.5, 0.1, 0.9], 2):
        x, y = walks[a, 1][0], walks[b, 1][0]
        worst = max(worst, abs(x.mean_s - y.mean_s) / math.hypot(x.stderr_s, y.stderr_s))
    ok = dev <= 0.01 and secs < 30 and worst < 3
    verdict(1, ok, f"|mean_s - 0.607927| = {dev:.2e} (<= 0.01), {secs:.1f}s (< 30s), "
                   f"max pairwise gap {worst:.2f} combined stderr (< 3)")


def test_c2_mean_t(walks, verdict):
    agg, _ = walks[0.5, 1]
    target = twin_product(1, 1e-8)
    dev = abs(agg.mean_t - target.value)
    ok = dev <= 0.015 and target.tail_bound <= 1e-8
    verdict(2, ok, f"|mean_t - {target.value:.10f}| = {dev:.2e} (<= 0.015), tail_bound {target.tail_bound:.2e}")


def test_c3_k2(walks, verdict):
    agg, _ = walks[0.5, 2]
    ds = abs(agg.mean_s - 0.923938)
    dt = abs(agg.mean_t - twin_product(2, 1e-8).value)
    verdict(3, ds <= 0.01 and dt <= 0.01, f"k=2: |mean_s - 0.923938| = {ds:.2e}, |mean_t - target| = {dt:.2e} (<= 0.01)")


def test_c4_exact_vs_oracle(verdict):
    t0 = time.perf_counter()
    tabs = {k: build_tables(16, k) for k in (1, 2)}
    worst = 0.0
    for alpha in (Fraction(1, 4), Fraction(1, 2), Fraction(2, 3)):
        for k in (1, 2):
            for n in range(1, 15):
                o = path_enumeration_oracle(n, alpha, k)
                # mean and variance of S_n; the oracle's T statistic is T_{n-1}
                gaps = [
                    expect_Sn(n, alpha, k, tabs[k]) - o.mean_s,
                    variance_Sn(n, alpha, k, tabs[k]) - o.var_s,
                    variance_Sn_exact(n, float(alpha), k) - o.var_s,
                ]
                if n > 1:
                    gaps.append(expect_Tn(n - 1, alpha, k, tabs[k]) - o.mean_t)
                worst = max(worst, max(abs(float(g)) for g in gaps))
    secs = time.perf_counter() - t0
    verdict(4, worst <= 1e-11 and secs < 60, f"max |route - oracle| = {worst:.1e} (<= 1e-11), {secs:.1f}s (< 60s)")


def test_c5_residual_trend(verdict):
    s = expectation_series(Quantity.MEAN_S, 0.3, 1, [250, 1000, 4000])
    r = [abs(x) for x in s.residuals]
    slope = s.loglog_slope()
    ok = r[0] > r[1] > r[2] and slope <= -0.3
    verdict(5, ok, f"residuals {r[0]:.2e} > {r[1]:.2e} > {r[2]:.2e}, log-log slope {slope:.3f} (<= -0.3)")


def test_c6_partial_sums_at_scale(verdict):
    N = 10**6
    t0 = time.perf_counter()
    tables = build_tables(N + 1, 1)
    mean = partial_sum_fk(tables, N) / N
    pair = partial_sum_fk_pair(tables, N) / N
    secs = time.perf_counter() - t0
    d1 = abs(mean - SIX_OVER_PI2)
    d2 = abs(pair - twin_product(1, 1e-8).value)
    ok = d1 < 1e-3 and d2 < 1e-3 and secs < 10
    verdict(6, ok, f"N=1e6: mean gap {d1:.2e}, pair gap {d2:.2e} (< 1e-3), {secs:.1f}s (< 10s)")


def test_c7_residue_scaling(verdict):
    rows = run_lemma(Lemma.L2_5, alpha=[0.3, 0.5, 0.7], n=[100, 1000, 10000], d_max=50, all_rows=True)
    scaled = {n: max(r["scaled_residual"] for r in rows if r["n"] == n) for n in (100, 1000, 10000)}
    finite = all(math.isfinite(r["scaled_residual"]) for r in rows)
    ok = finite and scaled[10000] <= 2 * scaled[100]
    verdict(7, ok, "max scaled residual by n: " + ", ".join(f"{n}: {v:.3g}" for n, v in scaled.items())
                   + " (n=1e4 within 2x of n=1e2)")


def test_c8_gcd_lemmas_cli(tmp_path, verdict, capsys):
    observed = {}
    codes = []
    for lemma in ("L3_1", "L4_1"):
        path = tmp_path / f"{lemma}.csv"
        codes.append(cli.main(["verify", "--lemma", lemma, "--b-max", "200", "--n", "1000,10000",
                               "--k", "1,2", "--threshold", "10", "--output", str(path)]))
        with open(path, newline="") as fh:
            observed[lemma] = max(float(r["scaled_residual"]) for r in csv.DictReader(fh))
    capsys.readouterr()
    ok = codes == [0, 0]
    verdict(8, ok, f"exit codes {codes}, observed constants L3_1 {observed['L3_1']:.3f}, "
                   f"L4_1 {observed['L4_1']:.3f} (threshold 10)")


def test_c9_arith_oracles(verdict, tables_1e4):
    mismatches = 0
    t1 = tables_1e4[1]
    for n in range(1, 10_001):
        mismatches += t1.tau_star[n] != tau_star_direct(n)
        mismatches += t1.tau_l(n, 3) != tau_l_direct(n, 3)
        for k in (1, 2, 3):
            t = tables_1e4[k]
            mismatches += t.gk[n] != g_k_direct(n, k)
            mismatches += t.fk_value(n) != f_k_direct(n, k)
    verdict(9, mismatches == 0, f"{mismatches} mismatches over n <= 1e4, k in {{1,2,3}} (g_k, f_k, tau*, tau_3)")


DETERMINISM_RUNS = {
    "simulate": ["simulate", "--n", "2000", "--trials", "12", "--per-trial"],
    "exact": ["exact", "--grid", "20,80", "--quantity", "mean_s,mean_t,var_s,var_t", "--k", "1,2"],
    "constants": ["constants", "--k", "1,2,3", "--tol", "1e-7"],
    "verify": ["verify", "--lemma", "L4_1", "--n", "500", "--b-max", "30", "--all"],
    "report": ["report", "--n-grid", "10,300", "--trials", "8", "--k", "1,2"],
}


def test_c10_determinism(tmp_path, verdict, capsys):
    same = []
    for name, args in DETERMINISM_RUNS.items():
        for fmt in ("csv", "json"):
            blobs = []
            for threads in ("1", "4"):
                d = tmp_path / f"{name}-{fmt}-{threads}"
                d.mkdir()
                out = d / f"out.{fmt}"
                assert cli.main(args + ["--out", fmt, "--threads", threads, "--output", str(out)]) == 0
                blobs.append(sorted((p.name, p.read_bytes()) for p in d.iterdir()))
            same.append(blobs[0] == blobs[1])
    capsys.readouterr()
    verdict(10, all(same), f"{sum(same)}/{len(same)} subcommand/format pairs byte-identical across --threads 1 vs 4")
