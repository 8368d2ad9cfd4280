"""Monte Carlo simulation of alpha-random walks and their k-free proportions.

Each trial draws from its own Philox stream keyed by a SplitMix64 mix of
(base_seed, trial_index). Trials therefore do not depend on which worker runs
them or in what order, and aggregation folds results in trial_index order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .arith import kfree_flags

_MASK64 = (1 << 64) - 1


def splitmix64(x):
    """SplitMix64 finaliser: a bijective avalanche mix of a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_key(base_seed, trial_index):
    """128-bit Philox key for one trial."""
    hi = splitmix64((base_seed & _MASK64) ^ splitmix64(trial_index))
    lo = splitmix64(hi ^ trial_index)
    return (hi << 64) | lo


def trial_rng(base_seed, trial_index):
    return np.random.Generator(np.random.Philox(key=trial_key(base_seed, trial_index)))


def resolve_threads(threads=None):
    """Explicit value, else $KFW_THREADS, else the CPU count."""
    if threads:
        return int(threads)
    env = os.environ.get("KFW_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class WalkConfig:
    alpha: float = 0.5
    k: int = 1
    n: int = 100_000
    trials: int = 200
    base_seed: int = 42
    threads: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.k < 1 or self.n < 1 or self.trials < 1:
            raise ValueError("k, n and trials must all be >= 1")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class TrialResult:
    trial_index: int
    s_bar: float
    t_bar: float
    final_point: tuple


@dataclass(frozen=True)
class Aggregate:
    mean_s: float
    mean_t: float
    stddev_s: float
    stddev_t: float
    stderr_s: float
    stderr_t: float
    trials: int
    config: WalkConfig

    def to_dict(self):
        d = asdict(self)
        d["config"] = {k: v for k, v in d["config"].items() if k != "threads"}
        return d


def simulate_points(config, trial_index):
    """k-free indicators X_1..X_{n+1} and the final point of one walk."""
    rng = trial_rng(config.base_seed, trial_index)
    steps = config.n + 1
    # 53-bit uniforms against a fixed threshold: right step with probability alpha
    right = rng.random(steps) < config.alpha
    x = np.cumsum(right, dtype=np.int64)
    y = np.arange(1, steps + 1, dtype=np.int64) - x
    g = np.gcd(x, y)
    if config.k == 1:
        X = g == 1
    else:
        X = kfree_flags(steps, config.k)[g]
    return X, (int(x[-1]), int(y[-1]))


def run_walk(config, trial_index):
    """One trial: S_n over steps 1..n and T_n over pairs (i, i+1), i <= n."""
    X, final = simulate_points(config, trial_index)
    n = config.n
    s = int(np.count_nonzero(X[:n]))
    t = int(np.count_nonzero(X[:n] & X[1:]))
    return TrialResult(trial_index, s / n, t / n, final)


def _stats(values):
    m = len(values)
    mean = math.fsum(values) / m
    if m == 1:
        return mean, 0.0, 0.0
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (m - 1))
    return mean, sd, sd / math.sqrt(m)


def aggregate(results, config):
    """Fold trial results in trial_index order."""
    results = sorted(results, key=lambda r: r.trial_index)
    ms, sds, ses = _stats([r.s_bar for r in results])
    mt, sdt, set_ = _stats([r.t_bar for r in results])
    return Aggregate(ms, mt, sds, sdt, ses, set_, len(results), config)


def run_trials(config):
    """Run config.trials independent walks on a thread pool; returns (results, aggregate)."""
    workers = min(resolve_threads(config.threads), config.trials)
    indices = range(config.trials)
    if workers == 1:
        results = [run_walk(config, i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: run_walk(config, i), indices))
    results.sort(key=lambda r: r.trial_index)
    return results, aggregate(results, config)
