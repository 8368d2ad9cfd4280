"""Proportions of k-free and twin k-free lattice points on alpha-random walks."""

__version__ = "0.1.0"

from .arith import ArithTables, build_tables
from .binom import BinomKernel, build_kernel
from .constants import ConstantResult, inv_zeta_2k, twin_product
from .exact import ExpectationSeries, expect_Sn, expect_Tn, path_enumeration_oracle
from .montecarlo import Aggregate, TrialResult, WalkConfig, run_trials, run_walk

__all__ = [
    "Aggregate",
    "ArithTables",
    "BinomKernel",
    "ConstantResult",
    "ExpectationSeries",
    "TrialResult",
    "WalkConfig",
    "build_kernel",
    "build_tables",
    "expect_Sn",
    "expect_Tn",
    "inv_zeta_2k",
    "path_enumeration_oracle",
    "run_trials",
    "run_walk",
    "twin_product",
]
