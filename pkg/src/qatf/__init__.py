"""Quantile additive trend filtering.

Library and CLI for penalized quantile (and mean) additive trend
filtering: weighted difference operators, ADMM univariate solvers,
backfitting over dimensions, deterministic scenario simulation, and a
Monte-Carlo benchmark harness with oracle penalty selection.
"""

__version__ = "0.1.0"

from .backfit import BackfitConfig, BackfitSession, BackfitTrace, backfit, predict
from .bench import BenchReport, BenchRow, GridSpec, d_sweep, lambda_grid, oracle_fit, rate_slope, run_bench
from .core import (
    AdditiveFit,
    QatfError,
    SortedDesign,
    TauLevel,
    read_dataset_csv,
    validate_design,
    write_dataset_csv,
)
from .diffop import DifferenceOperator, apply, apply_transpose, build_diff_operator, gram_banded
from .losses import LossReport, check_loss, delta2, empirical_loss_gap, mse, tv_seminorm
from .scenarios import ScenarioSpec, SyntheticDataset, empirical_quantile, generate
from .solvers import QtfSolution, SolverConfig, TrendFilter1D, prox_check, solve_mean_tf, solve_qtf

__all__ = [
    "AdditiveFit",
    "BackfitConfig",
    "BackfitSession",
    "BackfitTrace",
    "BenchReport",
    "BenchRow",
    "DifferenceOperator",
    "GridSpec",
    "LossReport",
    "QatfError",
    "QtfSolution",
    "ScenarioSpec",
    "SolverConfig",
    "SortedDesign",
    "SyntheticDataset",
    "TauLevel",
    "TrendFilter1D",
    "apply",
    "apply_transpose",
    "backfit",
    "build_diff_operator",
    "check_loss",
    "d_sweep",
    "delta2",
    "empirical_loss_gap",
    "empirical_quantile",
    "generate",
    "gram_banded",
    "lambda_grid",
    "mse",
    "oracle_fit",
    "predict",
    "prox_check",
    "rate_slope",
    "read_dataset_csv",
    "run_bench",
    "solve_mean_tf",
    "solve_qtf",
    "tv_seminorm",
    "validate_design",
    "write_dataset_csv",
]
