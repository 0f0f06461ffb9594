"""Robust nonlinear shrinkage estimation of dispersion matrices.

Tyler-style angular estimation combined with nonlinear eigenvalue
shrinkage, the benchmark estimators it is compared with, a Monte-Carlo
PRIAL lab and a GMV portfolio backtester.
"""

__version__ = "0.1.0"

from .errors import (
    DecompositionError,
    DegenerateInputError,
    EstimationError,
    InvalidInputError,
    NonConvergenceError,
    NumericalError,
    RnlShrinkError,
    UnsupportedRegimeError,
)
from .estimators import ESTIMATOR_NAMES, get_estimator, run_estimator
from .numkit import EigenSystem, eig_sym, random_rotation, trace_normalize
from .rnl import (
    RnlEstimate,
    VIterationTrace,
    criterion,
    equiv_distance,
    f_map,
    f_objective,
    rcnl_estimate,
    rnl_estimate,
    surrogate_g,
    v_iteration,
)
from .shrinkage import Lambda0, linear_shrinkage, nl_estimate, qis_shrink, sample_covariance
from .tyler import FixedPointConfig, robust_linear_shrinkage, tyler_estimate

__all__ = [
    "__version__",
    "RnlShrinkError",
    "InvalidInputError",
    "UnsupportedRegimeError",
    "DegenerateInputError",
    "DecompositionError",
    "NumericalError",
    "EstimationError",
    "NonConvergenceError",
    "ESTIMATOR_NAMES",
    "run_estimator",
    "get_estimator",
    "EigenSystem",
    "eig_sym",
    "random_rotation",
    "trace_normalize",
    "RnlEstimate",
    "VIterationTrace",
    "criterion",
    "equiv_distance",
    "f_map",
    "f_objective",
    "surrogate_g",
    "v_iteration",
    "rnl_estimate",
    "rcnl_estimate",
    "Lambda0",
    "sample_covariance",
    "linear_shrinkage",
    "qis_shrink",
    "nl_estimate",
    "FixedPointConfig",
    "tyler_estimate",
    "robust_linear_shrinkage",
]
