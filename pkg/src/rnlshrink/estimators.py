"""Name-based access to every covariance/dispersion estimator in the package."""

from __future__ import annotations

from functools import partial
from typing import Any, Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError
from .numkit import as_data_matrix
from .rnl import DEFAULT_EPS, DEFAULT_MAX_ITER, normalize_rows, rcnl_estimate, rnl_estimate
from .shrinkage import linear_shrinkage, nl_estimate, qis_shrink, sample_covariance
from .tyler import FixedPointConfig, robust_linear_shrinkage, tyler_estimate

__all__ = ["ESTIMATOR_NAMES", "run_estimator", "get_estimator"]

ESTIMATOR_NAMES = ("sample", "ls", "nl", "tyler", "rls", "rnl", "rcnl")


def _qis_dof(eigs, p, n, *, lost):
    return qis_shrink(eigs, p, n - lost)


def run_estimator(
    name: str,
    Y: ArrayLike,
    *,
    demean: bool = False,
    rho: float | None = None,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = 1e-8,
) -> tuple[NDArray[np.float64], dict[str, Any]]:
    """Run estimator ``name`` on the rows of ``Y``.

    Returns the p x p estimate and a dict of run metadata (iteration count
    and final stopping statistic for the iterative methods).  With
    ``demean=True`` column means are removed first and QIS is given the
    effective sample size n - 1.
    """
    if name not in ESTIMATOR_NAMES:
        raise InvalidInputError(f"unknown method {name!r}; choose from {', '.join(ESTIMATOR_NAMES)}")
    data = as_data_matrix(Y)
    n = data.shape[0]
    if demean:
        data = data - data.mean(axis=0)
    lost = 1 if demean else 0
    shrinker = partial(_qis_dof, lost=lost) if demean else qis_shrink
    info: dict[str, Any] = {"method": name, "n": n, "p": data.shape[1]}

    if name == "sample":
        return sample_covariance(data, demean=False) * (n / (n - lost)), info
    if name == "ls":
        return linear_shrinkage(data, demean=False), info
    if name == "nl":
        S = sample_covariance(data, demean=False)
        return nl_estimate(S, n - lost), info
    if name in ("tyler", "rls"):
        cfg = FixedPointConfig(tol=tol, max_iter=max_iter)
        Z = normalize_rows(data)
        if name == "tyler":
            return tyler_estimate(Z, cfg), info
        if rho is None:
            raise InvalidInputError("method 'rls' needs a shrinkage intensity rho")
        return robust_linear_shrinkage(Z, rho, cfg), info

    fn = rnl_estimate if name == "rnl" else rcnl_estimate
    est = fn(data, shrinker=shrinker, eps=eps, max_iter=max_iter)
    info["iterations"] = est.trace.iterations
    info["criterion"] = est.trace.final_criterion
    return est.H, info


def get_estimator(name: str, **options: Any) -> Callable[[ArrayLike], NDArray[np.float64]]:
    """Return ``Y -> estimate`` for a registered method with fixed options."""
    if name not in ESTIMATOR_NAMES:
        raise InvalidInputError(f"unknown method {name!r}; choose from {', '.join(ESTIMATOR_NAMES)}")

    def estimator(Y: ArrayLike) -> NDArray[np.float64]:
        return run_estimator(name, Y, **options)[0]

    estimator.__name__ = name
    return estimator
