"""Tyler's fixed-point scatter estimator and its linearly regularised variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .errors import InvalidInputError, NonConvergenceError, NumericalError, UnsupportedRegimeError
from .numkit import as_data_matrix, trace_normalize

__all__ = [
    "FixedPointConfig",
    "tyler_step",
    "tyler_residual",
    "tyler_estimate",
    "robust_linear_shrinkage",
]

UNIT_NORM_TOL = 1e-10


@dataclass(frozen=True)
class FixedPointConfig:
    """Stopping rule for the scatter fixed-point iterations.

    The loop stops once ``||H_k - T(H_k)||_F <= tol * p``.
    """

    tol: float = 1e-8
    max_iter: int = 1000

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise InvalidInputError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidInputError(f"max_iter must be >= 1, got {self.max_iter}")


def _check_unit_rows(Z: ArrayLike) -> NDArray[np.float64]:
    data = as_data_matrix(Z)
    norms = np.linalg.norm(data, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
    if bad.size:
        raise InvalidInputError(f"row {bad[0]} is not unit norm (norm {norms[bad[0]]:.6g})")
    return data


def _quad_forms(Z: NDArray[np.float64], H: NDArray[np.float64]) -> NDArray[np.float64]:
    # Z_t^T H^{-1} Z_t for every row, through a Cholesky solve
    try:
        chol = linalg.cholesky(H, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError("scatter iterate lost positive definiteness") from exc
    W = linalg.solve_triangular(chol, Z.T, lower=True)
    q = np.sum(W**2, axis=0)
    if np.any(q <= 0) or not np.all(np.isfinite(q)):
        raise NumericalError("non-positive quadratic form in scatter update")
    return q


def tyler_step(Z: NDArray[np.float64], H: NDArray[np.float64], rho: float = 0.0) -> NDArray[np.float64]:
    """One trace-normalised update ``H -> (1-rho) (p/n) sum Z Z^T / (Z^T H^-1 Z) + rho I``."""
    n, p = Z.shape
    q = _quad_forms(Z, H)
    M = (p / n) * (Z / q[:, None]).T @ Z
    M = 0.5 * (M + M.T)
    if rho > 0:
        M = (1.0 - rho) * M + rho * np.eye(p)
    return trace_normalize(M, p)


def tyler_residual(Z: ArrayLike, H: ArrayLike, rho: float = 0.0) -> float:
    """Frobenius distance between ``H`` and its own fixed-point update."""
    data = np.asarray(Z, dtype=np.float64)
    mat = np.asarray(H, dtype=np.float64)
    return float(np.linalg.norm(mat - tyler_step(data, mat, rho)))


def _iterate(Z: NDArray[np.float64], rho: float, cfg: FixedPointConfig) -> NDArray[np.float64]:
    p = Z.shape[1]
    H = np.eye(p)
    resid = np.inf
    for _ in range(cfg.max_iter):
        H_next = tyler_step(Z, H, rho)
        resid = float(np.linalg.norm(H_next - H))
        if resid <= cfg.tol * p:
            return H
        H = H_next
    raise NonConvergenceError(
        f"scatter iteration did not converge in {cfg.max_iter} steps (residual {resid:.3g})",
        residual=resid,
    )


def tyler_estimate(Z: ArrayLike, cfg: FixedPointConfig | None = None) -> NDArray[np.float64]:
    """Tyler's M-estimator of scatter for unit-norm rows, trace-normalised to p.

    Requires p < n.  Starts from the identity and returns the first iterate
    whose fixed-point residual is at most ``cfg.tol * p``.
    """
    cfg = cfg or FixedPointConfig()
    data = _check_unit_rows(Z)
    n, p = data.shape
    if p >= n:
        raise UnsupportedRegimeError(f"Tyler's estimator needs p < n, got p={p}, n={n}")
    return _iterate(data, 0.0, cfg)


def robust_linear_shrinkage(Z: ArrayLike, rho: float, cfg: FixedPointConfig | None = None) -> NDArray[np.float64]:
    """Tyler iteration shrunk towards the identity by ``rho`` at every step.

    Valid for any (p, n) since every iterate is positive definite for rho > 0.
    """
    if not 0.0 < rho <= 1.0:
        raise InvalidInputError(f"rho must lie in (0, 1], got {rho}")
    cfg = cfg or FixedPointConfig()
    data = _check_unit_rows(Z)
    return _iterate(data, float(rho), cfg)
