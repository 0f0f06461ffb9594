"""Robust nonlinear shrinkage (R-NL) and its correlation-based variant (R-C-NL).

The data are projected onto the unit sphere, a shrunken spectrum is fixed,
and the eigenvectors are found by a majorization-minimization iteration over
the orthogonal group that minimises the angular-Gaussian negative
log-likelihood

    f(U) = (1/n) sum_t log(Z_t^T U diag(lam0)^-1 U^T Z_t).

Each step eigendecomposes the weighted scatter

    F(U) = (1/n) sum_t Z_t Z_t^T / (Z_t^T U diag(lam0)^-1 U^T Z_t)

and takes its eigenvectors in ascending order; the objective is
non-increasing along the iterates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError, NonConvergenceError, NumericalError
from .numkit import as_data_matrix, eig_sym
from .shrinkage import EigenvalueShrinker, Lambda0, floor_null_eigs, qis_shrink

__all__ = [
    "VIterationTrace",
    "RnlEstimate",
    "normalize_rows",
    "f_map",
    "f_objective",
    "surrogate_g",
    "criterion",
    "v_iteration",
    "standardize",
    "rnl_estimate",
    "rcnl_estimate",
    "equiv_distance",
]

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-10
DEFAULT_MAX_ITER = 1000


@dataclass
class VIterationTrace:
    """History of one eigenvector iteration.

    ``objective_history[0]`` is the objective at the starting point, so it
    has one more entry than ``criterion_history``.
    """

    iterations: int = 0
    criterion_history: list[float] = field(default_factory=list)
    objective_history: list[float] = field(default_factory=list)

    @property
    def final_criterion(self) -> float:
        return self.criterion_history[-1] if self.criterion_history else 0.0


@dataclass(frozen=True)
class RnlEstimate:
    """Result of :func:`rnl_estimate` or :func:`rcnl_estimate`.

    Attributes
    ----------
    H : ndarray of shape (p, p)
        Dispersion estimate (trace p unless another target was requested).
    V_hat : ndarray of shape (p, p)
        Eigenvectors returned by the iteration, columns in ascending order.
    lambda0 : Lambda0
        Spectrum held fixed during the iteration.
    lambdaR : ndarray of shape (p,)
        Final shrunken spectrum paired with ``V_hat`` by rank.
    trace : VIterationTrace
    scales : ndarray of shape (p,) or None
        Column standard deviations (R-C-NL only).
    """

    H: NDArray[np.float64]
    V_hat: NDArray[np.float64]
    lambda0: Lambda0
    lambdaR: NDArray[np.float64]
    trace: VIterationTrace
    scales: NDArray[np.float64] | None = None


def _spectrum(lam0: Lambda0 | ArrayLike) -> NDArray[np.float64]:
    if isinstance(lam0, Lambda0):
        return lam0.values
    lam = np.asarray(lam0, dtype=np.float64).ravel()
    if np.any(lam <= 0):
        raise InvalidInputError("spectrum must be strictly positive")
    return lam


def normalize_rows(Y: ArrayLike) -> NDArray[np.float64]:
    """Project every observation onto the unit sphere."""
    data = as_data_matrix(Y)
    norms = np.linalg.norm(data, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise InvalidInputError(f"row {zero[0]} is all zeros and has no direction")
    return data / norms[:, None]


def _weights(Z: NDArray[np.float64], U: NDArray[np.float64], lam: NDArray[np.float64]) -> NDArray[np.float64]:
    q = ((Z @ U) ** 2) @ (1.0 / lam)
    if np.any(q <= 0) or not np.all(np.isfinite(q)):
        raise NumericalError("non-positive quadratic form Z^T U diag(lam0)^-1 U^T Z")
    return q


def _fmap(Z: NDArray[np.float64], q: NDArray[np.float64]) -> NDArray[np.float64]:
    F = (Z / q[:, None]).T @ Z / Z.shape[0]
    return 0.5 * (F + F.T)


def f_map(Z: ArrayLike, U: ArrayLike, lam0: Lambda0 | ArrayLike) -> NDArray[np.float64]:
    """Weighted scatter ``F(U)``, including the 1/n factor."""
    Z = np.asarray(Z, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    return _fmap(Z, _weights(Z, U, _spectrum(lam0)))


def f_objective(Z: ArrayLike, U: ArrayLike, lam0: Lambda0 | ArrayLike) -> float:
    """Angular-Gaussian negative log-likelihood in ``U`` for fixed spectrum."""
    Z = np.asarray(Z, dtype=np.float64)
    q = _weights(Z, np.asarray(U, dtype=np.float64), _spectrum(lam0))
    return float(np.mean(np.log(q)))


def surrogate_g(U: ArrayLike, V_ref: ArrayLike, Z: ArrayLike, lam0: Lambda0 | ArrayLike) -> float:
    """Majorizer of the objective at ``V_ref``: log(x) <= log(a) + x/a - 1 per observation."""
    Z = np.asarray(Z, dtype=np.float64)
    lam = _spectrum(lam0)
    q_ref = _weights(Z, np.asarray(V_ref, dtype=np.float64), lam)
    q_u = _weights(Z, np.asarray(U, dtype=np.float64), lam)
    return float(np.mean(np.log(q_ref)) + np.mean(q_u / q_ref) - 1.0)


def _commutator_gap(A_prev, A_cur, inv_lam) -> float:
    return float(np.linalg.norm(A_prev * inv_lam[None, :] - inv_lam[:, None] * A_cur))


def criterion(V_prev: ArrayLike, V_cur: ArrayLike, Z: ArrayLike, lam0: Lambda0 | ArrayLike) -> float:
    """Stopping statistic ``||V_prev^T F(V_prev) V_prev L^-1 - L^-1 V_cur^T F(V_cur) V_cur||_F``.

    At a critical point it reduces to the first-order condition, which
    vanishes when ``V^T F(V) V`` commutes with ``diag(lam0)``.
    """
    Z = np.asarray(Z, dtype=np.float64)
    lam = _spectrum(lam0)
    V_prev = np.asarray(V_prev, dtype=np.float64)
    V_cur = np.asarray(V_cur, dtype=np.float64)
    A_prev = V_prev.T @ f_map(Z, V_prev, lam) @ V_prev
    A_cur = V_cur.T @ f_map(Z, V_cur, lam) @ V_cur
    return _commutator_gap(A_prev, A_cur, 1.0 / lam)


def v_iteration(
    Z: ArrayLike,
    lam0: Lambda0 | ArrayLike,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    V_init: ArrayLike | None = None,
) -> tuple[NDArray[np.float64], VIterationTrace]:
    """Minimise the angular objective over orthogonal matrices for a fixed spectrum.

    The starting point is the eigenvector matrix of the angular sample
    covariance ``(1/n) sum Z_t Z_t^T`` (unit weights), which keeps every
    iterate rotation-equivariant.  Each step replaces ``V`` by the
    ascending eigenvectors of ``F(V)``; the loop stops when
    :func:`criterion` between consecutive iterates is at most ``eps``.

    Raises
    ------
    NonConvergenceError
        After ``max_iter`` updates without meeting ``eps``; the exception
        carries the trace.
    """
    Z = np.asarray(Z, dtype=np.float64)
    lam = _spectrum(lam0)
    n, p = Z.shape
    if lam.shape[0] != p:
        raise InvalidInputError(f"spectrum has length {lam.shape[0]}, data has p={p}")
    if not eps > 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")
    inv_lam = 1.0 / lam

    if V_init is None:
        V = eig_sym(Z.T @ Z / n).vectors
    else:
        V = np.asarray(V_init, dtype=np.float64)
    q = _weights(Z, V, lam)
    F = _fmap(Z, q)
    A_prev = V.T @ F @ V
    trace = VIterationTrace(objective_history=[float(np.mean(np.log(q)))])

    for it in range(1, max_iter + 1):
        V = eig_sym(F).vectors
        q = _weights(Z, V, lam)
        F = _fmap(Z, q)
        A_cur = V.T @ F @ V
        crit = _commutator_gap(A_prev, A_cur, inv_lam)
        trace.iterations = it
        trace.criterion_history.append(crit)
        trace.objective_history.append(float(np.mean(np.log(q))))
        logger.debug("v_iteration %d: criterion=%.3e objective=%.15g", it, crit, trace.objective_history[-1])
        if crit <= eps:
            return V, trace
        A_prev = A_cur
    raise NonConvergenceError(
        f"eigenvector iteration did not converge in {max_iter} steps (criterion {crit:.3g})",
        residual=crit,
        trace=trace,
    )


def standardize(Z: ArrayLike, V_hat: ArrayLike, lam0: Lambda0 | ArrayLike) -> NDArray[np.float64]:
    """Rescale each row to ``Z_t / sqrt(Z_t^T V L^-1 V^T Z_t / p)``."""
    Z = np.asarray(Z, dtype=np.float64)
    p = Z.shape[1]
    q = _weights(Z, np.asarray(V_hat, dtype=np.float64), _spectrum(lam0))
    return Z / np.sqrt(q / p)[:, None]


def _shrunk_spectrum(S: NDArray[np.float64], n: int, shrinker: EigenvalueShrinker) -> NDArray[np.float64]:
    p = S.shape[0]
    eigs = np.linalg.eigvalsh(S)
    lam = np.sort(np.asarray(shrinker(eigs, p, n), dtype=np.float64))
    if lam.shape != (p,) or np.any(lam <= 0):
        raise InvalidInputError("shrinker must return p strictly positive values")
    return floor_null_eigs(lam, p, n).values


def rnl_estimate(
    Y: ArrayLike,
    shrinker: EigenvalueShrinker = qis_shrink,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    trace_target: str | float = "p",
) -> RnlEstimate:
    """Robust nonlinear shrinkage estimate of the dispersion matrix.

    Steps: project rows onto the sphere; shrink the spectrum of the
    angular sample covariance (divisor n, no demeaning) to get ``lambda0``,
    equalising the smallest p - n + 1 values when p >= n; run
    :func:`v_iteration`; shrink the spectrum of the standardised data's
    sample covariance to get ``lambdaR``; return
    ``p V diag(lambdaR) V^T / sum(lambdaR)``.

    Parameters
    ----------
    Y : array_like of shape (n, p)
        Observations in rows, assumed centred at zero. No row may be zero.
    shrinker : callable
        Nonlinear shrinker, QIS by default.
    eps, max_iter :
        Stopping rule for the eigenvector iteration.
    trace_target : "p", "sample" or float
        Trace of the returned matrix.  "sample" matches the trace of
        ``Y^T Y / n`` for a covariance-scale estimate.
    """
    data = as_data_matrix(Y)
    n, p = data.shape
    Z = normalize_rows(data)
    target = _resolve_target(trace_target, data)

    if p == 1:
        lam = Lambda0(np.ones(1))
        trace = VIterationTrace(objective_history=[0.0])
        return RnlEstimate(np.full((1, 1), target), np.ones((1, 1)), lam, np.ones(1), trace)

    lam0 = Lambda0(_shrunk_spectrum(Z.T @ Z / n, n, shrinker), floored=p >= n)
    V_hat, trace = v_iteration(Z, lam0, eps=eps, max_iter=max_iter)
    Zt = standardize(Z, V_hat, lam0)
    lamR = _shrunk_spectrum(Zt.T @ Zt / n, n, shrinker)
    H = (V_hat * lamR) @ V_hat.T
    H = 0.5 * (H + H.T) * (target / lamR.sum())
    return RnlEstimate(H=H, V_hat=V_hat, lambda0=lam0, lambdaR=lamR, trace=trace)


def _resolve_target(trace_target: str | float, data: NDArray[np.float64]) -> float:
    n, p = data.shape
    if trace_target == "p":
        return float(p)
    if trace_target == "sample":
        return float(np.sum(data**2) / n)
    value = float(trace_target)
    if not value > 0:
        raise InvalidInputError(f"trace target must be positive, got {trace_target}")
    return value


def rcnl_estimate(
    Y: ArrayLike,
    shrinker: EigenvalueShrinker = qis_shrink,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    trace_target: str | float = "p",
) -> RnlEstimate:
    """Correlation-based R-NL: run R-NL on variance-standardised columns, then rescale.

    Column scales are the usual sample standard deviations (ddof=1).  The
    result is invariant to positive rescaling of the columns but, unlike
    R-NL, not rotation-equivariant.
    """
    data = as_data_matrix(Y)
    sigma = np.std(data, axis=0, ddof=1)
    zero = np.flatnonzero(~(sigma > 0))
    if zero.size:
        raise InvalidInputError(f"column {zero[0]} has zero sample standard deviation")
    inner = rnl_estimate(data / sigma, shrinker=shrinker, eps=eps, max_iter=max_iter)
    H = sigma[:, None] * inner.H * sigma[None, :]
    H = 0.5 * (H + H.T)
    H *= _resolve_target(trace_target, data) / np.trace(H)
    return replace(inner, H=H, scales=sigma)


def equiv_distance(U1: ArrayLike, U2: ArrayLike, lam0: Lambda0 | ArrayLike) -> float:
    """Distance ``||U1 L U1^T - U2 L U2^T||_F`` between equivalence classes."""
    lam = _spectrum(lam0)
    U1 = np.asarray(U1, dtype=np.float64)
    U2 = np.asarray(U2, dtype=np.float64)
    return float(np.linalg.norm((U1 * lam) @ U1.T - (U2 * lam) @ U2.T))
