"""Sample covariance, linear shrinkage and nonlinear eigenvalue shrinkage.

A nonlinear shrinker is any callable ``shrinker(eigenvalues, p, n)`` that
maps ascending sample eigenvalues to strictly positive shrunken
eigenvalues, entry j belonging to the j-th sample eigenvector.  Callers
that need an ordered spectrum sort the output themselves.
Quadratic-inverse shrinkage (QIS) is the default; two stub
shrinkers are shipped for tests that must not depend on QIS.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateInputError, InvalidInputError
from .numkit import as_data_matrix, as_sym_matrix, eig_sym

__all__ = [
    "EigenvalueShrinker",
    "Lambda0",
    "sample_covariance",
    "ledoit_wolf_intensity",
    "linear_shrinkage",
    "qis_shrink",
    "identity_shrinker",
    "constant_shrinker",
    "nl_estimate",
    "floor_null_eigs",
]

STUB_FLOOR = 1e-12


class EigenvalueShrinker(Protocol):
    def __call__(self, eigs: NDArray[np.float64], p: int, n: int) -> NDArray[np.float64]: ...


@dataclass(frozen=True)
class Lambda0:
    """Strictly positive ascending spectrum held fixed during the eigenvector iteration.

    ``floored`` records whether the p >= n tie-flooring was applied.
    """

    values: NDArray[np.float64]
    floored: bool = False

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise InvalidInputError("Lambda0 must be a non-empty vector")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise InvalidInputError("Lambda0 entries must be finite and strictly positive")
        if np.any(np.diff(vals) < 0):
            raise InvalidInputError("Lambda0 must be sorted ascending")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def p(self) -> int:
        return self.values.shape[0]


def sample_covariance(X: ArrayLike, demean: bool = False) -> NDArray[np.float64]:
    """Sample second-moment matrix of the rows of ``X``.

    With ``demean=False`` the data are taken as mean zero and the divisor
    is n; with ``demean=True`` the column means are removed and the
    divisor is n - 1.
    """
    data = as_data_matrix(X)
    n = data.shape[0]
    if demean:
        data = data - data.mean(axis=0)
        S = data.T @ data / (n - 1)
    else:
        S = data.T @ data / n
    return 0.5 * (S + S.T)


def ledoit_wolf_intensity(X: ArrayLike, demean: bool = True) -> tuple[float, NDArray[np.float64]]:
    """Return the Ledoit-Wolf (2004) shrinkage intensity and the matching sample matrix.

    The sample matrix uses divisor n (after optional demeaning), as in the
    original estimator.  Norms are the p-normalised Frobenius norms
    ``||A||^2 = tr(A A^T) / p``.
    """
    data = as_data_matrix(X)
    n, p = data.shape
    if demean:
        data = data - data.mean(axis=0)
    S = data.T @ data / n
    S = 0.5 * (S + S.T)
    mu = np.trace(S) / p
    if not mu > 0:
        raise DegenerateInputError("all-zero data: sample covariance has zero trace")
    d2 = np.sum((S - mu * np.eye(p)) ** 2) / p
    if d2 <= 0:
        return 0.0, S
    row_sq = np.sum(data**2, axis=1)
    b2_bar = (np.sum(row_sq**2) - n * np.sum(S**2)) / (n**2 * p)
    b2 = min(max(b2_bar, 0.0), d2)
    return float(b2 / d2), S


def linear_shrinkage(X: ArrayLike, demean: bool = True) -> NDArray[np.float64]:
    """Ledoit-Wolf linear shrinkage towards a scaled identity."""
    rho, S = ledoit_wolf_intensity(X, demean=demean)
    p = S.shape[0]
    return (1.0 - rho) * S + rho * (np.trace(S) / p) * np.eye(p)


def _check_spectrum(eigs: ArrayLike, p: int) -> NDArray[np.float64]:
    lam = np.asarray(eigs, dtype=np.float64).ravel()
    if lam.shape[0] != p:
        raise InvalidInputError(f"expected {p} eigenvalues, got {lam.shape[0]}")
    if not np.all(np.isfinite(lam)):
        raise InvalidInputError("eigenvalues must be finite")
    if np.any(lam < -1e-12):
        raise InvalidInputError(f"negative eigenvalue {lam.min():.3g}")
    return np.sort(np.clip(lam, 0.0, None))


def qis_shrink(eigs: ArrayLike, p: int, n: int) -> NDArray[np.float64]:
    """Quadratic-inverse shrinkage of a sample spectrum.

    Parameters
    ----------
    eigs : array_like of shape (p,)
        Sample eigenvalues (ascending, non-negative).
    p : int
        Dimension.
    n : int
        Effective sample size (n for mean-zero data, n - 1 after demeaning).

    Returns
    -------
    ndarray of shape (p,)
        Shrunken eigenvalues, strictly positive, with the same sum as the
        input.  Entry j is paired with the j-th smallest sample eigenvalue,
        so when p > n the first p - n entries (the null space) share one
        value even where that value exceeds some non-null ones.
    """
    if n < 1:
        raise InvalidInputError(f"effective sample size must be >= 1, got {n}")
    lam = _check_spectrum(eigs, p)
    total = lam.sum()
    if not total > 0:
        raise DegenerateInputError("all sample eigenvalues are zero")

    c = p / n
    h = min(c**2, 1.0 / c**2) ** 0.35 / p**0.35
    k = min(p, n)
    nonnull = lam[p - k :]
    # numerically null eigenvalues inside the non-null block
    nonnull = np.maximum(nonnull, nonnull[-1] * np.finfo(np.float64).eps * p)
    inv = 1.0 / nonnull

    diff = inv[:, None] - inv[None, :]
    denom = diff**2 + h**2 * inv[:, None] ** 2
    theta = np.mean(inv[:, None] * diff / denom, axis=0)
    htheta = np.mean(h * inv[:, None] ** 2 / denom, axis=0)
    atheta2 = theta**2 + htheta**2

    if p <= n:
        delta = 1.0 / ((1 - c) ** 2 * inv + 2 * c * (1 - c) * inv * theta + c**2 * inv * atheta2)
    else:
        delta0 = 1.0 / ((c - 1) * np.mean(inv))
        delta = np.concatenate([np.full(p - n, delta0), 1.0 / (inv * atheta2)])
    return delta * (total / delta.sum())


def identity_shrinker(eigs: ArrayLike, p: int, n: int) -> NDArray[np.float64]:
    """Stub shrinker: returns the sample eigenvalues, floored at 1e-12."""
    lam = _check_spectrum(eigs, p)
    return np.maximum(lam, STUB_FLOOR)


def constant_shrinker(eigs: ArrayLike, p: int, n: int) -> NDArray[np.float64]:
    """Stub shrinker: replaces every eigenvalue by their mean."""
    lam = _check_spectrum(eigs, p)
    return np.full(p, max(lam.mean(), STUB_FLOOR))


def nl_estimate(A: ArrayLike, n: int, shrinker: EigenvalueShrinker = qis_shrink) -> NDArray[np.float64]:
    """Keep the eigenvectors of ``A`` and replace its eigenvalues by ``shrinker``'s output.

    The j-th shrunken value goes with the eigenvector of the j-th smallest
    eigenvalue of ``A``.
    """
    es = eig_sym(as_sym_matrix(A))
    delta = np.asarray(shrinker(es.values, es.p, n), dtype=np.float64)
    if delta.shape != es.values.shape or np.any(delta <= 0):
        raise InvalidInputError("shrinker must return p strictly positive values")
    return es.reconstruct(delta)


def _tie_representative(block: NDArray[np.float64]) -> float:
    vals, counts = np.unique(block, return_counts=True)
    top = counts.max()
    if top == 1:
        return float(np.median(block))
    return float(vals[counts == top][0])


def floor_null_eigs(values: ArrayLike, p: int, n: int) -> Lambda0:
    """Make the smallest p - n + 1 entries equal when p >= n.

    They are all replaced by the value with the highest multiplicity
    among them (smallest such value on ties, their median when all are
    distinct).  For p < n the spectrum is returned unchanged.
    """
    lam = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if lam.shape[0] != p:
        raise InvalidInputError(f"expected {p} values, got {lam.shape[0]}")
    if p < n:
        return Lambda0(lam, floored=False)
    k = p - n + 1
    lam = lam.copy()
    lam[:k] = _tie_representative(lam[:k])
    return Lambda0(np.sort(lam), floored=True)
