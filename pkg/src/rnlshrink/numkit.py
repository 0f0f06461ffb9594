"""Matrix validation, the symmetric eigendecomposition contract, and matrix I/O.

Every estimator in the package goes through these helpers so that the
conventions are identical everywhere: eigenvalues ascending, eigenvectors
with a deterministic sign (largest-magnitude entry positive), observations
stored as rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DecompositionError, InvalidInputError

__all__ = [
    "EigenSystem",
    "as_data_matrix",
    "as_sym_matrix",
    "as_spd_matrix",
    "eig_sym",
    "trace_normalize",
    "random_rotation",
    "read_matrix",
    "write_matrix",
]

SYMMETRY_RTOL = 1e-12


def as_data_matrix(X: ArrayLike, *, min_rows: int = 2) -> NDArray[np.float64]:
    """Validate an n x p observation matrix (rows are observations)."""
    data = np.asarray(X, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise InvalidInputError(f"data must be two-dimensional, got ndim={data.ndim}")
    n, p = data.shape
    if n < min_rows:
        raise InvalidInputError(f"need at least {min_rows} observations, got n={n}")
    if p < 1:
        raise InvalidInputError("data must have at least one column")
    if not np.all(np.isfinite(data)):
        raise InvalidInputError("data contains non-finite entries")
    return data


def as_sym_matrix(A: ArrayLike) -> NDArray[np.float64]:
    """Validate a square symmetric matrix and return its exactly symmetric copy."""
    mat = np.asarray(A, dtype=np.float64)
    if mat.ndim == 0:
        mat = mat.reshape(1, 1)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise InvalidInputError("matrix contains non-finite entries")
    scale = float(np.max(np.abs(mat))) if mat.size else 0.0
    asym = float(np.max(np.abs(mat - mat.T))) if mat.size else 0.0
    if asym > SYMMETRY_RTOL * scale:
        raise InvalidInputError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return 0.5 * (mat + mat.T)


def as_spd_matrix(A: ArrayLike) -> NDArray[np.float64]:
    """Validate a symmetric positive-definite matrix."""
    mat = as_sym_matrix(A)
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError("matrix is not positive definite") from exc
    return mat


@dataclass(frozen=True)
class EigenSystem:
    """Orthonormal eigenvectors (columns) with ascending eigenvalues."""

    vectors: NDArray[np.float64]
    values: NDArray[np.float64]

    @property
    def p(self) -> int:
        return self.values.shape[0]

    def reconstruct(self, values: ArrayLike | None = None) -> NDArray[np.float64]:
        """Return ``V diag(values) V^T``; defaults to the stored eigenvalues."""
        lam = self.values if values is None else np.asarray(values, dtype=np.float64)
        mat = (self.vectors * lam) @ self.vectors.T
        return 0.5 * (mat + mat.T)


def _fix_signs(vectors: NDArray[np.float64]) -> NDArray[np.float64]:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eig_sym(A: ArrayLike) -> EigenSystem:
    """Symmetric eigendecomposition with ascending eigenvalues.

    Each eigenvector is flipped so that its largest-magnitude entry is
    positive, which makes repeated runs bit-for-bit reproducible.

    Raises
    ------
    DecompositionError
        If the LAPACK driver does not converge.
    """
    mat = as_sym_matrix(A)
    try:
        values, vectors = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigendecomposition failed: {exc}") from exc
    return EigenSystem(vectors=_fix_signs(vectors), values=values)


def trace_normalize(A: ArrayLike, target: float) -> NDArray[np.float64]:
    """Rescale ``A`` so that its trace equals ``target``."""
    mat = np.asarray(A, dtype=np.float64)
    if target <= 0:
        raise InvalidInputError(f"target trace must be positive, got {target}")
    tr = float(np.trace(mat))
    if not tr > 0:
        raise InvalidInputError(f"matrix trace must be positive, got {tr}")
    return mat * (target / tr)


def random_rotation(p: int, seed: int | np.random.Generator | None = None) -> NDArray[np.float64]:
    """Draw a Haar-distributed rotation (orthogonal, determinant +1)."""
    if p < 2:
        raise InvalidInputError(f"rotation dimension must be >= 2, got {p}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def read_matrix(path: str | Path) -> NDArray[np.float64]:
    """Read a dense matrix from CSV (no header) or a JSON array of arrays."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with path.open() as fh:
            data = json.load(fh)
        mat = np.asarray(data, dtype=np.float64)
    else:
        mat = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if mat.ndim != 2:
        raise InvalidInputError(f"{path}: expected a two-dimensional matrix")
    return mat


def write_matrix(path: str | Path, A: ArrayLike) -> None:
    """Write a dense matrix as CSV or JSON, chosen by file suffix."""
    path = Path(path)
    mat = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if path.suffix.lower() == ".json":
        with path.open("w") as fh:
            json.dump(mat.tolist(), fh)
            fh.write("\n")
    else:
        np.savetxt(path, mat, delimiter=",", fmt="%.17g")
