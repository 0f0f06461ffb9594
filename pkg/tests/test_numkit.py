import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rnlshrink.errors import InvalidInputError
from rnlshrink.numkit import (
    as_data_matrix,
    as_spd_matrix,
    as_sym_matrix,
    eig_sym,
    random_rotation,
    read_matrix,
    trace_normalize,
    write_matrix,
)


def _check_eigensystem(A, es):
    p = A.shape[0]
    V = es.vectors
    assert np.linalg.norm(V.T @ V - np.eye(p)) <= 1e-10 * p
    assert np.all(np.diff(es.values) >= 0)
    assert np.linalg.norm(es.reconstruct() - A) <= 1e-8 * max(np.linalg.norm(A), 1e-300)
    idx = np.argmax(np.abs(V), axis=0)
    assert np.all(V[idx, np.arange(p)] > 0)


def test_eig_identity():
    es = eig_sym(np.eye(3))
    np.testing.assert_allclose(es.values, [1, 1, 1])
    _check_eigensystem(np.eye(3), es)


def test_eig_diagonal_is_positive_permutation():
    es = eig_sym(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(es.values, [1, 2, 3])
    np.testing.assert_allclose(es.vectors, np.eye(3)[:, [1, 2, 0]], atol=1e-15)


def test_eig_random_reconstruction():
    rng = np.random.default_rng(5)
    B = rng.standard_normal((5, 5))
    A = B + B.T
    _check_eigensystem(A, eig_sym(A))


def test_eig_rejects_asymmetric():
    with pytest.raises(InvalidInputError):
        eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_eig_deterministic():
    rng = np.random.default_rng(1)
    B = rng.standard_normal((6, 6))
    A = B @ B.T
    e1, e2 = eig_sym(A), eig_sym(A.copy())
    assert np.array_equal(e1.vectors, e2.vectors)


sym_matrices = st.integers(2, 8).flatmap(
    lambda p: arrays(np.float64, (p, p), elements=st.floats(-10, 10, allow_nan=False, width=64))
).map(lambda B: B + B.T)


@settings(max_examples=60, deadline=None)
@given(sym_matrices, st.integers(0, 2**31 - 1))
def test_eig_properties(A, seed):
    es = eig_sym(A)
    _check_eigensystem(A, es)
    # re-decomposition of the reconstruction keeps the spectrum
    np.testing.assert_allclose(eig_sym(es.reconstruct()).values, es.values, atol=1e-8 * (1 + np.abs(A).max()))
    Q = random_rotation(A.shape[0], seed)
    np.testing.assert_allclose(eig_sym(Q @ A @ Q.T).values, es.values, atol=1e-8 * (1 + np.abs(A).max()))


def test_trace_normalize_examples():
    np.testing.assert_allclose(trace_normalize(2 * np.eye(4), 4), np.eye(4))
    A = np.array([[2.0, 0.3], [0.3, 1.0]])
    np.testing.assert_allclose(trace_normalize(A, np.trace(A)), A, rtol=1e-15)
    np.testing.assert_allclose(trace_normalize(np.diag([1.0, 3.0]), 2), np.diag([0.5, 1.5]))


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(0.1, 100), st.integers(0, 1000))
def test_trace_normalize_scale_invariant(c, target, seed):
    B = np.random.default_rng(seed).standard_normal((4, 4))
    A = B @ B.T + np.eye(4)
    out = trace_normalize(A, target)
    assert abs(np.trace(out) - target) <= 1e-12 * target
    np.testing.assert_allclose(trace_normalize(c * A, target), out, rtol=1e-12)


def test_trace_normalize_rejects_nonpositive_trace():
    with pytest.raises(InvalidInputError):
        trace_normalize(np.zeros((2, 2)), 1.0)
    with pytest.raises(InvalidInputError):
        trace_normalize(-np.eye(2), 1.0)


def test_random_rotation_contract():
    R = random_rotation(2, 3)
    np.testing.assert_allclose(R.T @ R, np.eye(2), atol=1e-10)
    assert np.linalg.det(R) == pytest.approx(1.0)
    assert np.array_equal(random_rotation(5, 11), random_rotation(5, 11))
    with pytest.raises(InvalidInputError):
        random_rotation(1, 0)


def test_random_rotation_entries_centred():
    rng = np.random.default_rng(2024)
    draws = np.array([random_rotation(10, rng) for _ in range(1000)])
    mean = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / np.sqrt(draws.shape[0])
    assert np.all(np.abs(mean) <= 5 * se)
    assert np.allclose([np.linalg.det(R) for R in draws[:50]], 1.0)


def test_validators():
    with pytest.raises(InvalidInputError):
        as_data_matrix(np.ones((1, 3)))
    with pytest.raises(InvalidInputError):
        as_data_matrix(np.array([[1.0, np.nan], [0.0, 1.0]]))
    assert as_data_matrix([1.0, 2.0, 3.0]).shape == (3, 1)
    with pytest.raises(InvalidInputError):
        as_sym_matrix(np.ones((2, 3)))
    with pytest.raises(InvalidInputError):
        as_spd_matrix(np.diag([1.0, 0.0]))
    # tiny asymmetry relative to the scale is tolerated and removed
    A = np.array([[1.0, 0.5], [0.5 + 1e-14, 1.0]])
    S = as_sym_matrix(A)
    assert np.array_equal(S, S.T)


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_matrix_roundtrip(tmp_path, suffix):
    A = np.random.default_rng(0).standard_normal((4, 3))
    path = tmp_path / f"m{suffix}"
    write_matrix(path, A)
    assert np.array_equal(read_matrix(path), A)
