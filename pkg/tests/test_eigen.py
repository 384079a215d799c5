from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tflab.eigen import hermitian_eigh, symmetric_eigh

BACKENDS = ["numba", "numpy"]


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("n", [1, 2, 5, 64, 150])
def test_symmetric_against_lapack(backend, n):
    rng = np.random.default_rng(n)
    A = rng.standard_normal((n, n))
    A = A + A.T
    w, V = symmetric_eigh(A, backend)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-12 * max(1, np.abs(w).max()))
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(A @ V, V * w, atol=1e-11 * max(1, np.abs(w).max()))


@pytest.mark.parametrize("backend", BACKENDS)
def test_diagonal_input(backend):
    d = np.array([0.3, -1.0, 2.0, 0.3, 5.0])
    w, V = symmetric_eigh(np.diag(d), backend)
    np.testing.assert_array_equal(w, np.sort(d))
    np.testing.assert_allclose(np.abs(V.T @ V), np.eye(5), atol=1e-15)


@pytest.mark.parametrize("backend", BACKENDS)
def test_hermitian_and_unitary_invariance(backend):
    rng = np.random.default_rng(5)
    n = 40
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    M = A @ A.conj().T / n
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    w1, V = hermitian_eigh(M, backend)
    w2, _ = hermitian_eigh(Q @ M @ Q.conj().T, backend)
    np.testing.assert_allclose(w1, np.linalg.eigvalsh(M), atol=1e-12)
    np.testing.assert_allclose(w1, w2, atol=1e-8)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(M @ V, V * w1, atol=1e-11)


def test_degenerate_hermitian_vectors_orthonormal():
    rng = np.random.default_rng(6)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    M = Q @ np.diag([1, 1, 2, 3, 3, 3.0]) @ Q.conj().T
    w, V = hermitian_eigh(M)
    np.testing.assert_allclose(w, [1, 1, 2, 3, 3, 3], atol=1e-13)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(6), atol=1e-12)


def test_backends_agree():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((80, 80))
    A = A + A.T
    np.testing.assert_allclose(symmetric_eigh(A, "numba")[0], symmetric_eigh(A, "numpy")[0], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (7, 7), elements=st.floats(-10, 10)))
def test_property_trace_and_frobenius(A):
    A = A + A.T
    w, _ = symmetric_eigh(A)
    assert w.sum() == pytest.approx(np.trace(A), abs=1e-10 * max(1, np.abs(A).max()))
    assert np.sum(w * w) == pytest.approx(np.sum(A * A), rel=1e-10, abs=1e-10)
    assert np.all(np.diff(w) >= 0)
