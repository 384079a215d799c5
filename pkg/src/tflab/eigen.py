"""Dense symmetric / Hermitian eigensolver.

Householder reduction to tridiagonal form followed by the implicit QL
iteration (the classic EISPACK ``tred2``/``tql2`` pair).  Hermitian input is
handled through the real symmetric embedding ``[[A, -B], [B, A]]`` of
``A + iB``, whose spectrum is that of the Hermitian matrix with every
eigenvalue doubled.

Both a numba kernel and a vectorised numpy version are provided; the
``TFLAB_NO_NUMBA`` flag selects between them.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import njit, pick
from .errors import EigenConvergenceError

_EPS = 2.0**-52
MAX_QL_ITER = 60


@njit
def _tred2_numba(V, d, e):
    n = V.shape[0]
    for j in range(n):
        d[j] = V[n - 1, j]
    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale += abs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
                V[j, i] = 0.0
        else:
            for k in range(i):
                d[k] /= scale
                h += d[k] * d[k]
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                V[j, i] = f
                g = e[j] + V[j, j] * f
                for k in range(j + 1, i):
                    g += V[k, j] * d[k]
                    e[k] += V[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] /= h
                f += e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] -= hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    V[k, j] -= f * e[k] + g * d[k]
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
        d[i] = h
    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = V[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g += V[k, i + 1] * V[k, j]
                for k in range(i + 1):
                    V[k, j] -= g * d[k]
        for k in range(i + 1):
            V[k, i + 1] = 0.0
    for j in range(n):
        d[j] = V[n - 1, j]
        V[n - 1, j] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0


@njit
def _tql2_numba(V, d, e, max_iter):
    n = V.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0**-52
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n:
            if abs(e[m]) <= eps * tst1:
                break
            m += 1
        if m == n:
            m = n - 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_iter:
                    return l
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        h = V[k, i + 1]
                        V[k, i + 1] = s * V[k, i] + c * h
                        V[k, i] = c * V[k, i] - s * h
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if not abs(e[l]) > eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return -1


def _eigh_numba(A):
    V = np.array(A, dtype=np.float64, order="C")
    n = V.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    _tred2_numba(V, d, e)
    bad = _tql2_numba(V, d, e, MAX_QL_ITER)
    return d, V, bad


def _tred2_numpy(V, d, e):
    n = V.shape[0]
    d[:] = V[n - 1, :]
    for i in range(n - 1, 0, -1):
        scale = np.abs(d[:i]).sum()
        h = 0.0
        if scale == 0.0:
            e[i] = d[i - 1]
            d[:i] = V[i - 1, :i]
            V[i, :i] = 0.0
            V[:i, i] = 0.0
        else:
            d[:i] /= scale
            h = float(d[:i] @ d[:i])
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            V[:i, i] = d[:i]
            low = np.tril(V[:i, :i])
            sym = low + low.T - np.diag(np.diag(low))
            e[:i] = sym @ d[:i]
            e[:i] /= h
            f = float(e[:i] @ d[:i])
            hh = f / (h + h)
            e[:i] -= hh * d[:i]
            upd = np.outer(e[:i], d[:i]) + np.outer(d[:i], e[:i])
            V[:i, :i] -= np.tril(upd)
            d[:i] = V[i - 1, :i]
            V[i, :i] = 0.0
        d[i] = h
    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            d[: i + 1] = V[: i + 1, i + 1] / h
            g = V[: i + 1, i + 1] @ V[: i + 1, : i + 1]
            V[: i + 1, : i + 1] -= np.outer(d[: i + 1], g)
        V[: i + 1, i + 1] = 0.0
    d[:] = V[n - 1, :]
    V[n - 1, :] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0


def _tql2_numpy(V, d, e, max_iter):
    n = V.shape[0]
    e[:-1] = e[1:]
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1 and abs(e[m]) > _EPS * tst1:
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_iter:
                    return l
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                d[l + 2 :] -= h
                f += h
                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    col_i = V[:, i].copy()
                    col_n = V[:, i + 1]
                    V[:, i] = c * col_i - s * col_n
                    V[:, i + 1] = s * col_i + c * col_n
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if not abs(e[l]) > _EPS * tst1:
                    break
        d[l] += f
        e[l] = 0.0
    return -1


def _eigh_numpy(A):
    V = np.array(A, dtype=np.float64, order="C")
    n = V.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    _tred2_numpy(V, d, e)
    bad = _tql2_numpy(V, d, e, MAX_QL_ITER)
    return d, V, bad


def symmetric_eigh(A, backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a real symmetric matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("symmetric_eigh needs a square matrix")
    n = A.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    if n == 1:
        return A[0].copy(), np.ones((1, 1))
    A = 0.5 * (A + A.T)
    if backend is None:
        fn = pick(_eigh_numba, _eigh_numpy)
    else:
        fn = _eigh_numba if backend == "numba" else _eigh_numpy
    d, V, bad = fn(A)
    if bad >= 0:
        raise EigenConvergenceError(
            f"implicit QL did not converge for eigenvalue {bad} within {MAX_QL_ITER} iterations"
        )
    order = np.argsort(d, kind="stable")
    return d[order], V[:, order]


def hermitian_eigh(M, backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a complex Hermitian matrix via its real embedding.

    Returns eigenvalues in ascending order and complex eigenvectors as columns.
    """
    M = np.asarray(M)
    n = M.shape[0]
    if not np.iscomplexobj(M) or not np.any(M.imag):
        return symmetric_eigh(M.real, backend)
    A = M.real
    B = M.imag
    big = np.block([[A, -B], [B, A]])
    w2, V = symmetric_eigh(big, backend)
    # each eigenvalue appears twice; every embedded vector maps to a complex eigenvector
    cand = (V[:n] + 1j * V[n:]) * math.sqrt(2.0)
    w = w2[0::2]
    vec = np.empty((n, n), dtype=complex)
    tol = 1e-10 * max(float(np.max(np.abs(w2))), 1e-300)
    i = 0
    while i < 2 * n:
        j = i + 2
        while j < 2 * n and w2[j] - w2[j - 1] <= tol:
            j += 2
        # a cluster of 2m embedded vectors spans an m-dimensional complex eigenspace
        m = (j - i) // 2
        u, _, _ = np.linalg.svd(cand[:, i:j], full_matrices=False)
        vec[:, i // 2 : i // 2 + m] = u[:, :m]
        i = j
    return w, vec
