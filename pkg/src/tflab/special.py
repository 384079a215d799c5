"""Scalar special functions: regularized incomplete gamma, erfc, log-factorial.

``P(a, x)`` uses the usual split: power series below ``x = a + 1`` and a
Lentz continued fraction for the complement above it.  The prefactor
``x**a e**-x / Gamma(a + 1)`` is evaluated in the Loader form
``exp(-a*(t - 1 - log t)) / sqrt(2 pi a)`` (``t = x/a``) with a Stirling
correction, which keeps it accurate to a few ulps for large ``a`` where the
naive ``a log x - x - lgamma(a + 1)`` loses digits to cancellation.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ._accel import njit
from .errors import DomainError

LN_SQRT_2PI = 0.9189385332046727418
_EPS = 2.220446049250313e-16
_MAX_ITER = 100_000


class ScalarResult(NamedTuple):
    value: float
    est_abs_error: float


@njit
def _log1pmx(t):
    # log(1 + t) - t, accurate near t = 0
    if abs(t) > 0.5:
        return math.log1p(t) - t
    u = t / (2.0 + t)
    u2 = u * u
    acc = 0.0
    pw = u2
    k = 1
    while True:
        term = pw / (2 * k + 1)
        acc += term
        if term < 1e-17 * acc or k > 60:
            break
        pw *= u2
        k += 1
    return -t * t / (2.0 + t) + 2.0 * u * acc


@njit
def _stirlerr(a):
    # lgamma(a + 1) - [(a + 1/2) log a - a + log sqrt(2 pi)]
    if a < 16.0:
        return math.lgamma(a + 1.0) - (a + 0.5) * math.log(a) + a - LN_SQRT_2PI
    ia = 1.0 / a
    ia2 = ia * ia
    return ia * (
        1.0 / 12.0
        - ia2
        * (1.0 / 360.0 - ia2 * (1.0 / 1260.0 - ia2 * (1.0 / 1680.0 - ia2 / 1188.0)))
    )


@njit
def _log_prefactor(a, x):
    # log(x**a * exp(-x) / Gamma(a + 1)) for a > 0, x > 0
    if a < 1.0:
        return a * math.log(x) - x - math.lgamma(a + 1.0)
    if x < 0.5 * a:
        # x / a - 1 may round to -1; no cancellation in this form for x << a
        core = a * (math.log(x) - math.log(a)) + (a - x)
    else:
        core = a * _log1pmx(x / a - 1.0)
    return (
        core
        - 0.5 * math.log(2.0 * math.pi * a)
        - _stirlerr(a)
    )


@njit
def _gamma_pq(a, x):
    """Return ``(P(a, x), Q(a, x), n_terms)``; arguments assumed valid."""
    if x == 0.0:
        return 0.0, 1.0, 0
    if math.isinf(x):
        return 1.0, 0.0, 0
    lpre = _log_prefactor(a, x)
    if x < a + 1.0:
        term = 1.0
        total = 1.0
        n = 0
        while n < _MAX_ITER:
            n += 1
            term *= x / (a + n)
            total += term
            if term < total * 1e-17:
                break
        p = math.exp(lpre + math.log(total))
        if p > 1.0:
            p = 1.0
        return p, 1.0 - p, n
    # continued fraction for Q (modified Lentz)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    n = 0
    while n < _MAX_ITER:
        n += 1
        an = -n * (n - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    # x**a e**-x / Gamma(a) = a * prefactor
    q = math.exp(lpre + math.log(a)) * h
    if q > 1.0:
        q = 1.0
    return 1.0 - q, q, n


def _check_gamma_args(a, x):
    if not a > 0.0 or not math.isfinite(a):
        raise DomainError(f"incomplete gamma needs a > 0, got a={a!r}")
    if not x >= 0.0:
        raise DomainError(f"incomplete gamma needs x >= 0, got x={x!r}")


def reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x) = gamma(a, x) / Gamma(a)``."""
    a = float(a)
    x = float(x)
    _check_gamma_args(a, x)
    return _gamma_pq(a, x)[0]


def reg_upper_gamma(a: float, x: float) -> float:
    """``Q(a, x) = 1 - P(a, x)``, computed directly where it is the small side."""
    a = float(a)
    x = float(x)
    _check_gamma_args(a, x)
    return _gamma_pq(a, x)[1]


def reg_lower_gamma_with_error(a: float, x: float) -> ScalarResult:
    """``P(a, x)`` with a rounding-error estimate proportional to the work done."""
    a = float(a)
    x = float(x)
    _check_gamma_args(a, x)
    p, q, n = _gamma_pq(a, x)
    # prefactor exponent carries ~|log| * eps relative error; the loop adds ~n eps
    scale = max(1.0, abs(a * math.log(max(x, 1e-300))) * 1e-3)
    err = (n + 8) * _EPS * max(p, 1e-300) * scale
    return ScalarResult(p, min(err, 1.0))


@njit
def _gamma_pq_vec(a, x, out_p, out_q):
    for i in range(a.shape[0]):
        p, q, _ = _gamma_pq(a[i], x[i])
        out_p[i] = p
        out_q[i] = q


def reg_gamma_pq_array(a, x) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``(P(a, x), Q(a, x))`` over broadcast arrays."""
    a_arr, x_arr = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(x, dtype=float)
    )
    if np.any(~(a_arr > 0)) or np.any(~(x_arr >= 0)):
        raise DomainError("incomplete gamma needs a > 0 and x >= 0")
    flat_a = np.ascontiguousarray(a_arr.ravel())
    flat_x = np.ascontiguousarray(x_arr.ravel())
    p = np.empty_like(flat_a)
    q = np.empty_like(flat_a)
    _gamma_pq_vec(flat_a, flat_x, p, q)
    return p.reshape(a_arr.shape), q.reshape(a_arr.shape)


def erfc(x: float) -> float:
    """Complementary error function (libm ``erfc``)."""
    return math.erfc(float(x))


_LOG_FACT_TABLE = np.array([math.log(math.factorial(n)) for n in range(171)])


def log_factorial(n: int) -> float:
    """``ln(n!)``: exact table below 171, ``lgamma`` above."""
    if int(n) != n:
        raise DomainError(f"log_factorial needs an integer, got {n!r}")
    n = int(n)
    if n < 0:
        raise DomainError(f"log_factorial needs n >= 0, got {n}")
    if n < 171:
        return float(_LOG_FACT_TABLE[n])
    return math.lgamma(n + 1.0)


def log_factorial_array(n) -> np.ndarray:
    n = np.asarray(n)
    if np.any(n < 0):
        raise DomainError("log_factorial needs n >= 0")
    out = np.empty(n.shape, dtype=float)
    small = n < 171
    out[small] = _LOG_FACT_TABLE[n[small].astype(np.int64)]
    big = ~small
    if np.any(big):
        out[big] = [math.lgamma(v + 1.0) for v in n[big].ravel()]
    return out


def log_poisson_tail(k: int, x: float) -> float:
    """``log P(k + 1, x)`` for integer ``k >= 0`` via the Poisson sum.

    ``P(k+1, x) = sum_{j > k} e^{-x} x^j / j!``.  Terms are summed in log
    space with ``math.fsum``, so the result stays meaningful far below the
    double-precision underflow of ``P`` itself.
    """
    k = int(k)
    x = float(x)
    if k < 0 or x < 0:
        raise DomainError("log_poisson_tail needs k >= 0 and x >= 0")
    if x == 0.0:
        return -math.inf
    logx = math.log(x)

    def lterm(j):
        return -x + j * logx - log_factorial(j)

    if k + 1 >= x:
        # terms decrease monotonically from j = k + 1
        first = lterm(k + 1)
        rel = [0.0]
        j = k + 2
        while True:
            r = lterm(j) - first
            rel.append(r)
            if r < -40.0:
                break
            j += 1
        return first + math.log(math.fsum(math.exp(v) for v in rel))
    # tail is not small: P = 1 - sum_{j <= k} terms
    heads = [lterm(j) for j in range(k + 1)]
    top = max(heads)
    head = math.exp(top) * math.fsum(math.exp(v - top) for v in heads)
    if head < 0.5:
        return math.log1p(-head)
    # head close to 1: use the continued-fraction complement instead
    return math.log(reg_lower_gamma(k + 1, x))


def log_poisson_head(k: int, x: float) -> float:
    """``log Q(k + 1, x) = log sum_{j <= k} e^{-x} x^j / j!`` (the complement of :func:`log_poisson_tail`)."""
    k = int(k)
    x = float(x)
    if k < 0 or x < 0:
        raise DomainError("log_poisson_head needs k >= 0 and x >= 0")
    if x == 0.0:
        return 0.0
    logx = math.log(x)
    terms = [-x + j * logx - log_factorial(j) for j in range(k + 1)]
    top = max(terms)
    head = math.exp(top) * math.fsum(math.exp(v - top) for v in terms)
    if head < 0.5:
        return top + math.log(math.fsum(math.exp(v - top) for v in terms))
    # head close to 1: the tail is the small side
    return math.log1p(-reg_lower_gamma(k + 1, x))
