"""Closed-form spectra for the Gaussian window on disks and polydisks.

For ``g(t) = 2^{1/4} e^{-pi t^2}`` and ``Omega = B_R(0)`` the eigenvalues are
``lambda_k = P(k + 1, pi R^2)``, ``k = 0, 1, ...`` (regularized lower
incomplete gamma).  Deep tails are evaluated in log space, so counting at
thresholds far below double-precision underflow stays exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EmptyInputError, MemoryBudgetError
from .operator import Spectrum
from .special import log_poisson_head, log_poisson_tail, reg_gamma_pq_array

POLYDISK_CAP = 20_000_000


@dataclass(frozen=True, eq=False)
class AnalyticSpectrum:
    model: str
    R: float
    d: int
    values: np.ndarray
    k_max: int
    complements: np.ndarray | None = None

    def spectrum(self) -> Spectrum:
        return Spectrum(np.asarray(self.values, float), 0, self.values.size, 0.0, 0.0, f"analytic-{self.model}")

    def to_dict(self) -> dict:
        return {"model": self.model, "R": self.R, "d": self.d, "k_max": self.k_max}


def _check_R(R: float):
    if not (R > 0 and math.isfinite(R)):
        raise DomainError(f"radius must be positive and finite, got {R!r}")


def disk_eigenvalues(R: float, k_max: int) -> AnalyticSpectrum:
    """``lambda_k = P(k+1, pi R^2)`` for ``k = 0..k_max`` with complements ``Q``."""
    _check_R(R)
    if k_max < 0:
        raise DomainError("k_max must be >= 0")
    x = math.pi * R * R
    k = np.arange(k_max + 1)
    p, q = reg_gamma_pq_array(k + 1.0, np.full(k.size, x))
    # P(k+1, x) is nonincreasing in k; enforce it exactly against last-ulp noise
    p = np.minimum.accumulate(p)
    return AnalyticSpectrum("disk", float(R), 1, p, int(k_max), q)


def disk_log_eigenvalue(R: float, k: int) -> float:
    """``log lambda_k`` (0-based) without underflow."""
    return log_poisson_tail(k, math.pi * R * R)


def disk_log_complement(R: float, k: int) -> float:
    """``log(1 - lambda_k)`` (0-based) without cancellation."""
    return log_poisson_head(k, math.pi * R * R)


def disk_count(R: float, delta: float | None = None, log_delta: float | None = None) -> int:
    """``#{k >= 0 : P(k+1, pi R^2) > delta}``, by bisection on the log tail.

    Pass ``log_delta`` for thresholds below the smallest double.  Ties within
    ``1e-12`` (relative, in log space) count as not above the threshold.
    """
    _check_R(R)
    if log_delta is None:
        if delta is None or not (0 < delta < 1):
            raise DomainError(f"threshold must lie in (0, 1), got {delta!r}")
        log_delta = math.log(delta)
    if not log_delta < 0:
        raise DomainError("log_delta must be negative")
    x = math.pi * R * R
    tol = 1e-12 * max(1.0, abs(log_delta))

    def above(k):
        return log_poisson_tail(k, x) > log_delta + tol

    if not above(0):
        return 0
    lo, hi = 0, max(1, int(2 * x) + 8)
    while above(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if above(mid):
            lo = mid
        else:
            hi = mid
    return lo + 1


def polydisk_eigenvalues(R: float, d: int, k_max: int, cap: int = POLYDISK_CAP) -> AnalyticSpectrum:
    """All products ``prod_j lambda_{k_j}`` over the index box ``[0, k_max]^d``, sorted decreasing."""
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    size = (k_max + 1) ** d
    if size > cap:
        raise MemoryBudgetError(f"index box has {size} entries, above the cap {cap}")
    lam = disk_eigenvalues(R, k_max).values
    prod = lam.copy()
    for _ in range(d - 1):
        prod = np.multiply.outer(prod, lam).ravel()
    prod = np.sort(prod)[::-1]
    return AnalyticSpectrum("polydisk", float(R), d, prod, int(k_max))


# --------------------------------------------------------------------------
# Gamma-tail envelopes
# --------------------------------------------------------------------------

def gamma_tail_upper(R: float, k: int) -> float:
    """``exp(-(k+1 - pi R^2)^2 / (2 (k+1)))``."""
    x = math.pi * R * R
    return math.exp(-((k + 1 - x) ** 2) / (2.0 * (k + 1)))


def gamma_tail_sandwich(R: float, k: int, check_upper_only: bool = True) -> tuple[float, bool]:
    """Upper Gamma-tail envelope and whether ``lambda_k`` lies below it.

    Requires ``pi R^2 <= k + 1``.  The comparison is made in log space.
    Only the upper side is explicit; see :func:`fit_gamma_tail_lower` for the
    lower side.
    """
    _check_R(R)
    x = math.pi * R * R
    if k + 1 < x:
        raise DomainError(f"envelope needs pi R^2 <= k + 1 (pi R^2 = {x:.6g}, k = {k})")
    log_upper = -((k + 1 - x) ** 2) / (2.0 * (k + 1))
    log_lam = log_poisson_tail(k, x)
    holds = log_lam <= log_upper + 1e-12 * max(1.0, abs(log_upper))
    return math.exp(log_upper), bool(holds)


@dataclass(frozen=True)
class GammaLowerFit:
    a: float
    b: float
    M: float
    R_grid: tuple[float, ...]


def fit_gamma_tail_lower(R_grid, M: float = 4.0) -> GammaLowerFit:
    """Fit ``a e^{-b u} <= lambda_k``, ``u = (k+1 - pi R^2)^2 / (k+1)``, on ``pi R^2 <= k+1 <= M pi R^2``.

    ``b`` is the least-squares slope of ``-log lambda_k`` against ``u``; ``a``
    is then the largest value making the inequality hold at every point.
    """
    us, logs = [], []
    for R in R_grid:
        x = math.pi * R * R
        for k in range(int(math.ceil(x)) - 1, int(math.floor(M * x))):
            if k + 1 < x:
                continue
            us.append((k + 1 - x) ** 2 / (k + 1))
            logs.append(log_poisson_tail(k, x))
    if not us:
        raise EmptyInputError("no indices inside the Gamma-tail window")
    u = np.array(us)
    lg = np.array(logs)
    slope = np.polyfit(u, lg, 1)[0]
    b = max(-slope, 1e-12)
    log_a = float(np.min(lg + b * u))
    return GammaLowerFit(math.exp(log_a), float(b), float(M), tuple(float(r) for r in R_grid))


# --------------------------------------------------------------------------
# sharpness regimes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SharpnessFit:
    regime: str
    fitted_c: float
    validity_window: dict
    residuals: tuple[tuple[float, float, float], ...] = field(default=())

    @property
    def valid(self) -> bool:
        return self.fitted_c > 0

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "fitted_c": self.fitted_c,
            "valid": self.valid,
            "validity_window": self.validity_window,
            "residuals": [{"R": r, "delta": dl, "ratio": q} for r, dl, q in self.residuals],
        }


def _log_inv(delta: float) -> float:
    if not (0 < delta < 1):
        raise DomainError(f"threshold must lie in (0, 1), got {delta!r}")
    return -math.log(delta)


def fit_sharpness_a(R_grid, delta_grid, C: float = 2.0) -> SharpnessFit:
    """``min (count - pi R^2) / (sqrt(log 1/delta) R)`` over ``C <= sqrt(log 1/delta) <= R``."""
    pts = []
    for R in R_grid:
        _check_R(R)
        for delta in delta_grid:
            t = math.sqrt(_log_inv(delta))
            if not (C <= t <= R):
                continue
            cnt = disk_count(R, log_delta=math.log(delta))
            pts.append((float(R), float(delta), (cnt - math.pi * R * R) / (t * R)))
    if not pts:
        raise EmptyInputError("regime A window is empty for the given grids")
    c = min(p[2] for p in pts)
    window = {"C": C, "R": [min(p[0] for p in pts), max(p[0] for p in pts)],
              "delta": [min(p[1] for p in pts), max(p[1] for p in pts)]}
    return SharpnessFit("A", float(c), window, tuple(pts))


def fit_sharpness_b(R_grid, delta_grid) -> SharpnessFit:
    """``min (count - pi R^2) loglog(1/delta) / log(1/delta)`` over ``1 <= R <= sqrt(L / log L)``."""
    pts = []
    for R in R_grid:
        _check_R(R)
        for delta in delta_grid:
            L = _log_inv(delta)
            if L <= math.e:
                continue
            if not (1.0 <= R and R * R <= L / math.log(L)):
                continue
            cnt = disk_count(R, log_delta=math.log(delta))
            pts.append((float(R), float(delta), (cnt - math.pi * R * R) * math.log(L) / L))
    if not pts:
        raise EmptyInputError("regime B window is empty for the given grids")
    c = min(p[2] for p in pts)
    window = {"R": [min(p[0] for p in pts), max(p[0] for p in pts)],
              "delta": [min(p[1] for p in pts), max(p[1] for p in pts)]}
    return SharpnessFit("B", float(c), window, tuple(pts))


# --------------------------------------------------------------------------
# eigenvalue envelopes on disk spectra
# --------------------------------------------------------------------------

def disk_log_arrays(R: float, k_max: int) -> tuple[list[float], list[float]]:
    """``log lambda_k`` and ``log(1 - lambda_k)`` for 1-based ``k = 1..k_max``."""
    x = math.pi * R * R
    return ([log_poisson_tail(k - 1, x) for k in range(1, k_max + 1)],
            [log_poisson_head(k - 1, x) for k in range(1, k_max + 1)])


@dataclass(frozen=True)
class EnvelopeConstantFit:
    """Fitted ``C'`` such that ``gamma(R) = C' * scale(R)`` makes both envelope branches hold."""

    kind: str
    C_prime: float
    per_R: tuple[tuple[float, float], ...]
    failures: tuple[tuple[float, int], ...]
    k_max: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "C_prime": self.C_prime, "k_max": self.k_max,
                "per_R": [list(p) for p in self.per_R], "failures": [list(f) for f in self.failures]}


def fit_disk_envelopes(R_grid, kind: str = "gs", beta: float = 0.5, s: float = 3.0, C_g: float = 1.0,
                       eta: float = 1.0, kappa: float = 2.0, k_max: int = 400) -> EnvelopeConstantFit:
    """Fit the corollary constant on Gaussian-disk spectra, then re-check every ``R``.

    ``gamma`` is normalised by the geometric factor of the corresponding
    corollary, so one ``C'`` serves the whole ``R`` grid.
    """
    from .bounds import (
        check_envelopes,
        fit_envelope_gamma,
        gamma_scale_gs,
        gamma_scale_poly,
        log_envelope_gs,
        log_envelope_poly,
    )
    from .geometry import GeometrySummary
    from .stats import a_omega

    if kind == "gs":
        env = log_envelope_gs(beta)
    elif kind == "poly":
        env = log_envelope_poly(s, C_g)
    else:
        raise DomainError(f"unknown envelope kind {kind!r}")
    if not R_grid:
        raise EmptyInputError("empty R grid")
    data = []
    for R in R_grid:
        geom = GeometrySummary(math.pi * R * R, 2 * math.pi * R, eta, kappa)
        scale = gamma_scale_gs(geom) if kind == "gs" else gamma_scale_poly(geom, s)
        ll, lo = disk_log_arrays(R, k_max)
        A = a_omega(math.pi * R * R)
        fit = fit_envelope_gamma(ll, lo, A, env, k_max)
        data.append((float(R), fit.gamma / scale, scale, ll, lo, A))
    Cp = max(d[1] for d in data)
    fails = []
    for R, _, scale, ll, lo, A in data:
        fails.extend((R, k) for k in check_envelopes(ll, lo, A, Cp * scale, env, k_max))
    return EnvelopeConstantFit(kind, float(Cp), tuple((d[0], d[1]) for d in data), tuple(fails), int(k_max))
