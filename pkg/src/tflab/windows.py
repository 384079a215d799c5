"""Window functions, their ambiguity functions and derived window constants.

Conventions: ``V_g f(x, xi) = int f(t) conj(g(t - x)) exp(-2 pi i xi t) dt``,
Hermite functions ``h_n(t) = 2**(1/4) (2**n n!)**(-1/2) H_n(sqrt(2 pi) t)
exp(-pi t**2)`` so that ``h_0`` is the unit-norm Gaussian.  With
``w = x + i xi`` and ``n >= m``::

    V_{h_m} h_n(z) = e^{-pi i x xi} sqrt(m!/n!) (sqrt(pi) conj(w))**(n-m)
                     L_m^{(n-m)}(pi |w|**2) e^{-pi |w|**2 / 2}

and for ``n < m`` the same with ``(-sqrt(pi) w)**(m-n)`` and the roles of
``m, n`` swapped in the factorial ratio and the Laguerre indices.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from ._accel import njit, pick, prange
from .errors import (
    DivergenceError,
    DomainError,
    FitFailure,
    HypothesisError,
    GridResolutionError,
    UnsupportedWindowError,
)
from .special import log_factorial_array

GAUSSIAN = "gaussian"
HERMITE = "hermite"
SAMPLED = "sampled"

_QUARTER_ROOT2 = 2.0**0.25


@dataclass(frozen=True, eq=False)
class Window:
    """Window descriptor, normalised in L2 on construction.

    Use :meth:`gaussian`, :meth:`hermite` or :meth:`sampled` rather than the
    constructor.  Sampled windows live on the uniform grid
    ``t0 + j * step``.
    """

    kind: str
    m: int = 0
    samples: np.ndarray | None = field(default=None, repr=False)
    step: float = 0.0
    t0: float = 0.0
    l2_norm: float = 1.0

    @classmethod
    def gaussian(cls) -> "Window":
        return cls(GAUSSIAN)

    @classmethod
    def hermite(cls, m: int) -> "Window":
        if int(m) != m or m < 0:
            raise DomainError(f"Hermite index must be a nonnegative integer, got {m!r}")
        return cls(HERMITE, m=int(m))

    @classmethod
    def sampled(cls, samples, step: float, t0: float | None = None) -> "Window":
        g = np.asarray(samples, dtype=complex).ravel()
        if g.size < 8:
            raise DomainError("a sampled window needs at least 8 samples")
        if not step > 0:
            raise DomainError(f"sample step must be positive, got {step!r}")
        if t0 is None:
            t0 = -0.5 * step * (g.size - 1)
        norm = math.sqrt(_trapezoid_weights(g.size, step) @ np.abs(g) ** 2)
        if norm == 0.0:
            raise DomainError("sampled window is identically zero")
        g = g / norm
        g.setflags(write=False)
        l2 = math.sqrt(_trapezoid_weights(g.size, step) @ np.abs(g) ** 2)
        return cls(SAMPLED, samples=g, step=float(step), t0=float(t0), l2_norm=l2)

    @classmethod
    def from_csv(cls, path) -> "Window":
        """Load a sampled window from CSV with header ``t,value`` or ``t,re,im``."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise DomainError(f"{path}: empty window file")
        header = [c.strip().lower() for c in rows[0]]
        try:
            float(header[0])
        except ValueError:
            pass
        else:
            raise DomainError(f"{path}: header row required (t,value or t,re,im)")
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
        if data.ndim != 2 or data.shape[1] not in (2, 3):
            raise DomainError(f"{path}: expected 2 or 3 columns")
        t = data[:, 0]
        steps = np.diff(t)
        step = float(np.mean(steps))
        if not np.allclose(steps, step, rtol=1e-9, atol=1e-12):
            raise DomainError(f"{path}: sample grid is not uniform")
        vals = data[:, 1] if data.shape[1] == 2 else data[:, 1] + 1j * data[:, 2]
        return cls.sampled(vals, step, t0=float(t[0]))

    @property
    def hermite_index(self) -> int | None:
        if self.kind == GAUSSIAN:
            return 0
        if self.kind == HERMITE:
            return self.m
        return None

    @property
    def is_closed_form(self) -> bool:
        return self.kind != SAMPLED

    @property
    def t_grid(self) -> np.ndarray:
        if self.kind != SAMPLED:
            raise UnsupportedWindowError("only sampled windows carry a grid")
        return self.t0 + self.step * np.arange(self.samples.size)

    def describe(self) -> dict:
        if self.kind == SAMPLED:
            return {
                "kind": SAMPLED,
                "n_samples": int(self.samples.size),
                "step": self.step,
                "t0": self.t0,
            }
        if self.kind == HERMITE:
            return {"kind": HERMITE, "m": self.m}
        return {"kind": GAUSSIAN}

    def __call__(self, t):
        """Evaluate ``g(t)``; sampled windows use a cubic spline, zero outside."""
        t = np.asarray(t, dtype=float)
        if self.kind == SAMPLED:
            return _spline(self)(t)
        return hermite_functions(self.m, t)[self.m].astype(complex)


def _trapezoid_weights(n: int, step: float) -> np.ndarray:
    w = np.full(n, step)
    w[0] = w[-1] = 0.5 * step
    return w


_SPLINES: dict[int, object] = {}


def _spline(w: Window):
    key = id(w.samples)
    sp = _SPLINES.get(key)
    if sp is None:
        cs = CubicSpline(w.t_grid, w.samples, extrapolate=False)
        lo, hi = w.t_grid[0], w.t_grid[-1]

        def sp(t, _cs=cs, _lo=lo, _hi=hi):
            out = np.zeros(np.shape(t), dtype=complex)
            inside = (t >= _lo) & (t <= _hi)
            out[inside] = _cs(t[inside])
            return out

        _SPLINES[key] = sp
    return sp


def hermite_functions(n_max: int, t) -> np.ndarray:
    """Rows ``h_0 .. h_{n_max}`` evaluated at ``t`` (three-term recurrence)."""
    t = np.asarray(t, dtype=float)
    out = np.empty((n_max + 1,) + t.shape)
    y = math.sqrt(2.0 * math.pi) * t
    out[0] = _QUARTER_ROOT2 * np.exp(-math.pi * t * t)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * y * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * y * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def _genlaguerre_rows(n_deg: int, alpha: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``L_{n_deg}^{(alpha)}(x)`` with ``alpha`` and ``x`` broadcast."""
    alpha, x = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(x, float))
    prev = np.ones(x.shape)
    if n_deg == 0:
        return prev
    cur = 1.0 + alpha - x
    for k in range(1, n_deg):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur


# --------------------------------------------------------------------------
# STFT of the Hermite basis: V_g h_n at phase-space nodes
# --------------------------------------------------------------------------

def _stft_basis_closed(m: int, x: np.ndarray, xi: np.ndarray, n_basis: int) -> np.ndarray:
    r2 = x * x + xi * xi
    pr2 = math.pi * r2
    theta = np.arctan2(xi, x)
    with np.errstate(divide="ignore"):
        log_pr2 = np.log(pr2)
    n = np.arange(n_basis)
    lf = log_factorial_array(n)
    lf_m = float(log_factorial_array(np.array([m]))[0])
    out = np.empty((x.size, n_basis), dtype=complex)
    common = np.exp(-1j * math.pi * x * xi)
    for k in range(n_basis):
        # lo = min(m, k) is the Laguerre degree, diff = |k - m| its order
        lo, diff = (m, k - m) if k >= m else (k, m - k)
        if diff == 0:
            mag = np.exp(-0.5 * pr2)
        else:
            lf_lo, lf_hi = (lf_m, lf[k]) if k >= m else (lf[k], lf_m)
            with np.errstate(invalid="ignore"):
                mag = np.exp(0.5 * (lf_lo - lf_hi) + 0.5 * diff * log_pr2 - 0.5 * pr2)
            mag = np.where(r2 == 0.0, 0.0, mag)
        lag = _genlaguerre_rows(lo, diff, pr2)
        if k >= m:
            phase = np.exp(-1j * diff * theta)
        else:
            phase = (-1.0) ** diff * np.exp(1j * diff * theta)
        out[:, k] = common * mag * lag * phase
    return out


@njit(parallel=True)
def _stft_basis_sampled_numba(x, xi, t, gw, n_basis, out):
    two_pi = 2.0 * math.pi
    sq2pi = math.sqrt(two_pi)
    c0 = 2.0**0.25
    ca = np.empty(n_basis)
    cb = np.empty(n_basis)
    for n in range(n_basis):
        ca[n] = math.sqrt(2.0 / (n + 1))
        cb[n] = math.sqrt(n / (n + 1.0))
    for q in prange(x.shape[0]):
        acc = np.zeros(n_basis, dtype=np.complex128)
        for j in range(t.shape[0]):
            u = t[j] + x[q]
            h = c0 * math.exp(-math.pi * u * u)
            if h == 0.0:
                continue
            y = sq2pi * u
            arg = -two_pi * xi[q] * t[j]
            c = gw[j] * complex(math.cos(arg), math.sin(arg))
            hprev = 0.0
            for n in range(n_basis):
                acc[n] += h * c
                hn = ca[n] * y * h - cb[n] * hprev
                hprev = h
                h = hn
        arg = -two_pi * xi[q] * x[q]
        ph = complex(math.cos(arg), math.sin(arg))
        for n in range(n_basis):
            out[q, n] = acc[n] * ph


def _stft_basis_sampled_numpy(x, xi, t, gw, n_basis, out, chunk=128):
    for s in range(0, x.shape[0], chunk):
        xs = x[s : s + chunk]
        xis = xi[s : s + chunk]
        u = t[None, :] + xs[:, None]
        c = gw[None, :] * np.exp(-2j * math.pi * xis[:, None] * t[None, :])
        y = math.sqrt(2.0 * math.pi) * u
        h = _QUARTER_ROOT2 * np.exp(-math.pi * u * u)
        hprev = np.zeros_like(h)
        for n in range(n_basis):
            out[s : s + chunk, n] = np.einsum("qj,qj->q", h, c)
            h, hprev = math.sqrt(2.0 / (n + 1)) * y * h - math.sqrt(n / (n + 1.0)) * hprev, h
        out[s : s + chunk] *= np.exp(-2j * math.pi * xis * xs)[:, None]


def stft_basis(w: Window, x, xi, n_basis: int, backend: str | None = None) -> np.ndarray:
    """``V_g h_n(x_q, xi_q)`` as a ``(len(x), n_basis)`` complex array."""
    x = np.ascontiguousarray(np.asarray(x, dtype=float).ravel())
    xi = np.ascontiguousarray(np.asarray(xi, dtype=float).ravel())
    if w.is_closed_form:
        return _stft_basis_closed(w.hermite_index, x, xi, n_basis)
    t = w.t_grid
    gw = np.ascontiguousarray(np.conj(w.samples) * _trapezoid_weights(t.size, w.step))
    out = np.empty((x.size, n_basis), dtype=complex)
    if backend is None:
        kernel = pick(_stft_basis_sampled_numba, _stft_basis_sampled_numpy)
    else:
        kernel = _stft_basis_sampled_numba if backend == "numba" else _stft_basis_sampled_numpy
    kernel(x, xi, t, gw, n_basis, out)
    return out


# --------------------------------------------------------------------------
# ambiguity function
# --------------------------------------------------------------------------

def window_bandwidth(w: Window, rel: float = 1e-12) -> float:
    """Frequency beyond which ``|g_hat| < rel * max|g_hat|`` (sampled windows)."""
    if w.is_closed_form:
        m = w.hermite_index
        # |h_m_hat| = |h_m|; the decay profile is the same as in time
        return math.sqrt((2 * m + 1) / (2 * math.pi)) + math.sqrt(-math.log(rel) / math.pi)
    n = 8 * w.samples.size
    spec = np.abs(np.fft.fft(w.samples, n=n))
    freqs = np.abs(np.fft.fftfreq(n, d=w.step))
    above = freqs[spec > rel * spec.max()]
    return float(above.max()) if above.size else 0.0


def nyquist_limit(w: Window) -> float:
    """Largest ``|xi|`` for which trapezoidal quadrature of ``g conj(g(. - x))``
    against ``exp(-2 pi i xi t)`` is alias-free: ``|xi| + 2 B <= 1/step``."""
    if w.is_closed_form:
        return math.inf
    return 1.0 / w.step - 2.0 * window_bandwidth(w)


def ambiguity(w: Window, x, xi):
    """``V_g g`` at ``(x, xi)`` (scalars or broadcastable arrays)."""
    x_arr, xi_arr = np.broadcast_arrays(np.asarray(x, float), np.asarray(xi, float))
    if w.is_closed_form:
        m = w.hermite_index
        pr2 = math.pi * (x_arr**2 + xi_arr**2)
        val = np.exp(-1j * math.pi * x_arr * xi_arr) * _genlaguerre_rows(m, 0.0, pr2) * np.exp(-0.5 * pr2)
    else:
        lim = nyquist_limit(w)
        if np.any(np.abs(xi_arr) > lim):
            raise GridResolutionError(
                f"|xi| up to {np.max(np.abs(xi_arr)):.4g} exceeds the Nyquist limit "
                f"{lim:.4g} of the sampled window (step {w.step})"
            )
        t = w.t_grid
        wts = _trapezoid_weights(t.size, w.step)
        sp = _spline(w)
        flat_x = x_arr.ravel()
        flat_xi = xi_arr.ravel()
        val = np.empty(flat_x.size, dtype=complex)
        for i in range(flat_x.size):
            shifted = np.conj(sp(t - flat_x[i]))
            val[i] = np.sum(wts * w.samples * shifted * np.exp(-2j * math.pi * flat_xi[i] * t))
        val = val.reshape(x_arr.shape)
    if np.ndim(val) == 0:
        return complex(val)
    return val


@dataclass(frozen=True, eq=False)
class AmbiguityTable:
    """Samples of ``V_g g`` on a Cartesian phase-space grid."""

    x: np.ndarray
    xi: np.ndarray
    values: np.ndarray  # shape (len(x), len(xi))
    closed_form: bool = False

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.xi[1] - self.xi[0]))

    def radius(self) -> np.ndarray:
        return np.hypot(self.x[:, None], self.xi[None, :])

    @property
    def edge_max(self) -> float:
        v = np.abs(self.values)
        return float(max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max()))


def ambiguity_table(w: Window, extent: float = 8.0, step: float = 0.05) -> AmbiguityTable:
    """Tabulate ``V_g g`` on ``[-extent, extent]**2``.

    Closed-form windows are evaluated exactly.  Sampled windows use shifts by
    whole samples in ``x`` and a zero-padded FFT in ``xi`` (the ``xi`` step is
    ``1 / (M * sample_step)`` with ``M`` the padded length, chosen so that the
    ``xi`` step is at most ``step``).
    """
    if w.is_closed_form:
        n = int(round(extent / step))
        ax = step * np.arange(-n, n + 1)
        X, XI = np.meshgrid(ax, ax, indexing="ij")
        return AmbiguityTable(ax, ax.copy(), ambiguity(w, X, XI), closed_form=True)
    s = w.step
    g = w.samples
    J = g.size
    lmax = min(J - 1, int(math.floor(extent / s)))
    shifts = np.arange(-lmax, lmax + 1)
    M = 1 << int(math.ceil(math.log2(max(J, 1.0 / (s * step)))))
    xi_full = np.fft.fftshift(np.fft.fftfreq(M, d=s))
    keep = np.abs(xi_full) <= min(extent, nyquist_limit(w))
    xi = xi_full[keep]
    vals = np.empty((shifts.size, xi.size), dtype=complex)
    wts = _trapezoid_weights(J, s)
    for row, ell in enumerate(shifts):
        p = np.zeros(J, dtype=complex)
        if ell >= 0:
            p[ell:] = g[ell:] * np.conj(g[: J - ell])
        else:
            p[: J + ell] = g[: J + ell] * np.conj(g[-ell:])
        p *= wts
        f = np.fft.fftshift(np.fft.fft(p, n=M))
        vals[row] = (f * np.exp(-2j * math.pi * xi_full * w.t0))[keep]
    return AmbiguityTable(s * shifts.astype(float), xi, vals, closed_form=False)


# --------------------------------------------------------------------------
# window constants
# --------------------------------------------------------------------------

def _radial_abs2(w: Window, r: np.ndarray) -> np.ndarray:
    m = w.hermite_index
    pr2 = math.pi * r * r
    return (_genlaguerre_rows(m, 0.0, pr2) ** 2) * np.exp(-pr2)


def _radial_nodes(w: Window, panels: int = 48, order: int = 24):
    m = w.hermite_index
    r_max = math.sqrt((2 * m + 1) / math.pi) + 6.0 + math.sqrt(m)
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, r_max, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    r = (0.5 * (b - a) * xg[None, :] + 0.5 * (a + b)).ravel()
    wr = (0.5 * (b - a) * wg[None, :]).ravel()
    return r, wr, r_max


def weighted_ambiguity_integral(w: Window, weight, table: AmbiguityTable | None = None,
                                tail_tol: float = 1e-10) -> float:
    """``int weight(|z|) |V_g g(z)|**2 dz`` over the plane.

    Radial closed forms use composite Gauss-Legendre in ``r``; sampled windows
    integrate their Cartesian table.  A :class:`DivergenceError` is raised when
    the weighted integrand is not negligible at the outer edge.
    """
    if w.is_closed_form:
        r, wr, r_max = _radial_nodes(w)
        f = weight(r) * _radial_abs2(w, r) * 2.0 * math.pi * r
        total = float(wr @ f)
        edge = float(weight(np.array([r_max]))[0] * _radial_abs2(w, np.array([r_max]))[0]) * 2 * math.pi * r_max
        if not math.isfinite(total) or edge > tail_tol * max(total, 1e-300):
            raise DivergenceError(f"weighted integrand still {edge:.3g} at r={r_max:.3g}")
        return total
    if table is None:
        table = ambiguity_table(w)
    rad = table.radius()
    f = weight(rad) * np.abs(table.values) ** 2
    total = float(f.sum() * table.cell_area)
    border = np.concatenate([f[0], f[-1], f[:, 0], f[:, -1]]).max()
    if not math.isfinite(total) or border * rad.max() * 8 > 1e-6 * max(total, 1e-300):
        raise DivergenceError("weighted ambiguity integrand not negligible at the table edge")
    return total


def moment_constant(w: Window, s: float, table: AmbiguityTable | None = None) -> float:
    """``int (1 + |z|)**s |V_g g(z)|**2 dz``."""
    if not s >= 0:
        raise DomainError(f"moment order must be >= 0, got {s!r}")
    return weighted_ambiguity_integral(w, lambda r: (1.0 + r) ** s, table)


def k_g_constant(w: Window, table: AmbiguityTable | None = None) -> float:
    """``K_g = 2 int |z| |V_g g(z)|**2 dz``."""
    return 2.0 * weighted_ambiguity_integral(w, lambda r: r, table)


@dataclass(frozen=True)
class GSFit:
    C: float
    A: float
    beta: float
    n_max: int
    growth_slope: float
    certified_on_grid: bool = True


def gs_fit(
    w: Window,
    beta: float,
    n_max: int = 64,
    table: AmbiguityTable | None = None,
    a_grid=None,
    c_cap: float = 1e6,
    slope_tol: float = 0.02,
) -> GSFit:
    """Fit ``(C, A)`` with ``|V_g g(z)| <= C A**n n!**beta (1 + |z|)**-n``.

    For every ``n <= n_max`` the table gives ``b_n = max_z log(|V|(1+|z|)**n)
    - beta log n!``.  For each ``A`` in ``a_grid`` (default 32 log-spaced points
    in ``[1, 16]``) the smallest certifying ``C`` is ``exp(max_n b_n - n log A)``;
    the pair minimising ``C * A**5`` is returned.

    The inequality must hold for *all* ``n``, which a finite scan cannot see.
    The increments ``b_{n+1} - b_n`` over the upper half of the scan are
    regressed on ``log n``: a positive slope means the required ``A`` grows
    without bound (the signature of ``beta`` below the window's class), and
    :class:`FitFailure` is raised.
    """
    if table is None:
        table = ambiguity_table(w)
    if a_grid is None:
        a_grid = np.logspace(0.0, math.log10(16.0), 32)
    a_grid = np.asarray(a_grid, dtype=float)
    mag = np.abs(table.values).ravel()
    logr = np.log1p(table.radius().ravel())
    ok = mag > 0
    floor = 0.0 if table.closed_form else 1e-13 * mag.max()
    ok &= mag > floor
    logv = np.log(mag[ok])
    logr = logr[ok]
    n = np.arange(n_max + 1)
    sup = np.array([np.max(logv + k * logr) for k in n])
    b = sup - beta * log_factorial_array(n)
    inc = np.diff(b)[n_max // 2 :]
    ln = np.log(np.arange(n_max // 2 + 1, n_max + 1))
    slope = float(np.polyfit(ln, inc, 1)[0])
    if slope > slope_tol:
        raise FitFailure(
            f"beta={beta} too small for this window: required log A grows like "
            f"{slope:.3f} log n"
        )
    logc = np.array([np.max(b - n * math.log(a)) for a in a_grid])
    objective = logc + 5.0 * np.log(a_grid)
    best = int(np.argmin(objective))
    C = float(math.exp(logc[best]))
    if C > c_cap:
        raise FitFailure(f"no (C, A) with C <= {c_cap:g} certifies beta={beta}")
    return GSFit(C=C, A=float(a_grid[best]), beta=float(beta), n_max=n_max, growth_slope=slope)


@dataclass(frozen=True)
class WindowConstants:
    gs_C: float
    gs_A: float
    gs_beta: float
    moment_s: float
    moment_Cg: float
    K_g: float

    def __post_init__(self):
        for name in ("gs_C", "gs_A", "moment_Cg", "K_g"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        if self.gs_beta < 0.5:
            raise HypothesisError(f"gs_beta={self.gs_beta} < 1/2")
        if self.moment_s < 1:
            raise HypothesisError(f"moment_s={self.moment_s} < 1")

    @property
    def simple_Cg(self) -> float:
        """``int |z| |V_g g|**2``, the constant of the two-moment bound."""
        return 0.5 * self.K_g


def window_constants(w: Window, beta: float = 0.5, s: float = 3.0,
                     table: AmbiguityTable | None = None, n_max: int = 64) -> WindowConstants:
    if table is None:
        table = ambiguity_table(w)
    fit = gs_fit(w, beta, n_max=n_max, table=table)
    tab = None if w.is_closed_form else table
    return WindowConstants(
        gs_C=fit.C,
        gs_A=fit.A,
        gs_beta=float(beta),
        moment_s=float(s),
        moment_Cg=moment_constant(w, s, tab),
        K_g=k_g_constant(w, tab),
    )
