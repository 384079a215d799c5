"""Right-hand sides of the spectral deviation bounds and their verification.

All dimension-dependent constants default to ``C_d = 1``; use
:func:`fit_constant` to measure the multiplier a family of examples needs.
Phase space is ``R^2`` throughout (``d = 1``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, EmptyInputError, HypothesisError, UnsupportedWindowError
from .geometry import Domain, GeometrySummary
from .operator import hankel_schatten
from .special import erfc
from .stats import a_omega as _a_omega
from .stats import counting, tau as _tau
from .windows import AmbiguityTable, Window, WindowConstants, weighted_ambiguity_integral

D = 1  # half the phase-space dimension

GS_VARIANTS = ("theorem", "remark", "large_tau")
BOUND_IDS = ("simple", "gs", "poly", "hankel", "lemma41")


def _check_delta(delta: float):
    if not (0.0 < delta < 1.0):
        raise DomainError(f"threshold must lie in (0, 1), got {delta!r}")


# --------------------------------------------------------------------------
# right-hand sides
# --------------------------------------------------------------------------

def bound_simple(Cg: float, perimeter: float, delta: float) -> float:
    """``C_g * H(boundary) * tau`` with ``C_g = int |z| |V_g g|^2 = K_g / 2``."""
    _check_delta(delta)
    return Cg * perimeter * _tau(delta)


def gs_prime_constant(consts: WindowConstants, C_d: float = 1.0, variant: str = "theorem") -> float:
    """The constant ``C'_g`` of the Gelfand-Shilov bound.

    ``theorem``: ``C_g^{1/2} A^{3d+2} C_d^beta``; ``remark``: the fully explicit
    version with the ``e``, ``(3d+2)``, ``2`` and ``log 2`` factors;
    ``large_tau``: ``C_d A^{2d} e^beta (2d)^{2d beta}``.
    """
    C, A, b = consts.gs_C, consts.gs_A, consts.gs_beta
    if variant == "theorem":
        return C**0.5 * A ** (3 * D + 2) * C_d**b
    if variant == "remark":
        return (C_d * C**0.5 * A ** (3 * D + 2) * math.exp(b * (D + 2)) * (3 * D + 2) ** (b * (3 * D + 2))
                * 2 ** (b * (2 * D + 1)) * math.log(2) ** (-2 * D * b))
    if variant == "large_tau":
        return C_d * A ** (2 * D) * math.exp(b) * (2 * D) ** (2 * D * b)
    raise DomainError(f"unknown constant variant {variant!r}; choose from {GS_VARIANTS}")


def bound_gs(consts: WindowConstants, geom: GeometrySummary, delta: float, C_d: float = 1.0,
             variant: str = "theorem") -> float:
    """Threshold-robust bound for Gelfand-Shilov windows (``d = 1``)."""
    _check_delta(delta)
    beta = consts.gs_beta
    if beta < 0.5:
        raise HypothesisError(f"Gelfand-Shilov parameter beta={beta} < 1/2")
    L = math.log(_tau(delta))
    Cp = gs_prime_constant(consts, C_d, variant)
    return (Cp * geom.perimeter * L**beta * (1.0 + L ** ((2 * D - 1) * beta) / geom.eta ** (2 * D - 1))
            * math.log(L + 1.0) / geom.kappa)


def bound_poly(consts: WindowConstants, geom: GeometrySummary, delta: float, s: float | None = None,
               C_d: float = 1.0) -> float:
    """Bound for windows with a finite polynomial moment ``C_g(s)``."""
    _check_delta(delta)
    s = consts.moment_s if s is None else float(s)
    if s < 1:
        raise HypothesisError(f"moment order s={s} < 1")
    if not (0 < geom.eta <= 1):
        raise HypothesisError(f"scale eta={geom.eta} outside (0, 1]")
    if not math.isclose(s, consts.moment_s, rel_tol=1e-12):
        raise DomainError(f"constants were computed for s={consts.moment_s}, not s={s}")
    Cg = consts.moment_Cg
    theta = 2 * D / (2 * D + s - 1)
    Cp = C_d * Cg**theta
    t = _tau(delta)
    return (Cp * geom.perimeter * t**theta
            * (math.log(Cg * t) / (geom.kappa * geom.eta ** (2 * D - 1))) ** ((s - 1) / (2 * D + s - 1)))


def hankel_weighted_norm_p(w: Window, eta: float, p: float, alpha: float,
                           table: AmbiguityTable | None = None) -> float:
    """``||(1+|z|/eta)^{a} (1+|z|)^{b} V_g g||_2^p`` with the Hankel-estimate exponents."""
    a = (2 * D - 1) * (2 - p) / (2 * p)
    b = (1 + alpha) * (2 - p) / (2 * p) + 0.5
    integral = weighted_ambiguity_integral(
        w, lambda r: (1.0 + r / eta) ** (2 * a) * (1.0 + r) ** (2 * b), table
    )
    return integral ** (p / 2)


def bound_hankel(w: Window, geom: GeometrySummary, p: float, alpha: float, C_d: float = 1.0,
                 table: AmbiguityTable | None = None) -> float:
    """Upper estimate of ``||H||_p^p`` for the Hankel operator."""
    if not (0 < p <= 2):
        raise DomainError(f"Schatten exponent must lie in (0, 2], got {p!r}")
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    norm_p = hankel_weighted_norm_p(w, geom.eta, p, alpha, table)
    return C_d * geom.perimeter * norm_p / (geom.kappa * alpha) ** (1 - p / 2)


# --------------------------------------------------------------------------
# Hankel-norm lemma
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Lemma41Result:
    lhs: float
    rhs: float
    holds: bool
    tolerance: float


def verify_lemma41(spec, dom: Domain | float, delta: float, p: float,
                   trace_defect: float | None = None) -> Lemma41Result:
    """``|#{lambda > delta} - |Omega|| <= (delta (1 - delta))^{-p/2} ||H||_p^p``.

    The tolerance is the Galerkin trace defect ``|Omega| - sum lambda``
    (clipped at 0) scaled by the same prefactor, plus ``1e-9``.
    """
    _check_delta(delta)
    area = dom if isinstance(dom, (int, float)) else dom.measure()
    vals = np.asarray(getattr(spec, "values", spec), dtype=float)
    if trace_defect is None:
        trace_defect = max(area - float(vals.sum()), 0.0)
    pref = (delta * (1 - delta)) ** (-p / 2)
    lhs = abs(counting(vals, delta) - area)
    rhs = pref * hankel_schatten(vals, p)
    tol = 1e-9 + pref * max(trace_defect, 0.0)
    return Lemma41Result(float(lhs), float(rhs), bool(lhs <= rhs + tol), float(tol))


def plunge_indices(K_g: float, perimeter: float, a_omega: int) -> tuple[int, int]:
    """``(ceil(A + K_g H), floor(A - K_g H))``; 1-based eigenvalue indices."""
    if K_g < 0 or perimeter < 0 or a_omega < 0:
        raise DomainError("plunge_indices needs nonnegative inputs")
    s = K_g * perimeter
    return int(math.ceil(a_omega + s - 1e-12)), int(math.floor(a_omega - s + 1e-12))


# --------------------------------------------------------------------------
# eigenvalue envelopes
# --------------------------------------------------------------------------

def _h(k: int, a_omega: int, gamma: float) -> float:
    if not gamma > 0:
        raise DomainError(f"gamma must be > 0, got {gamma!r}")
    h = abs(k - a_omega) / gamma
    if h < 1.0:
        raise DomainError(f"index k={k} is within gamma={gamma:.6g} of A={a_omega} (h={h:.4g} < 1)")
    return h


def envelope_gs_h(h: float, beta: float) -> float:
    return math.exp(-((h / (math.e * (1.0 + math.log(h)))) ** (1.0 / (2 * D * beta))))


def envelope_gs(k: int, a_omega: int, gamma: float, beta: float) -> float:
    """``exp(-(h / (e (1 + log h)))^{1/(2 d beta)})`` for ``k = A +- gamma h``."""
    return envelope_gs_h(_h(k, a_omega, gamma), beta)


def envelope_poly_h(h: float, s: float, C_g: float) -> float:
    c = (2 * D + s - 1) / (2 * D)
    return math.exp(c * c) * h ** (-c) * (1.0 + math.log(C_g * h)) ** ((s - 1) / (2 * D))


def envelope_poly(k: int, a_omega: int, gamma: float, s: float, C_g: float) -> float:
    if s < 1:
        raise HypothesisError(f"moment order s={s} < 1")
    return envelope_poly_h(_h(k, a_omega, gamma), s, C_g)


def _log_envelope_inverse(log_target: float, log_env, h_max: float = 1e300) -> float:
    """Largest ``h >= 1`` with ``log_env(h) >= log_target`` (envelope nonincreasing)."""
    if log_env(1.0) < log_target:
        return 0.0
    hi = 2.0
    while log_env(hi) >= log_target:
        hi *= 2.0
        if hi > h_max:
            return math.inf
    return brentq(lambda h: log_env(h) - log_target, hi / 2, hi, xtol=1e-14, rtol=1e-14)


@dataclass(frozen=True)
class EnvelopeFit:
    """Minimal ``gamma`` for which both envelope branches hold on one spectrum."""

    gamma: float
    a_omega: int
    worst_k: int
    n_checked: int


def fit_envelope_gamma(log_lam: np.ndarray, log_one_minus: np.ndarray, a_omega: int,
                       log_env, k_max: int | None = None) -> EnvelopeFit:
    """Smallest ``gamma`` such that the envelope holds for all 1-based ``k <= k_max``.

    ``log_lam[k-1]`` and ``log_one_minus[k-1]`` are ``log lambda_k`` and
    ``log(1 - lambda_k)``.  For each ``k`` the envelope holds exactly when
    ``h = |k - A| / gamma`` is at most ``h*_k`` (the envelope is
    nonincreasing in ``h``), or when ``h < 1`` (``k`` is not constrained).
    """
    n = len(log_lam) if k_max is None else min(k_max, len(log_lam))
    gamma = 0.0
    worst = 0
    for k in range(1, n + 1):
        dist = abs(k - a_omega)
        if dist == 0:
            continue
        target = log_lam[k - 1] if k > a_omega else log_one_minus[k - 1]
        if target == -math.inf:
            continue
        hstar = _log_envelope_inverse(target, log_env)
        if hstar >= 1.0:
            need = dist / hstar
        else:
            need = dist * (1.0 + 1e-12)
        if need > gamma:
            gamma, worst = need, k
    return EnvelopeFit(float(gamma), int(a_omega), int(worst), int(n))


def check_envelopes(log_lam, log_one_minus, a_omega: int, gamma: float, log_env,
                    k_max: int | None = None) -> list[int]:
    """1-based indices where an envelope branch fails for the given ``gamma``."""
    n = len(log_lam) if k_max is None else min(k_max, len(log_lam))
    bad = []
    for k in range(1, n + 1):
        h = abs(k - a_omega) / gamma
        if h < 1.0:
            continue
        le = log_env(h)
        if k > a_omega:
            if log_lam[k - 1] > le + 1e-12 * max(1.0, abs(le)):
                bad.append(k)
        elif log_one_minus[k - 1] > le + 1e-12 * max(1.0, abs(le)):
            bad.append(k)
    return bad


def log_envelope_gs(beta: float):
    return lambda h: -((h / (math.e * (1.0 + math.log(h)))) ** (1.0 / (2 * D * beta)))


def log_envelope_poly(s: float, C_g: float):
    c = (2 * D + s - 1) / (2 * D)
    return lambda h: c * c - c * math.log(h) + (s - 1) / (2 * D) * math.log(1.0 + math.log(C_g * h))


def gamma_scale_gs(geom: GeometrySummary) -> float:
    """``gamma / C'_g`` for the Gelfand-Shilov corollary: ``2 H / (kappa eta^{2d-1})``."""
    return 2.0 * geom.perimeter / (geom.kappa * geom.eta ** (2 * D - 1))


def gamma_scale_poly(geom: GeometrySummary, s: float) -> float:
    """``gamma / C'_g`` for the polynomial corollary: ``(kappa eta^{2d-1})^{-(s-1)/(2d+s-1)} H``."""
    return (geom.kappa * geom.eta ** (2 * D - 1)) ** (-(s - 1) / (2 * D + s - 1)) * geom.perimeter


# --------------------------------------------------------------------------
# two-term coefficient
# --------------------------------------------------------------------------

def halfplane_level(delta: float) -> float:
    """``lambda(delta)`` solving ``(1/2) erfc(sqrt(2 pi) lambda) = delta`` (Gaussian Wigner mass)."""
    if not (0 < delta < 0.5):
        raise DomainError(f"threshold must lie in (0, 1/2), got {delta!r}")
    c = math.sqrt(2 * math.pi)

    def f(lam):
        return 0.5 * erfc(c * lam) - delta

    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def a1_term(w: Window, dom: Domain | float, delta: float, C_d: float = 1.0) -> float:
    """``C_d * perimeter * lambda(delta)`` for the Gaussian window."""
    if not (w.kind == "gaussian" or w.hermite_index == 0):
        raise UnsupportedWindowError("the two-term coefficient is implemented for the Gaussian window only")
    per = dom if isinstance(dom, (int, float)) else dom.perimeter()
    return C_d * per * halfplane_level(delta)


# --------------------------------------------------------------------------
# reports and constant fitting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    delta: float
    deviation_lhs: float
    rhs_simple: float
    rhs_gs: float
    rhs_poly: float
    rhs_hankel: float
    rhs_lemma41: float
    admissible: dict
    inputs: dict = field(default_factory=dict)

    COLUMNS = ("delta", "p", "deviation_lhs", "rhs_simple", "rhs_gs", "rhs_poly", "rhs_hankel",
               "rhs_lemma41", "ok_simple", "ok_gs", "ok_poly", "ok_hankel", "ok_lemma41")

    def rhs(self, bound_id: str) -> float:
        if bound_id not in BOUND_IDS:
            raise DomainError(f"unknown bound id {bound_id!r}")
        return getattr(self, f"rhs_{bound_id}")

    def row(self) -> tuple:
        a = self.admissible
        return (self.delta, self.inputs.get("p", math.nan), self.deviation_lhs, self.rhs_simple,
                self.rhs_gs, self.rhs_poly, self.rhs_hankel, self.rhs_lemma41,
                a.get("simple", False), a.get("gs", False), a.get("poly", False),
                a.get("hankel", False), a.get("lemma41", False))


def bound_report(spec, dom_area: float, geom: GeometrySummary, consts: WindowConstants, w: Window,
                 delta: float, p: float = 1.0, alpha: float = 1.0, C_d: float = 1.0,
                 gs_variant: str = "theorem", table: AmbiguityTable | None = None,
                 trace_defect: float | None = None, label: dict | None = None) -> BoundReport:
    """Evaluate every bound at one ``(delta, p)``; inadmissible bounds report ``nan``."""
    _check_delta(delta)
    vals = np.asarray(getattr(spec, "values", spec), dtype=float)
    lhs = abs(counting(vals, delta) - dom_area)
    ok: dict = {}
    out: dict = {}

    def attempt(name, fn):
        try:
            out[name] = float(fn())
            ok[name] = math.isfinite(out[name])
        except HypothesisError:
            out[name] = math.nan
            ok[name] = False

    attempt("simple", lambda: bound_simple(consts.simple_Cg, geom.perimeter, delta))
    attempt("gs", lambda: bound_gs(consts, geom, delta, C_d, gs_variant))
    attempt("poly", lambda: bound_poly(consts, geom, delta, None, C_d))
    pref = (delta * (1 - delta)) ** (-p / 2)
    attempt("hankel", lambda: pref * bound_hankel(w, geom, p, alpha, C_d, table))
    attempt("lemma41", lambda: verify_lemma41(vals, dom_area, delta, p, trace_defect).rhs)
    inputs = {"p": p, "alpha": alpha, "C_d": C_d, "eta": geom.eta, "kappa": geom.kappa,
              "perimeter": geom.perimeter, "gs_variant": gs_variant, "beta": consts.gs_beta,
              "s": consts.moment_s}
    if label:
        inputs.update(label)
    return BoundReport(float(delta), float(lhs), out["simple"], out["gs"], out["poly"], out["hankel"],
                       out["lemma41"], ok, inputs)


@dataclass(frozen=True)
class ConstantFit:
    bound_id: str
    fitted_Cd: float
    grid: dict
    max_ratio_location: dict

    def to_dict(self) -> dict:
        return {"bound_id": self.bound_id, "fitted_Cd": self.fitted_Cd, "grid": self.grid,
                "max_ratio_location": self.max_ratio_location}


def fit_constant(reports: list[BoundReport], bound_id: str) -> ConstantFit:
    """``max deviation / rhs`` over reports whose rhs was computed with ``C_d = 1``.

    The fitted value multiplies the whole right-hand side (for the
    Gelfand-Shilov bound it therefore plays the role of ``C_d^beta``).
    """
    if not reports:
        raise EmptyInputError("fit_constant needs at least one report")
    if bound_id not in BOUND_IDS:
        raise DomainError(f"unknown bound id {bound_id!r}")
    best = -1.0
    loc: dict = {}
    deltas, labels = set(), set()
    for r in reports:
        if r.inputs.get("C_d", 1.0) != 1.0:
            raise DomainError("fit_constant needs reports computed with C_d = 1")
        if not r.admissible.get(bound_id, False):
            continue
        rhs = r.rhs(bound_id)
        ratio = r.deviation_lhs / rhs if rhs > 0 else (0.0 if r.deviation_lhs == 0 else math.inf)
        deltas.add(r.delta)
        if "R" in r.inputs:
            labels.add(r.inputs["R"])
        if ratio > best:
            best = ratio
            loc = {"delta": r.delta, **{k: r.inputs[k] for k in ("R", "p") if k in r.inputs}}
    if best < 0:
        raise EmptyInputError(f"no admissible reports for bound {bound_id!r}")
    grid = {"delta": sorted(deltas), "R": sorted(labels), "n_reports": len(reports)}
    return ConstantFit(bound_id, float(best), grid, loc)


def dilation_reports(base_geom: GeometrySummary, consts: WindowConstants, w: Window, R_grid, delta_grid,
                     spectrum_for_R, area_for_R, p: float = 1.0, alpha: float = 1.0,
                     gs_variant: str = "theorem", table: AmbiguityTable | None = None) -> list[BoundReport]:
    """Reports for ``R * Omega`` (scale ``R * eta``) over an ``(R, delta)`` sweep."""
    out = []
    for R in R_grid:
        geom = base_geom.dilated(R)
        spec = spectrum_for_R(R)
        area = area_for_R(R)
        for delta in delta_grid:
            out.append(bound_report(spec, area, geom, consts, w, delta, p, alpha, 1.0, gs_variant,
                                    table, label={"R": float(R)}))
    return out
