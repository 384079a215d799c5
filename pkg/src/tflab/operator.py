"""Hermite-Galerkin matrices of concentration operators and their spectra.

With ``h_n`` the Hermite functions, the Galerkin matrix is
``M[m, n] = int_Omega V_g h_n(z) conj(V_g h_m(z)) dz``.  Writing the nodal
values as ``U[q, n] = sqrt(w_q) V_g h_n(z_q)`` gives ``M = U^H U``, which is
Hermitian and positive semi-definite by construction.  Phases common to all
``V_g h_n`` (such as ``e^{-pi i x xi}``) cancel in every entry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit, pick, prange
from .eigen import hermitian_eigh
from .errors import (
    BasisSizeError,
    DomainError,
    EigenConvergenceError,
    GridMismatchError,
    QuadratureBudgetError,
    SpectrumRangeError,
)
from .geometry import Domain
from .quadrature import QuadRule, QuadSpec, domain_rule
from .windows import Window, stft_basis

MAX_BASIS = 512
CLIP_TOL = 1e-8
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    entries: np.ndarray
    window: Window
    domain: Domain
    quad_tol: float
    quad_error: float = 0.0
    quad_spec: QuadSpec = field(default_factory=QuadSpec)

    @property
    def basis_size(self) -> int:
        return self.entries.shape[0]

    def metadata(self) -> dict:
        from .geometry import domain_to_spec

        return {
            "window": self.window.describe(),
            "domain": domain_to_spec(self.domain),
            "N": self.basis_size,
            "quad_tol": self.quad_tol,
            "quad_error": self.quad_error,
            "quadrature": self.quad_spec.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Decreasing eigenvalues in ``[0, 1]``."""

    values: np.ndarray
    clip_count: int = 0
    basis_size: int = 0
    max_clip: float = 0.0
    max_residual: float = 0.0
    source: str = "galerkin"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise DomainError("spectrum values must be one-dimensional")
        if v.size and (np.any(np.diff(v) > 0) or v.min() < 0 or v.max() > 1):
            raise DomainError("spectrum values must be decreasing and inside [0, 1]")
        object.__setattr__(self, "values", v)
        if not self.basis_size:
            object.__setattr__(self, "basis_size", v.size)

    @classmethod
    def from_values(cls, values, source: str = "external", clip_tol: float = CLIP_TOL) -> "Spectrum":
        """Sort and clip arbitrary eigenvalue data (e.g. read from CSV)."""
        v = np.sort(np.asarray(values, dtype=float))[::-1]
        clipped = np.clip(v, 0.0, 1.0)
        excess = np.abs(v - clipped)
        if excess.size and excess.max() > clip_tol:
            raise SpectrumRangeError(f"eigenvalue outside [0, 1] by {excess.max():.3g}")
        return cls(clipped, int(np.count_nonzero(excess)), v.size,
                   float(excess.max()) if excess.size else 0.0, 0.0, source)

    def __len__(self):
        return self.values.size


def _nodal_matrix(w: Window, rule: QuadRule, N: int, backend: str | None) -> np.ndarray:
    U = stft_basis(w, rule.x, rule.xi, N, backend)
    U *= np.sqrt(rule.w)[:, None]
    return U


def _gram(U: np.ndarray) -> np.ndarray:
    M = U.conj().T @ U
    return 0.5 * (M + M.conj().T)


def assemble_galerkin(
    w: Window,
    dom: Domain,
    N: int,
    quad: QuadSpec | None = None,
    quad_tol: float = 1e-9,
    backend: str | None = None,
) -> OperatorMatrix:
    """Galerkin matrix of ``L_Omega`` in the first ``N`` Hermite functions.

    The rule ``quad`` and its doubled version are both evaluated; the doubled
    result is returned and the entrywise difference is the error estimate.
    """
    if int(N) != N or N < 1:
        raise BasisSizeError(f"basis size must be a positive integer, got {N!r}")
    if N > MAX_BASIS:
        raise BasisSizeError(f"basis size {N} exceeds the cap {MAX_BASIS}")
    N = int(N)
    quad = quad or QuadSpec()
    if dom.measure() == 0.0:
        return OperatorMatrix(np.zeros((N, N), dtype=complex), w, dom, quad_tol, 0.0, quad)
    coarse = _gram(_nodal_matrix(w, domain_rule(dom, quad), N, backend))
    fine = _gram(_nodal_matrix(w, domain_rule(dom, quad.doubled()), N, backend))
    err = float(np.max(np.abs(fine - coarse)))
    if not np.all(np.isfinite(fine)):
        raise BasisSizeError("non-finite Galerkin entries; reduce N")
    if err > quad_tol:
        raise QuadratureBudgetError(
            f"estimated entry error {err:.3g} exceeds quad_tol={quad_tol:.3g}; raise the quadrature orders"
        )
    return OperatorMatrix(fine, w, dom, quad_tol, err, quad)


def eigen_spectrum(M: OperatorMatrix | np.ndarray, backend: str | None = None,
                   return_vectors: bool = False):
    """Full eigendecomposition, eigenvalues decreasing and clipped to ``[0, 1]``."""
    A = M.entries if isinstance(M, OperatorMatrix) else np.asarray(M)
    n = A.shape[0]
    if n == 0:
        spec = Spectrum(np.zeros(0), 0, 0)
        return (spec, np.zeros((0, 0))) if return_vectors else spec
    lam, vec = hermitian_eigh(A, backend)
    lam = lam[::-1]
    vec = vec[:, ::-1]
    norm = float(np.max(np.abs(lam))) if n else 0.0
    res = np.linalg.norm(A @ vec - vec * lam[None, :], axis=0)
    max_res = float(res.max())
    if max_res > RESIDUAL_TOL * max(norm, 1e-300) and max_res > 1e-300:
        raise EigenConvergenceError(f"eigenpair residual {max_res:.3g} exceeds {RESIDUAL_TOL:g} * ||M||")
    clipped = np.clip(lam, 0.0, 1.0)
    excess = np.abs(lam - clipped)
    max_clip = float(excess.max())
    if max_clip > CLIP_TOL:
        raise SpectrumRangeError(
            f"eigenvalue outside [0, 1] by {max_clip:.3g}; the Galerkin matrix is not a contraction"
        )
    # clipping can break exact monotonicity only at round-off level
    clipped = np.minimum.accumulate(clipped)
    spec = Spectrum(clipped, int(np.count_nonzero(excess)), n, max_clip, max_res, "galerkin")
    return (spec, vec) if return_vectors else spec


def trace_identities(M: OperatorMatrix | np.ndarray) -> tuple[float, float]:
    """``(sum M_nn, sum |M_mn|^2)``: the truncated ``tr L`` and ``tr L^2``."""
    A = M.entries if isinstance(M, OperatorMatrix) else np.asarray(M)
    return float(np.real(np.trace(A))), float(np.sum(np.abs(A) ** 2))


def hankel_schatten(spec: Spectrum | np.ndarray, p: float) -> float:
    """``||H||_p^p = sum (lambda - lambda^2)^{p/2}`` with negative round-off clipped."""
    if not (0 < p <= 2):
        raise DomainError(f"Schatten exponent must lie in (0, 2], got {p!r}")
    lam = spec.values if isinstance(spec, Spectrum) else np.asarray(spec, dtype=float)
    arg = np.clip(lam - lam * lam, 0.0, None)
    return float(np.sum(arg ** (0.5 * p)))


# --------------------------------------------------------------------------
# twisted convolution
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Field:
    """Samples on ``((i0 + i) * step, (j0 + j) * step)``; axis 0 is ``x``, axis 1 is ``xi``."""

    values: np.ndarray
    step: float
    origin: tuple[int, int] = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))
        if self.values.ndim != 2:
            raise GridMismatchError("field values must be a 2-D array")

    @classmethod
    def from_callable(cls, f, half_width: float, step: float) -> "Field":
        n = int(math.ceil(half_width / step))
        idx = np.arange(-n, n + 1)
        X, Y = np.meshgrid(idx * step, idx * step, indexing="ij")
        return cls(f(X, Y), step, (-n, -n))

    def l2_norm(self) -> float:
        return float(math.sqrt(np.sum(np.abs(self.values) ** 2)) * self.step)

    def coords(self):
        nx, ny = self.values.shape
        return (self.origin[0] + np.arange(nx)) * self.step, (self.origin[1] + np.arange(ny)) * self.step


@njit(parallel=True)
def _twisted_numba(F, G, fx, fy, gx, gy, ox, oy, out):
    nfx, nfy = F.shape
    ngx, ngy = G.shape
    nox, noy = out.shape
    # the phase factorises: e^{pi i x xi'} e^{-pi i x' xi}
    ey = np.empty((nfx, noy), dtype=np.complex128)
    for i in range(nfx):
        for b in range(noy):
            ph = -math.pi * fx[i] * oy[b]
            ey[i, b] = complex(math.cos(ph), math.sin(ph))
    for a in prange(nox):
        ex = np.empty(nfy, dtype=np.complex128)
        for j in range(nfy):
            ph = math.pi * ox[a] * fy[j]
            ex[j] = complex(math.cos(ph), math.sin(ph))
        row = np.zeros(noy, dtype=np.complex128)
        for i in range(nfx):
            k = a - i
            if k < 0 or k >= ngx:
                continue
            for b in range(noy):
                acc = 0.0 + 0.0j
                for j in range(max(0, b - ngy + 1), min(nfy, b + 1)):
                    acc += F[i, j] * ex[j] * G[k, b - j]
                row[b] += acc * ey[i, b]
        for b in range(noy):
            out[a, b] = row[b]


def _twisted_numpy(F, G, fx, fy, gx, gy, ox, oy, out):
    nfx, nfy = F.shape
    ngx = G.shape[0]
    # the phase splits: e^{pi i x xi'} on F's xi-axis and e^{-pi i x' xi} afterwards
    for a in range(out.shape[0]):
        x = ox[a]
        Fm = F * np.exp(1j * math.pi * x * fy)[None, :]
        acc = np.zeros(out.shape[1], dtype=complex)
        for i in range(nfx):
            k = a - i
            if k < 0 or k >= ngx:
                continue
            row = np.convolve(Fm[i], G[k])
            acc += row * np.exp(-1j * math.pi * fx[i] * oy)
        out[a] = acc


def twisted_convolution(F: Field, G: Field, backend: str | None = None) -> Field:
    """``(F natural G)(z) = int F(z') G(z - z') e^{pi i (x xi' - x' xi)} dz'`` on the lattice."""
    if not math.isclose(F.step, G.step, rel_tol=0, abs_tol=1e-15 * max(F.step, 1.0)):
        raise GridMismatchError(f"fields use different steps ({F.step} vs {G.step})")
    h = F.step
    fx, fy = F.coords()
    gx, gy = G.coords()
    nox = F.values.shape[0] + G.values.shape[0] - 1
    noy = F.values.shape[1] + G.values.shape[1] - 1
    o0 = (F.origin[0] + G.origin[0], F.origin[1] + G.origin[1])
    ox = (o0[0] + np.arange(nox)) * h
    oy = (o0[1] + np.arange(noy)) * h
    out = np.zeros((nox, noy), dtype=complex)
    if backend is None:
        fn = pick(_twisted_numba, _twisted_numpy)
    else:
        fn = _twisted_numba if backend == "numba" else _twisted_numpy
    fn(np.ascontiguousarray(F.values), np.ascontiguousarray(G.values), fx, fy, gx, gy, ox, oy, out)
    return Field(out * h * h, h, o0)
