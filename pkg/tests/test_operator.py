from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from tflab.errors import BasisSizeError, DomainError, GridMismatchError, QuadratureBudgetError, SpectrumRangeError
from tflab.geometry import Disk, Polygon, Rect, Sector
from tflab.operator import (
    Field,
    Spectrum,
    assemble_galerkin,
    eigen_spectrum,
    hankel_schatten,
    trace_identities,
    twisted_convolution,
)
from tflab.quadrature import QuadSpec
from tflab.special import reg_lower_gamma
from tflab.windows import Window

G = Window.gaussian()


@pytest.fixture(scope="module")
def disk2_128():
    return assemble_galerkin(G, Disk(2.0), 128)


def lens_trace_sq(R: float) -> float:
    """int int_{D x D} e^{-pi |z - z'|^2} = int_0^{2R} e^{-pi s^2} lens(s) 2 pi s ds."""
    def lens(s):
        return 2 * R * R * math.acos(s / (2 * R)) - 0.5 * s * math.sqrt(4 * R * R - s * s)

    val, _ = integrate.quad(lambda s: math.exp(-math.pi * s * s) * lens(s) * 2 * math.pi * s, 0, 2 * R,
                            epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


class TestGalerkin:
    def test_disk_diagonal(self):
        M = assemble_galerkin(G, Disk(2.0), 64)
        A = M.entries
        off = A - np.diag(np.diag(A))
        assert np.abs(off).max() < 1e-10
        exact = [reg_lower_gamma(n + 1, 4 * math.pi) for n in range(64)]
        np.testing.assert_allclose(np.diag(A).real, exact, atol=1e-12)
        assert M.quad_error < 1e-9

    def test_empty_domain(self):
        M = assemble_galerkin(G, Disk(0.0), 8)
        assert not np.any(M.entries)
        assert trace_identities(M) == (0.0, 0.0)

    def test_half_disk_m01(self):
        M = assemble_galerkin(G, Sector(1.0, 0.0, math.pi), 16)
        # V_g h_1 conj(V_g h_0) = sqrt(pi) (x - i xi) e^{-pi |z|^2}; integrate in polar coordinates
        re, _ = integrate.dblquad(lambda r, t: math.sqrt(math.pi) * r * math.cos(t) * math.exp(-math.pi * r * r) * r,
                                  0, math.pi, 0, 1, epsabs=1e-14, epsrel=1e-14)
        im, _ = integrate.dblquad(lambda r, t: -math.sqrt(math.pi) * r * math.sin(t) * math.exp(-math.pi * r * r) * r,
                                  0, math.pi, 0, 1, epsabs=1e-14, epsrel=1e-14)
        assert abs(M.entries[0, 1]) > 0.1
        assert M.entries[0, 1] == pytest.approx(re + 1j * im, abs=1e-8)
        np.testing.assert_allclose(M.entries, M.entries.conj().T, atol=1e-15)

    def test_polygon_matches_rect(self):
        sq = Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))
        A = assemble_galerkin(G, sq, 12).entries
        B = assemble_galerkin(G, Rect((1.0, 1.0)), 12).entries
        np.testing.assert_allclose(A, B, atol=1e-12)

    def test_sampled_window_matches_closed(self):
        t = np.arange(-7, 7.0001, 0.02)
        ws = Window.sampled(2**0.25 * np.exp(-np.pi * t * t), 0.02, t0=t[0])
        A = assemble_galerkin(ws, Disk(1.0), 10, QuadSpec(32, 64)).entries
        B = assemble_galerkin(G, Disk(1.0), 10, QuadSpec(32, 64)).entries
        np.testing.assert_allclose(A, B, atol=1e-9)

    def test_errors(self):
        with pytest.raises(BasisSizeError):
            assemble_galerkin(G, Disk(1.0), 513)
        with pytest.raises(BasisSizeError):
            assemble_galerkin(G, Disk(1.0), 0)
        with pytest.raises(QuadratureBudgetError):
            assemble_galerkin(G, Disk(2.0), 64, QuadSpec(4, 8))


class TestSpectrum:
    def test_analytic_match(self, disk2_128):
        spec = eigen_spectrum(disk2_128)
        exact = np.array([reg_lower_gamma(k + 1, 4 * math.pi) for k in range(101)])
        assert np.abs(spec.values[:101] - exact).max() < 1e-6
        assert np.all(np.diff(spec.values) <= 0)

    def test_diagonal(self):
        d = np.array([0.2, 0.9, 0.0, 0.5])
        spec = eigen_spectrum(np.diag(d).astype(complex))
        np.testing.assert_allclose(spec.values, np.sort(d)[::-1], atol=1e-15)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(0)
        M = assemble_galerkin(G, Rect((1.5, 1.0)), 24).entries
        Q, _ = np.linalg.qr(rng.standard_normal((24, 24)) + 1j * rng.standard_normal((24, 24)))
        a = eigen_spectrum(M).values
        b = eigen_spectrum(Q @ M @ Q.conj().T).values
        np.testing.assert_allclose(a, b, atol=1e-8)

    def test_eigenvectors(self):
        M = assemble_galerkin(G, Sector(1.5, 0.0, 2.0), 20)
        spec, V = eigen_spectrum(M, return_vectors=True)
        np.testing.assert_allclose(M.entries @ V, V * spec.values, atol=1e-10)
        np.testing.assert_allclose(V.conj().T @ V, np.eye(20), atol=1e-12)

    def test_range_error(self):
        with pytest.raises(SpectrumRangeError):
            eigen_spectrum(np.diag([1.5, 0.2]).astype(complex))
        with pytest.raises(SpectrumRangeError):
            Spectrum.from_values([1.1, 0.5])
        with pytest.raises(DomainError):
            Spectrum(np.array([0.2, 0.5]))

    def test_from_values_clips(self):
        s = Spectrum.from_values([0.5, 1 + 1e-10, -1e-12])
        assert s.values.tolist() == [1.0, 0.5, 0.0]
        assert s.clip_count == 2


class TestTraces:
    def test_trace(self, disk2_128):
        tr, _ = trace_identities(disk2_128)
        assert tr <= 4 * math.pi + 1e-12
        assert 4 * math.pi - tr < 1e-6

    def test_trace_sq_lens_oracle(self, disk2_128):
        _, tr2 = trace_identities(disk2_128)
        assert tr2 == pytest.approx(lens_trace_sq(2.0), abs=1e-5)

    def test_hankel(self, disk2_128):
        assert hankel_schatten(np.array([1.0, 1.0, 0.0, 0.0]), 0.5) == 0.0
        assert hankel_schatten(np.array([0.5]), 2.0) == pytest.approx(0.25)
        spec = eigen_spectrum(disk2_128)
        lam = np.array([reg_lower_gamma(k + 1, 4 * math.pi) for k in range(128)])
        assert hankel_schatten(spec, 1.0) == pytest.approx(math.fsum(np.sqrt(lam * (1 - lam))), abs=1e-6)
        assert hankel_schatten(spec, 2.0) == pytest.approx(math.fsum(lam * (1 - lam)), abs=1e-6)
        with pytest.raises(DomainError):
            hankel_schatten(spec, 3.0)


def smooth_random_field(rng, step, half):
    """A few modulated Gaussian bumps, cut off smoothly to a compact support."""
    n_b = rng.integers(1, 4)
    c = rng.uniform(-0.5, 0.5, (n_b, 2))
    a = rng.uniform(2.0, 6.0, n_b)
    k = rng.uniform(-1.5, 1.5, (n_b, 2))
    amp = rng.standard_normal(n_b) + 1j * rng.standard_normal(n_b)

    def f(X, Y):
        out = np.zeros(X.shape, complex)
        for j in range(n_b):
            out += amp[j] * np.exp(-a[j] * ((X - c[j, 0]) ** 2 + (Y - c[j, 1]) ** 2)
                                   + 2j * np.pi * (k[j, 0] * X + k[j, 1] * Y))
        r2 = (X * X + Y * Y) / (half * half)
        with np.errstate(divide="ignore", over="ignore"):
            cut = np.where(r2 < 1, np.exp(-1.0 / np.maximum(1 - r2, 1e-300)) * math.e, 0.0)
        return out * cut

    return Field.from_callable(f, half, step)


class TestTwisted:
    def test_gaussian_norm(self):
        F = Field.from_callable(lambda X, Y: np.exp(-np.pi * (X**2 + Y**2)), 3.5, 0.1)
        H = twisted_convolution(F, F)
        assert H.l2_norm() == pytest.approx(1 / math.sqrt(5), abs=1e-5)
        # pointwise: (1/2) e^{-5 pi |z|^2 / 8}
        x, y = H.coords()
        exact = 0.5 * np.exp(-5 * np.pi * (x[:, None] ** 2 + y[None, :] ** 2) / 8)
        assert np.abs(H.values - exact).max() < 1e-9

    def test_delta_identity(self):
        rng = np.random.default_rng(1)
        F = smooth_random_field(rng, 0.1, 1.0)
        delta = Field(np.array([[1 / 0.01]]), 0.1, (0, 0))
        H = twisted_convolution(F, delta)
        np.testing.assert_allclose(H.values, F.values, atol=1e-12)

    def test_backends_agree(self):
        rng = np.random.default_rng(2)
        F = smooth_random_field(rng, 0.1, 1.0)
        G2 = smooth_random_field(rng, 0.1, 0.8)
        a = twisted_convolution(F, G2, "numba").values
        b = twisted_convolution(F, G2, "numpy").values
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_step_mismatch(self):
        F = Field(np.ones((2, 2)), 0.1)
        with pytest.raises(GridMismatchError):
            twisted_convolution(F, Field(np.ones((2, 2)), 0.2))

    def test_norm_inequality_random_pairs(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            F = smooth_random_field(rng, 0.08, rng.uniform(0.6, 1.2))
            G2 = smooth_random_field(rng, 0.08, rng.uniform(0.6, 1.2))
            lhs = twisted_convolution(F, G2).l2_norm()
            assert lhs <= F.l2_norm() * G2.l2_norm() * (1 + 1e-6) + 1e-12
