"""Benchmark the numba kernels against their numpy fallbacks.

Run: python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run once untimed (JIT compilation), then timed ``repeat``
times with each backend; the best time is reported with the max difference
between the two backends' results.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from tflab import HAS_NUMBA
from tflab.eigen import symmetric_eigh
from tflab.geometry import Polygon, distance_to_boundary, kappa_estimate
from tflab.operator import Field, twisted_convolution
from tflab.windows import Window, hermite_functions, stft_basis


def _best(fn, repeat: int) -> tuple[float, object]:
    out = fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _diff(a, b) -> float:
    if isinstance(a, tuple):
        return max(_diff(x, y) for x, y in zip(a, b))
    if hasattr(a, "values") and not isinstance(a, np.ndarray):
        a, b = a.values, b.values
    if hasattr(a, "value"):
        a, b = a.value, b.value
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def cases():
    rng = np.random.default_rng(0)
    t = np.linspace(-8, 8, 1025)
    w = Window.sampled(hermite_functions(0, t)[0], t[1] - t[0], t0=-8.0)
    x, xi = rng.uniform(-2, 2, (2, 2000))
    yield "stft_basis sampled (2000 pts, N=64)", lambda b: stft_basis(w, x, xi, 64, backend=b)

    A = rng.standard_normal((200, 200))
    A = A + A.T
    yield "symmetric_eigh (n=200)", lambda b: symmetric_eigh(A, backend=b)[0]

    poly = Polygon(((0, 0), (2, 0), (2, 1), (1, 1.5), (0, 1)))
    yield "kappa_estimate (pentagon)", lambda b: kappa_estimate(poly, 0.5, backend=b)

    px, py = rng.uniform(-0.5, 2.5, (2, 20000))
    yield "distance_to_boundary (20000 pts)", lambda b: distance_to_boundary(poly, px, py, backend=b)

    F = Field.from_callable(lambda X, Y: np.exp(-np.pi * (X**2 + Y**2)), 1.5, 0.1)
    G = Field.from_callable(lambda X, Y: np.exp(-np.pi * ((X - 0.3) ** 2 + Y**2)), 1.5, 0.1)
    yield "twisted_convolution (31x31)", lambda b: twisted_convolution(F, G, backend=b)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not HAS_NUMBA:
        print("numba is not installed; only the numpy backend is available")
        return
    print(f"{'kernel':40s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases():
        t_nb, r_nb = _best(lambda: fn("numba"), args.repeat)
        t_np, r_np = _best(lambda: fn("numpy"), args.repeat)
        print(f"{name:40s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f} {_diff(r_nb, r_np):10.2e}")


if __name__ == "__main__":
    main()
