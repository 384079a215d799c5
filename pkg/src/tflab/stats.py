"""Eigenvalue counting functions, plunge region and deviation from |Omega|."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import Domain

TIE_TOL = 1e-12


def _values(spec) -> np.ndarray:
    return np.asarray(getattr(spec, "values", spec), dtype=float)


def tau(delta: float) -> float:
    return max(1.0 / delta, 1.0 / (1.0 - delta))


def counting(spec, delta: float) -> int:
    """``#{lambda > delta}``; values within ``1e-12`` of ``delta`` count as not above it."""
    if not (0.0 < delta < 1.0):
        raise DomainError(f"threshold must lie in (0, 1), got {delta!r}")
    lam = _values(spec)
    return int(np.count_nonzero(lam > delta + TIE_TOL))


def plunge(spec, delta: float) -> int:
    """``#{delta < lambda <= 1 - delta}``."""
    if not (0.0 < delta < 0.5):
        raise DomainError(f"plunge threshold must lie in (0, 1/2), got {delta!r}")
    return counting(spec, delta) - counting(spec, 1.0 - delta)


def deviation(spec, dom: Domain | float, delta: float) -> float:
    area = dom if isinstance(dom, (int, float)) else dom.measure()
    return abs(counting(spec, delta) - area)


def a_omega(dom: Domain | float) -> int:
    area = dom if isinstance(dom, (int, float)) else dom.measure()
    return int(math.ceil(area - 1e-12 * max(area, 1.0))) if area > 0 else 0


@dataclass(frozen=True)
class CountingReport:
    delta: float
    count: int
    deviation: float
    plunge: int
    a_omega: int
    tau: float

    COLUMNS = ("delta", "count", "deviation", "plunge", "a_omega", "tau")

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in self.COLUMNS)


def counting_report(spec, dom: Domain | float, delta: float) -> CountingReport:
    pl = plunge(spec, min(delta, 1.0 - delta)) if delta != 0.5 else 0
    return CountingReport(float(delta), counting(spec, delta), deviation(spec, dom, delta), pl,
                          a_omega(dom), tau(delta))
