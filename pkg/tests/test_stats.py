from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tflab.analytic import disk_eigenvalues
from tflab.errors import DomainError
from tflab.geometry import Disk, Rect
from tflab.stats import a_omega, counting, counting_report, deviation, plunge, tau
from tflab.special import reg_lower_gamma


def test_counting_examples():
    assert counting(np.array([1.0, 1.0, 0.0]), 0.5) == 2
    lam = np.array([0.9, 0.5, 0.1])
    assert counting(lam, 0.95) == 0
    assert counting(lam, 0.5) == 1  # ties are not above the threshold
    assert counting(lam, 0.5 - 1e-13) == 1
    with pytest.raises(DomainError):
        counting(lam, 1.0)


def test_counting_disk_enumeration():
    lam = disk_eigenvalues(2.0, 80).values
    brute = sum(1 for k in range(200) if reg_lower_gamma(k + 1, 4 * math.pi) > 0.5)
    assert counting(lam, 0.5) == brute


def test_plunge_examples():
    assert plunge(np.array([1.0, 1.0, 0.0, 0.0]), 0.1) == 0
    assert plunge(np.array([0.9, 0.5, 0.1]), 0.2) == 1
    with pytest.raises(DomainError):
        plunge(np.array([0.5]), 0.6)


def test_plunge_grows_linearly_in_R():
    Rs = np.arange(2, 9)
    counts = [plunge(disk_eigenvalues(R, int(4 * math.pi * R * R) + 50).values, 0.01) for R in Rs]
    slope1 = np.polyfit(Rs[:5], counts[:5], 1)[0]
    slope2 = np.polyfit(Rs, counts, 1)[0]
    assert slope1 > 0
    assert slope2 == pytest.approx(slope1, rel=0.10)


def test_deviation():
    assert deviation(np.zeros(0), Disk(0.0), 0.3) == 0.0
    lam = disk_eigenvalues(2.0, 80).values
    assert deviation(lam, Disk(2.0), 0.5) == pytest.approx(abs(counting(lam, 0.5) - 4 * math.pi))


def test_deviation_piecewise_constant():
    lam = disk_eigenvalues(2.0, 60).values
    mids = 0.5 * (lam[1:30] + lam[2:31])
    for i, m in enumerate(mids):
        lo, hi = lam[i + 2], lam[i + 1]
        if hi - lo < 1e-9:
            continue
        a = deviation(lam, Disk(2.0), lo + 0.25 * (hi - lo))
        b = deviation(lam, Disk(2.0), lo + 0.75 * (hi - lo))
        assert a == b


def test_a_omega():
    assert a_omega(Disk(2.0)) == 13
    assert a_omega(Rect((1.0, 1.0))) == 1
    assert a_omega(Disk(0.0)) == 0
    assert a_omega(3.0 + 1e-14) == 3


def test_report():
    lam = disk_eigenvalues(2.0, 80).values
    r = counting_report(lam, Disk(2.0), 0.1)
    assert r.row() == (0.1, counting(lam, 0.1), deviation(lam, Disk(2.0), 0.1), plunge(lam, 0.1), 13, 10.0)
    assert counting_report(lam, Disk(2.0), 0.9).plunge == plunge(lam, 0.1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=0, max_size=40), st.floats(0.01, 0.49))
def test_property_counting(vals, delta):
    lam = np.sort(np.array(vals, dtype=float))[::-1]
    assert 0 <= counting(lam, 1 - delta) <= counting(lam, delta) <= lam.size
    assert plunge(lam, delta) == counting(lam, delta) - counting(lam, 1 - delta)
    assert tau(delta) == pytest.approx(tau(1 - delta), rel=1e-13)
