from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tflab.errors import DomainError
from tflab.geometry import Disk, Polygon, Rect, Sector, dilate
from tflab.quadrature import QuadSpec, domain_rule, triangulate

L_SHAPE = Polygon(((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)))


@pytest.mark.parametrize("dom", [Disk(2.0, (1.0, -1.0)), Rect((1.3, 0.7), (0.2, 0.1)), L_SHAPE,
                                 Sector(1.5, 0.3, 2.0), dilate(L_SHAPE, 1.7)])
def test_area(dom):
    assert domain_rule(dom).w.sum() == pytest.approx(dom.measure(), rel=1e-13)


def test_disk_gaussian_mass():
    rule = domain_rule(Disk(2.0))
    val = np.sum(rule.w * np.exp(-np.pi * (rule.x**2 + rule.xi**2)))
    assert val == pytest.approx(1 - math.exp(-4 * math.pi), abs=1e-14)


def test_polynomial_moments_l_shape():
    rule = domain_rule(L_SHAPE)
    # int x^2 y over the L shape = int_[0,2]x[0,1] + int_[0,1]x[1,2]
    exact = (8 / 3) * (1 / 2) + (1 / 3) * (3 / 2)
    assert np.sum(rule.w * rule.x**2 * rule.xi) == pytest.approx(exact, rel=1e-13)


def test_sector_moment():
    rule = domain_rule(Sector(1.0, 0.0, math.pi))
    # int_{upper half disk} xi dz = 2/3
    assert np.sum(rule.w * rule.xi) == pytest.approx(2 / 3, rel=1e-13)
    assert np.sum(rule.w * rule.x) == pytest.approx(0.0, abs=1e-14)


def test_empty_domain():
    assert domain_rule(Disk(0.0)).size == 0


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadSpec(n_radial=0)
    d = QuadSpec().doubled()
    assert (d.n_radial, d.n_angular, d.tri_order, d.rect_order) == (128, 256, 20, 32)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.integers(0, 10_000))
def test_property_triangulation_star_polygons(n, seed):
    rng = np.random.default_rng(seed)
    th = np.sort(rng.uniform(0, 2 * np.pi, n))
    gaps = np.diff(np.r_[th, th[0] + 2 * np.pi])
    # vertices sorted by angle give a simple polygon when the origin is interior
    if gaps.min() < 1e-3 or gaps.max() >= 0.9 * np.pi:
        return
    r = rng.uniform(0.3, 1.0, n)
    v = np.c_[r * np.cos(th), r * np.sin(th)]
    poly = Polygon(tuple(map(tuple, v)))
    tris = triangulate(poly.array)
    assert len(tris) == n - 2
    area = sum(0.5 * abs((t[1, 0] - t[0, 0]) * (t[2, 1] - t[0, 1]) - (t[1, 1] - t[0, 1]) * (t[2, 0] - t[0, 0]))
               for t in tris)
    assert area == pytest.approx(poly.measure(), rel=1e-12)
    assert domain_rule(poly).w.sum() == pytest.approx(poly.measure(), rel=1e-12)
