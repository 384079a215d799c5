"""Phase-space quadrature rules over the supported domains."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, UnsupportedShapeError
from .geometry import Dilated, Disk, Domain, Polygon, Rect, Sector, _shoelace

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadSpec:
    """Orders of the per-shape rules; :meth:`doubled` gives the error-estimate rule."""

    n_radial: int = 64
    n_angular: int = 128
    tri_order: int = 10
    tri_h: float = 0.25
    rect_order: int = 16
    rect_panel: float = 0.5

    def __post_init__(self):
        if min(self.n_radial, self.n_angular, self.tri_order, self.rect_order) < 1:
            raise DomainError("quadrature orders must be >= 1")
        if not (self.tri_h > 0 and self.rect_panel > 0):
            raise DomainError("quadrature panel sizes must be > 0")

    def doubled(self) -> "QuadSpec":
        return replace(
            self,
            n_radial=2 * self.n_radial,
            n_angular=2 * self.n_angular,
            tri_order=2 * self.tri_order,
            rect_order=2 * self.rect_order,
        )

    def to_dict(self) -> dict:
        return {
            "n_radial": self.n_radial,
            "n_angular": self.n_angular,
            "tri_order": self.tri_order,
            "tri_h": self.tri_h,
            "rect_order": self.rect_order,
            "rect_panel": self.rect_panel,
        }


@dataclass(frozen=True, eq=False)
class QuadRule:
    x: np.ndarray
    xi: np.ndarray
    w: np.ndarray

    @property
    def size(self) -> int:
        return self.w.size

    def integrate(self, f) -> complex:
        return np.sum(self.w * f(self.x, self.xi))


def _gl01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def disk_rule(dom: Disk, n_radial: int, n_angular: int) -> QuadRule:
    """Gauss-Legendre in ``r`` times the trapezoid rule in angle.

    The periodic trapezoid rule integrates ``e^{i k theta}`` exactly for
    ``|k| < n_angular``, which keeps radial Galerkin matrices diagonal.
    """
    R = dom.radius
    r, wr = _gl01(n_radial)
    r = r * R
    wr = wr * R
    th = TWO_PI * np.arange(n_angular) / n_angular
    wt = np.full(n_angular, TWO_PI / n_angular)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    w = (wr * r)[:, None] * wt[None, :]
    cx, cy = dom.center
    return QuadRule((cx + rr * np.cos(tt)).ravel(), (cy + rr * np.sin(tt)).ravel(), w.ravel())


def sector_rule(dom: Sector, n_radial: int, n_angular: int) -> QuadRule:
    if dom.span >= TWO_PI:
        return disk_rule(Disk(dom.radius, dom.center), n_radial, n_angular)
    R = dom.radius
    r, wr = _gl01(n_radial)
    r = r * R
    wr = wr * R
    s, ws = _gl01(n_angular)
    th = dom.theta0 + dom.span * s
    wt = dom.span * ws
    rr, tt = np.meshgrid(r, th, indexing="ij")
    w = (wr * r)[:, None] * wt[None, :]
    cx, cy = dom.center
    return QuadRule((cx + rr * np.cos(tt)).ravel(), (cy + rr * np.sin(tt)).ravel(), w.ravel())


def _composite_1d(a: float, b: float, panel: float, order: int):
    n_pan = max(1, int(math.ceil((b - a) / panel - 1e-12)))
    edges = np.linspace(a, b, n_pan + 1)
    x, w = _gl01(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    return (lo + (hi - lo) * x[None, :]).ravel(), ((hi - lo) * w[None, :]).ravel()


def rect_rule(dom: Rect, order: int, panel: float) -> QuadRule:
    x0, y0, x1, y1 = dom.bbox()
    xs, wx = _composite_1d(x0, x1, panel, order)
    ys, wy = _composite_1d(y0, y1, panel, order)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return QuadRule(X.ravel(), Y.ravel(), np.outer(wx, wy).ravel())


def triangulate(v: np.ndarray) -> list[np.ndarray]:
    """Ear clipping for a simple counter-clockwise polygon."""
    idx = list(range(v.shape[0]))
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * v.shape[0] ** 2:
            raise DomainError("ear clipping failed; polygon may not be simple")
        n = len(idx)
        for j in range(n):
            ia, ib, ic = idx[j - 1], idx[j], idx[(j + 1) % n]
            a, b, c = v[ia], v[ib], v[ic]
            if cross(a, b, c) <= 0:
                continue
            inside = False
            for k in idx:
                if k in (ia, ib, ic):
                    continue
                p = v[k]
                if cross(a, b, p) >= 0 and cross(b, c, p) >= 0 and cross(c, a, p) >= 0:
                    inside = True
                    break
            if not inside:
                tris.append(np.array([a, b, c]))
                idx.pop(j)
                break
        else:
            # only collinear vertices left: drop one
            idx.pop(0)
    if len(idx) == 3:
        t = v[idx]
        if abs(_shoelace(t)) > 0:
            tris.append(t)
    return tris


def _split(tri: np.ndarray, h: float) -> list[np.ndarray]:
    a, b, c = tri
    diam = max(np.linalg.norm(a - b), np.linalg.norm(b - c), np.linalg.norm(c - a))
    if diam <= h:
        return [tri]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    out = []
    for t in (np.array([a, ab, ca]), np.array([ab, b, bc]), np.array([ca, bc, c]), np.array([ab, bc, ca])):
        out.extend(_split(t, h))
    return out


def triangle_rule(tris: list[np.ndarray], order: int) -> QuadRule:
    """Collapsed (Duffy) tensor Gauss-Legendre rule on each triangle."""
    s, ws = _gl01(order)
    S, T = np.meshgrid(s, s, indexing="ij")
    W = np.outer(ws, ws) * S
    xs, ys, ws_all = [], [], []
    for a, b, c in tris:
        e1 = b - a
        e2 = c - a
        jac = abs(e1[0] * e2[1] - e1[1] * e2[0])
        px = a[0] + S * ((1 - T) * e1[0] + T * e2[0])
        py = a[1] + S * ((1 - T) * e1[1] + T * e2[1])
        xs.append(px.ravel())
        ys.append(py.ravel())
        ws_all.append((W * jac).ravel())
    if not xs:
        return QuadRule(np.zeros(0), np.zeros(0), np.zeros(0))
    return QuadRule(np.concatenate(xs), np.concatenate(ys), np.concatenate(ws_all))


def polygon_rule(dom: Polygon, order: int, h: float) -> QuadRule:
    tris = []
    for t in triangulate(dom.array):
        tris.extend(_split(t, h))
    return triangle_rule(tris, order)


def domain_rule(dom: Domain, spec: QuadSpec = QuadSpec()) -> QuadRule:
    dom = dom.resolve()
    if dom.measure() == 0.0:
        return QuadRule(np.zeros(0), np.zeros(0), np.zeros(0))
    if isinstance(dom, Disk):
        return disk_rule(dom, spec.n_radial, spec.n_angular)
    if isinstance(dom, Sector):
        return sector_rule(dom, spec.n_radial, spec.n_angular)
    if isinstance(dom, Rect):
        return rect_rule(dom, spec.rect_order, spec.rect_panel)
    if isinstance(dom, Polygon):
        return polygon_rule(dom, spec.tri_order, spec.tri_h)
    if isinstance(dom, Dilated):  # pragma: no cover - resolve() removes these
        return domain_rule(dom.resolve(), spec)
    raise UnsupportedShapeError(f"no quadrature rule for {type(dom).__name__}")
