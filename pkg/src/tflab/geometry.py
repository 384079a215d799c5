"""Planar compact domains and the boundary quantities used by the bounds.

Every shape exposes its boundary as two primitive arrays: segments
``(x0, y0, x1, y1)`` and counter-clockwise circular arcs
``(cx, cy, R, theta0, theta1)`` with ``0 < theta1 - theta0 <= 2 pi``.  The
Ahlfors ratio, distance function and offset curves are all computed from
those primitives.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from ._accel import njit, pick
from .errors import (
    DegenerateDomainError,
    DomainError,
    GridCoverageError,
    UnsupportedShapeError,
)

TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------------------
# shapes
# --------------------------------------------------------------------------

class Domain:
    """Common interface; concrete shapes are frozen dataclasses below."""

    def measure(self) -> float:
        raise NotImplementedError

    def perimeter(self) -> float:
        raise NotImplementedError

    def primitives(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def contains(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def bbox(self) -> tuple[float, float, float, float]:
        raise NotImplementedError

    def scaled(self, f: float) -> "Domain":
        raise NotImplementedError

    @property
    def degenerate(self) -> bool:
        return self.measure() <= 0.0

    def resolve(self) -> "Domain":
        return self


def _no_segments():
    return np.zeros((0, 4))


def _no_arcs():
    return np.zeros((0, 5))


@dataclass(frozen=True)
class Disk(Domain):
    radius: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.radius >= 0:
            raise DegenerateDomainError(f"disk radius must be >= 0, got {self.radius!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def measure(self):
        return math.pi * self.radius**2

    def perimeter(self):
        return TWO_PI * self.radius

    def primitives(self):
        if self.radius == 0:
            return _no_segments(), _no_arcs()
        cx, cy = self.center
        return _no_segments(), np.array([[cx, cy, self.radius, 0.0, TWO_PI]])

    def contains(self, x, y):
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) <= self.radius

    def bbox(self):
        cx, cy = self.center
        R = self.radius
        return cx - R, cy - R, cx + R, cy + R

    def scaled(self, f):
        return Disk(self.radius * f, (self.center[0] * f, self.center[1] * f))

    is_convex = True


@dataclass(frozen=True)
class Rect(Domain):
    widths: tuple[float, float] = (1.0, 1.0)
    corner: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        w, h = (float(v) for v in self.widths)
        if w < 0 or h < 0:
            raise DegenerateDomainError("rectangle widths must be >= 0")
        object.__setattr__(self, "widths", (w, h))
        object.__setattr__(self, "corner", tuple(float(c) for c in self.corner))

    def measure(self):
        return self.widths[0] * self.widths[1]

    def perimeter(self):
        return 2.0 * (self.widths[0] + self.widths[1])

    def vertices(self) -> np.ndarray:
        x0, y0 = self.corner
        w, h = self.widths
        return np.array([[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]])

    def primitives(self):
        v = self.vertices()
        return np.hstack([v, np.roll(v, -1, axis=0)]), _no_arcs()

    def contains(self, x, y):
        x0, y0 = self.corner
        w, h = self.widths
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= x0) & (x <= x0 + w) & (y >= y0) & (y <= y0 + h)

    def bbox(self):
        x0, y0 = self.corner
        return x0, y0, x0 + self.widths[0], y0 + self.widths[1]

    def scaled(self, f):
        return Rect((self.widths[0] * f, self.widths[1] * f), (self.corner[0] * f, self.corner[1] * f))

    is_convex = True


def _shoelace(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 < 0 and d3 * d4 < 0:
        return True

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - 1e-15 <= c[0] <= max(a[0], b[0]) + 1e-15
                and min(a[1], b[1]) - 1e-15 <= c[1] <= max(a[1], b[1]) + 1e-15)

    return ((d1 == 0 and on_seg(q1, q2, p1)) or (d2 == 0 and on_seg(q1, q2, p2))
            or (d3 == 0 and on_seg(p1, p2, q1)) or (d4 == 0 and on_seg(p1, p2, q2)))


@dataclass(frozen=True)
class Polygon(Domain):
    """Simple polygon; vertices are stored counter-clockwise."""

    vertices: tuple = field(default=())

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise DegenerateDomainError("polygon needs at least 3 (x, y) vertices")
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        n = v.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise DegenerateDomainError(
                        f"polygon edges {i} and {j} intersect; vertices must form a simple polygon"
                    )
        if _shoelace(v) < 0:
            v = v[::-1]
        object.__setattr__(self, "vertices", tuple(map(tuple, v)))

    @classmethod
    def from_csv(cls, path) -> "Polygon":
        """Read ``x,y`` rows (header row required)."""
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        if not rows:
            raise DegenerateDomainError(f"{path}: empty polygon file")
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
        else:
            raise DegenerateDomainError(f"{path}: header row required (x,y)")
        return cls(tuple((float(r[0]), float(r[1])) for r in rows))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    def measure(self):
        return max(_shoelace(self.array), 0.0)

    def perimeter(self):
        v = self.array
        return float(np.sum(np.hypot(*(np.roll(v, -1, axis=0) - v).T)))

    def primitives(self):
        v = self.array
        return np.hstack([v, np.roll(v, -1, axis=0)]), _no_arcs()

    def contains(self, x, y):
        return _point_in_polygon(self.array, np.asarray(x, float), np.asarray(y, float))

    def bbox(self):
        v = self.array
        return float(v[:, 0].min()), float(v[:, 1].min()), float(v[:, 0].max()), float(v[:, 1].max())

    def scaled(self, f):
        return Polygon(tuple(map(tuple, self.array * f)))

    @property
    def is_convex(self) -> bool:
        v = self.array
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        return bool(np.all(cross >= -1e-12 * np.max(np.abs(cross))))


def _point_in_polygon(v, x, y):
    inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    n = v.shape[0]
    for i in range(n):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    # closed set: boundary points count as inside
    segs = np.hstack([v, np.roll(v, -1, axis=0)])
    on = _distance_numpy(segs, _no_arcs(), np.ravel(x), np.ravel(y)).reshape(inside.shape) <= 1e-13
    return inside | on


@dataclass(frozen=True)
class Sector(Domain):
    """Circular sector ``{c + rho e^{i t}: rho <= R, theta0 <= t <= theta1}``."""

    radius: float = 1.0
    theta0: float = 0.0
    theta1: float = math.pi
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        span = self.theta1 - self.theta0
        if not (0 < span <= TWO_PI) or self.radius < 0:
            raise DegenerateDomainError("sector needs 0 < theta1 - theta0 <= 2 pi and R >= 0")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def span(self) -> float:
        return self.theta1 - self.theta0

    def measure(self):
        return 0.5 * self.span * self.radius**2

    def perimeter(self):
        if self.span >= TWO_PI:
            return TWO_PI * self.radius
        return self.radius * (self.span + 2.0)

    def primitives(self):
        cx, cy = self.center
        R = self.radius
        arcs = np.array([[cx, cy, R, self.theta0, self.theta1]])
        if self.span >= TWO_PI:
            return _no_segments(), arcs
        a = (cx + R * math.cos(self.theta0), cy + R * math.sin(self.theta0))
        b = (cx + R * math.cos(self.theta1), cy + R * math.sin(self.theta1))
        segs = np.array([[cx, cy, a[0], a[1]], [b[0], b[1], cx, cy]])
        return segs, arcs

    def contains(self, x, y):
        dx = np.asarray(x) - self.center[0]
        dy = np.asarray(y) - self.center[1]
        ang = np.mod(np.arctan2(dy, dx) - self.theta0, TWO_PI)
        return (np.hypot(dx, dy) <= self.radius) & ((ang <= self.span + 1e-15) | (np.hypot(dx, dy) == 0))

    def bbox(self):
        cx, cy = self.center
        R = self.radius
        return cx - R, cy - R, cx + R, cy + R

    def scaled(self, f):
        return Sector(self.radius * f, self.theta0, self.theta1, (self.center[0] * f, self.center[1] * f))

    @property
    def is_convex(self) -> bool:
        return self.span <= math.pi


@dataclass(frozen=True)
class Dilated(Domain):
    """``factor * base`` (dilation about the origin)."""

    base: Domain
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise DomainError(f"dilation factor must be > 0, got {self.factor!r}")

    def resolve(self) -> Domain:
        return self.base.resolve().scaled(self.factor)

    def measure(self):
        return self.factor**2 * self.base.measure()

    def perimeter(self):
        return self.factor * self.base.perimeter()

    def primitives(self):
        return self.resolve().primitives()

    def contains(self, x, y):
        return self.base.contains(np.asarray(x) / self.factor, np.asarray(y) / self.factor)

    def bbox(self):
        return tuple(self.factor * b for b in self.base.bbox())

    def scaled(self, f):
        return Dilated(self.base, self.factor * f)

    @property
    def is_convex(self) -> bool:
        return self.resolve().is_convex


def measure(dom: Domain) -> float:
    return dom.measure()


def perimeter(dom: Domain) -> float:
    return dom.perimeter()


def dilate(dom: Domain, R: float) -> Dilated:
    if isinstance(dom, Dilated):
        return Dilated(dom.base, dom.factor * R)
    return Dilated(dom, R)


def domain_from_spec(spec: dict) -> Domain:
    """Build a domain from a JSON-style dict (used by the CLI)."""
    kind = spec.get("kind")
    if kind == "disk":
        return Disk(float(spec["radius"]), tuple(spec.get("center", (0.0, 0.0))))
    if kind == "rect":
        return Rect(tuple(spec["widths"]), tuple(spec.get("corner", (0.0, 0.0))))
    if kind == "polygon":
        if "csv" in spec:
            return Polygon.from_csv(spec["csv"])
        return Polygon(tuple(map(tuple, spec["vertices"])))
    if kind == "sector":
        return Sector(float(spec["radius"]), float(spec["theta0"]), float(spec["theta1"]),
                      tuple(spec.get("center", (0.0, 0.0))))
    if kind == "dilated":
        return dilate(domain_from_spec(spec["base"]), float(spec["factor"]))
    raise DomainError(f"unknown domain kind {kind!r}")


def domain_to_spec(dom: Domain) -> dict:
    if isinstance(dom, Disk):
        return {"kind": "disk", "radius": dom.radius, "center": list(dom.center)}
    if isinstance(dom, Rect):
        return {"kind": "rect", "widths": list(dom.widths), "corner": list(dom.corner)}
    if isinstance(dom, Polygon):
        return {"kind": "polygon", "vertices": [list(v) for v in dom.vertices]}
    if isinstance(dom, Sector):
        return {"kind": "sector", "radius": dom.radius, "theta0": dom.theta0,
                "theta1": dom.theta1, "center": list(dom.center)}
    if isinstance(dom, Dilated):
        return {"kind": "dilated", "base": domain_to_spec(dom.base), "factor": dom.factor}
    raise DomainError(f"cannot serialise {type(dom).__name__}")


# --------------------------------------------------------------------------
# boundary length inside a ball, distance to the boundary
# --------------------------------------------------------------------------

@njit
def _seg_len_in_ball(x0, y0, x1, y1, zx, zy, r):
    dx = x1 - x0
    dy = y1 - y0
    a = dx * dx + dy * dy
    if a == 0.0:
        return 0.0
    px = x0 - zx
    py = y0 - zy
    b = dx * px + dy * py
    c = px * px + py * py - r * r
    disc = b * b - a * c
    if disc <= 0.0:
        return 0.0
    sq = math.sqrt(disc)
    t_lo = (-b - sq) / a
    t_hi = (-b + sq) / a
    lo = max(t_lo, 0.0)
    hi = min(t_hi, 1.0)
    if hi <= lo:
        return 0.0
    return (hi - lo) * math.sqrt(a)


@njit
def _interval_overlap(l1, s, l2):
    # overlap of [0, l1] with [s, s + l2] on a circle of circumference 2 pi
    tot = 0.0
    for shift in (-TWO_PI, 0.0, TWO_PI):
        lo = max(0.0, s + shift)
        hi = min(l1, s + shift + l2)
        if hi > lo:
            tot += hi - lo
    return tot


@njit
def _arc_len_in_ball(cx, cy, R, th0, th1, zx, zy, r):
    vx = cx - zx
    vy = cy - zy
    d = math.hypot(vx, vy)
    span = th1 - th0
    if d == 0.0:
        return R * span if R <= r else 0.0
    if r >= d + R:
        return R * span
    gap = abs(d - R)
    if r <= gap:
        return 0.0
    # half-angle from sin^2(half / 2) = (r^2 - (d - R)^2) / (4 R d); no cancellation for small r
    sh2 = (r - gap) * (r + gap) / (4.0 * R * d)
    half = 2.0 * math.asin(math.sqrt(min(sh2, 1.0)))
    psi = math.atan2(vy, vx)
    start = psi + math.pi - half
    s = (start - th0) % TWO_PI
    return R * _interval_overlap(span, s, 2.0 * half)


@njit
def _boundary_len_in_ball(segs, arcs, zx, zy, r):
    tot = 0.0
    for i in range(segs.shape[0]):
        tot += _seg_len_in_ball(segs[i, 0], segs[i, 1], segs[i, 2], segs[i, 3], zx, zy, r)
    for i in range(arcs.shape[0]):
        tot += _arc_len_in_ball(arcs[i, 0], arcs[i, 1], arcs[i, 2], arcs[i, 3], arcs[i, 4], zx, zy, r)
    return tot


@njit
def _kappa_min_numba(segs, arcs, px, py, radii):
    best = np.inf
    for i in range(px.shape[0]):
        for j in range(radii.shape[0]):
            v = _boundary_len_in_ball(segs, arcs, px[i], py[i], radii[j]) / radii[j]
            if v < best:
                best = v
    return best


def _seg_len_in_ball_np(seg, zx, zy, r):
    x0, y0, x1, y1 = seg
    dx, dy = x1 - x0, y1 - y0
    a = dx * dx + dy * dy
    if a == 0:
        return np.zeros(np.broadcast(zx, r).shape)
    px, py = x0 - zx, y0 - zy
    b = dx * px + dy * py
    c = px * px + py * py - r * r
    disc = b * b - a * c
    sq = np.sqrt(np.maximum(disc, 0.0))
    lo = np.maximum((-b - sq) / a, 0.0)
    hi = np.minimum((-b + sq) / a, 1.0)
    return np.where((disc > 0) & (hi > lo), (hi - lo) * math.sqrt(a), 0.0)


def _arc_len_in_ball_np(arc, zx, zy, r):
    cx, cy, R, th0, th1 = arc
    vx, vy = cx - zx, cy - zy
    d = np.hypot(vx, vy)
    span = th1 - th0
    gap = np.abs(d - R)
    with np.errstate(divide="ignore", invalid="ignore"):
        sh2 = (r - gap) * (r + gap) / (4.0 * R * d)
    half = 2.0 * np.arcsin(np.sqrt(np.clip(sh2, 0.0, 1.0)))
    start = np.arctan2(vy, vx) + math.pi - half
    s = np.mod(start - th0, TWO_PI)
    tot = np.zeros(np.broadcast(s, half).shape)
    for shift in (-TWO_PI, 0.0, TWO_PI):
        lo = np.maximum(0.0, s + shift)
        hi = np.minimum(span, s + shift + 2.0 * half)
        tot += np.where(hi > lo, hi - lo, 0.0)
    out = R * tot
    out = np.where(r >= d + R, R * span, out)
    out = np.where(r <= gap, 0.0, out)
    out = np.where(d == 0.0, np.where(R <= r, R * span, 0.0), out)
    return out


def _kappa_min_numpy(segs, arcs, px, py, radii):
    zx = px[:, None]
    zy = py[:, None]
    r = radii[None, :]
    tot = np.zeros((px.size, radii.size))
    for s in segs:
        tot += _seg_len_in_ball_np(s, zx, zy, r)
    for a in arcs:
        tot += _arc_len_in_ball_np(a, zx, zy, r)
    return float(np.min(tot / r))


def boundary_length_in_ball(dom: Domain, z, r: float) -> float:
    """``H^1(boundary intersected with the closed ball B_r(z))``."""
    segs, arcs = dom.primitives()
    return float(_boundary_len_in_ball(segs, arcs, float(z[0]), float(z[1]), float(r)))


@njit
def _dist_point(segs, arcs, x, y):
    best = np.inf
    for i in range(segs.shape[0]):
        x0 = segs[i, 0]
        y0 = segs[i, 1]
        dx = segs[i, 2] - x0
        dy = segs[i, 3] - y0
        a = dx * dx + dy * dy
        t = 0.0
        if a > 0.0:
            t = ((x - x0) * dx + (y - y0) * dy) / a
            t = min(max(t, 0.0), 1.0)
        d = math.hypot(x - x0 - t * dx, y - y0 - t * dy)
        if d < best:
            best = d
    for i in range(arcs.shape[0]):
        cx = arcs[i, 0]
        cy = arcs[i, 1]
        R = arcs[i, 2]
        th0 = arcs[i, 3]
        span = arcs[i, 4] - th0
        rho = math.hypot(x - cx, y - cy)
        ang = (math.atan2(y - cy, x - cx) - th0) % TWO_PI
        if ang <= span or rho == 0.0:
            d = abs(rho - R)
        else:
            d1 = math.hypot(x - cx - R * math.cos(th0), y - cy - R * math.sin(th0))
            d2 = math.hypot(x - cx - R * math.cos(arcs[i, 4]), y - cy - R * math.sin(arcs[i, 4]))
            d = min(d1, d2)
        if d < best:
            best = d
    return best


@njit
def _distance_numba(segs, arcs, x, y):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _dist_point(segs, arcs, x[i], y[i])
    return out


def _distance_numpy(segs, arcs, x, y):
    best = np.full(x.shape, np.inf)
    for x0, y0, x1, y1 in segs:
        dx, dy = x1 - x0, y1 - y0
        a = dx * dx + dy * dy
        t = np.zeros_like(x) if a == 0 else np.clip(((x - x0) * dx + (y - y0) * dy) / a, 0.0, 1.0)
        best = np.minimum(best, np.hypot(x - x0 - t * dx, y - y0 - t * dy))
    for cx, cy, R, th0, th1 in arcs:
        rho = np.hypot(x - cx, y - cy)
        ang = np.mod(np.arctan2(y - cy, x - cx) - th0, TWO_PI)
        d_end = np.minimum(
            np.hypot(x - cx - R * math.cos(th0), y - cy - R * math.sin(th0)),
            np.hypot(x - cx - R * math.cos(th1), y - cy - R * math.sin(th1)),
        )
        d = np.where((ang <= th1 - th0) | (rho == 0.0), np.abs(rho - R), d_end)
        best = np.minimum(best, d)
    return best


def distance_to_boundary(dom: Domain, x, y, backend: str | None = None) -> np.ndarray:
    """Unsigned distance ``d(z, boundary)`` at the points ``(x, y)``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    shape = np.broadcast(x, y).shape
    xf = np.ascontiguousarray(np.broadcast_to(x, shape).ravel())
    yf = np.ascontiguousarray(np.broadcast_to(y, shape).ravel())
    segs, arcs = dom.primitives()
    if backend is None:
        fn = pick(_distance_numba, _distance_numpy)
    else:
        fn = _distance_numba if backend == "numba" else _distance_numpy
    return fn(segs, arcs, xf, yf).reshape(shape)


# --------------------------------------------------------------------------
# Ahlfors lower-regularity constant kappa
# --------------------------------------------------------------------------

def _boundary_samples(segs, arcs, per_prim: list[int]):
    xs, ys = [], []
    k = 0
    for x0, y0, x1, y1 in segs:
        t = np.arange(per_prim[k]) / per_prim[k]
        xs.append(x0 + t * (x1 - x0))
        ys.append(y0 + t * (y1 - y0))
        k += 1
    for cx, cy, R, th0, th1 in arcs:
        n = per_prim[k]
        closed = th1 - th0 >= TWO_PI
        t = np.arange(n) / n if closed else np.arange(n + 1) / n
        th = th0 + t * (th1 - th0)
        xs.append(cx + R * np.cos(th))
        ys.append(cy + R * np.sin(th))
        k += 1
    return np.concatenate(xs), np.concatenate(ys)


def _radii(eta: float, n_radii: int, octaves: float) -> np.ndarray:
    j = np.arange(n_radii)
    return eta * 2.0 ** (-octaves * j / (n_radii - 1))


@dataclass(frozen=True)
class KappaEstimate:
    value: float
    eta: float
    history: tuple[float, ...]
    n_boundary: int
    n_radii: int

    @property
    def refinement_change(self) -> float:
        if len(self.history) < 2:
            return math.inf
        return abs(self.history[-1] - self.history[-2])


def kappa_estimate(dom: Domain, eta: float, n_boundary: int = 64, n_radii: int = 17,
                   levels: int = 3, octaves: float = 20.0, backend: str | None = None) -> KappaEstimate:
    """Sampled upper estimate of ``inf_{r <= eta, z} H^1(boundary in B_r(z)) / r``.

    Boundary points and radii are nested across the ``levels`` refinements
    (point counts and radius counts double), so the estimates are
    nonincreasing.  Radii are ``eta * 2**(-octaves * j / (n_radii - 1))``,
    which reaches the small-``r`` limit while keeping ``r = eta`` itself.
    """
    if not eta > 0:
        raise DomainError(f"eta must be > 0, got {eta!r}")
    if n_boundary < 16 or n_radii < 16:
        raise DomainError("kappa sampling needs n_boundary >= 16 and n_radii >= 16")
    dom = dom.resolve()
    segs, arcs = dom.primitives()
    if segs.shape[0] + arcs.shape[0] == 0:
        raise DegenerateDomainError("domain has empty boundary")
    lens = [math.hypot(s[2] - s[0], s[3] - s[1]) for s in segs]
    lens += [a[2] * (a[4] - a[3]) for a in arcs]
    total = sum(lens)
    base = [max(1, int(math.ceil(n_boundary * L / total))) for L in lens]
    if backend is None:
        fn = pick(_kappa_min_numba, _kappa_min_numpy)
    else:
        fn = _kappa_min_numba if backend == "numba" else _kappa_min_numpy
    hist = []
    for lev in range(levels):
        px, py = _boundary_samples(segs, arcs, [b * 2**lev for b in base])
        radii = _radii(eta, (n_radii - 1) * 2**lev + 1, octaves)
        hist.append(float(fn(segs, arcs, px, py, radii)))
    return KappaEstimate(hist[-1], float(eta), tuple(hist), n_boundary * 2 ** (levels - 1),
                         (n_radii - 1) * 2 ** (levels - 1) + 1)


def kappa(dom: Domain, eta: float, n_boundary: int = 64, n_radii: int = 17) -> float:
    return kappa_estimate(dom, eta, n_boundary, n_radii).value


# --------------------------------------------------------------------------
# distance level sets
# --------------------------------------------------------------------------

def _clip_halfplane(poly: np.ndarray, a: np.ndarray, c: float) -> np.ndarray:
    # keep {p : a . p >= c}
    if poly.shape[0] == 0:
        return poly
    out = []
    n = poly.shape[0]
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp, fq = a @ p - c, a @ q - c
        if fp >= 0:
            out.append(p)
        if (fp >= 0) != (fq >= 0):
            t = fp / (fp - fq)
            out.append(p + t * (q - p))
    return np.array(out) if out else np.zeros((0, 2))


def inner_parallel_polygon(v: np.ndarray, r: float) -> np.ndarray:
    """``{z in P : d(z, boundary) >= r}`` for a convex counter-clockwise polygon."""
    poly = v.copy()
    n = v.shape[0]
    for i in range(n):
        p, q = v[i], v[(i + 1) % n]
        e = q - p
        normal = np.array([-e[1], e[0]]) / math.hypot(*e)  # inward for CCW
        poly = _clip_halfplane(poly, normal, normal @ p + r)
    return poly


def _curve_measure(poly: np.ndarray) -> float:
    if poly.shape[0] < 2:
        return 0.0
    per = float(np.sum(np.hypot(*(np.roll(poly, -1, axis=0) - poly).T)))
    area = abs(_shoelace(poly)) if poly.shape[0] >= 3 else 0.0
    if area <= 1e-14 * max(per, 1.0) ** 2:
        # collapsed to a segment: the level set is that segment, traversed once
        return 0.5 * per
    return per


def level_set_measure(dom: Domain, r: float, grid_step: float | None = None) -> float:
    """``H^1({z : d(z, boundary) = r})``.

    Closed forms for disks and rectangles, exact offset accounting for convex
    polygons (outer offset ``P + 2 pi r``, inner offset by half-plane
    clipping); non-convex polygons fall back to :func:`level_set_measure_grid`.
    """
    if not r > 0:
        raise DomainError(f"level-set radius must be > 0, got {r!r}")
    if isinstance(dom, Dilated):
        return dom.factor * level_set_measure(dom.base, r / dom.factor, None if grid_step is None else grid_step / dom.factor)
    if isinstance(dom, Disk):
        R = dom.radius
        return TWO_PI * (R + r) + (TWO_PI * (R - r) if r < R else 0.0)
    if isinstance(dom, Rect):
        w, h = dom.widths
        outer = 2.0 * (w + h) + TWO_PI * r
        lo = min(w, h)
        if 2 * r < lo:
            inner = 2.0 * (w + h) - 8.0 * r
        elif 2 * r == lo:
            inner = abs(w - h)
        else:
            inner = 0.0
        return outer + inner
    if isinstance(dom, Polygon):
        if not dom.is_convex:
            return level_set_measure_grid(dom, r, grid_step)
        outer = dom.perimeter() + TWO_PI * r
        return outer + _curve_measure(inner_parallel_polygon(dom.array, r))
    raise UnsupportedShapeError(f"no offset curves implemented for {type(dom).__name__}")


def level_set_measure_grid(dom: Domain, r: float, step: float | None = None) -> float:
    """Grid-marching estimate: marching squares on the sampled distance function."""
    from skimage import measure as skm

    dom = dom.resolve()
    x0, y0, x1, y1 = dom.bbox()
    if step is None:
        step = max(x1 - x0, y1 - y0, r) / 800.0
    pad = r + 4 * step
    xs = np.arange(x0 - pad, x1 + pad + step, step)
    ys = np.arange(y0 - pad, y1 + pad + step, step)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    d = distance_to_boundary(dom, X, Y)
    total = 0.0
    for c in skm.find_contours(d, r):
        seg = np.diff(c, axis=0)
        total += float(np.sum(np.hypot(seg[:, 0], seg[:, 1]))) * step
    return total


# --------------------------------------------------------------------------
# geometry summary, Prop. 2.3 style constant
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GeometrySummary:
    measure: float
    perimeter: float
    eta: float
    kappa: float
    level_set_table: tuple[tuple[float, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "perimeter": self.perimeter,
            "eta": self.eta,
            "kappa": self.kappa,
            "level_set_table": [list(p) for p in self.level_set_table],
        }

    def dilated(self, R: float) -> "GeometrySummary":
        """Summary of ``R * Omega`` at scale ``R * eta`` (kappa is scale invariant)."""
        return GeometrySummary(
            self.measure * R * R,
            self.perimeter * R,
            self.eta * R,
            self.kappa,
            tuple((r * R, v * R) for r, v in self.level_set_table),
        )


def geometry_summary(dom: Domain, eta: float, r_values=(), kappa_value: float | None = None) -> GeometrySummary:
    k = kappa(dom, eta) if kappa_value is None else float(kappa_value)
    table = tuple((float(r), level_set_measure(dom, float(r))) for r in r_values)
    return GeometrySummary(dom.measure(), dom.perimeter(), float(eta), k, table)


def level_set_constant(summary: GeometrySummary) -> float:
    """Smallest ``C`` with ``level_set(r) <= C (perimeter / kappa) (1 + r / eta)`` on the table."""
    if not summary.level_set_table:
        raise DomainError("summary has no level-set entries")
    scale = summary.perimeter / summary.kappa
    return max(v / (scale * (1.0 + r / summary.eta)) for r, v in summary.level_set_table)


# --------------------------------------------------------------------------
# mollification defect
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples on the lattice ``((i0 + i) * step, (j0 + j) * step)``."""

    values: np.ndarray
    step: float
    origin: tuple[int, int] = (0, 0)

    @classmethod
    def from_callable(cls, f, center, half_width: float, step: float) -> "GridFunction":
        i0 = int(math.floor((center[0] - half_width) / step))
        j0 = int(math.floor((center[1] - half_width) / step))
        n = int(math.ceil(2 * half_width / step)) + 2
        xs = (i0 + np.arange(n)) * step
        ys = (j0 + np.arange(n)) * step
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return cls(np.asarray(f(X, Y), dtype=float), float(step), (i0, j0))

    def integral(self) -> float:
        return float(self.values.sum() * self.step**2)

    def first_moment(self) -> float:
        """``int |z| |phi(z)| dz``."""
        nx, ny = self.values.shape
        xs = (self.origin[0] + np.arange(nx)) * self.step
        ys = (self.origin[1] + np.arange(ny)) * self.step
        rad = np.hypot(xs[:, None], ys[None, :])
        return float(np.sum(rad * np.abs(self.values)) * self.step**2)


def _indicator_grid(dom: Domain, step: float, supersample: int):
    x0, y0, x1, y1 = dom.bbox()
    ia = int(math.floor(x0 / step)) - 1
    ja = int(math.floor(y0 / step)) - 1
    nx = int(math.ceil(x1 / step)) + 2 - ia
    ny = int(math.ceil(y1 / step)) + 2 - ja
    sub = (np.arange(supersample) + 0.5) / supersample - 0.5
    xs = (ia + np.arange(nx))[:, None] + sub[None, :]
    ys = (ja + np.arange(ny))[:, None] + sub[None, :]
    X = xs.reshape(nx, 1, supersample, 1) * step
    Y = ys.reshape(1, ny, 1, supersample) * step
    inside = dom.contains(np.broadcast_to(X, (nx, ny, supersample, supersample)),
                          np.broadcast_to(Y, (nx, ny, supersample, supersample)))
    return inside.mean(axis=(2, 3)), (ia, ja)


def mollification_defect(dom: Domain, phi: GridFunction, complement: bool = False,
                         supersample: int = 4, coverage_tol: float = 1e-12) -> float:
    """``|| 1_E * phi - (int phi) 1_E ||_{L1}`` for ``E = Omega`` or its complement.

    The indicator is sampled as cell-coverage fractions.  For the complement
    the identity ``1_E * phi - (int phi) 1_E = (int phi) 1_Omega - 1_Omega * phi``
    is used, so both cases live on a bounded grid.
    """
    v = np.asarray(phi.values, float)
    peak = np.max(np.abs(v))
    border = max(np.abs(v[0]).max(), np.abs(v[-1]).max(), np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max())
    if peak > 0 and border > coverage_tol * peak:
        raise GridCoverageError(
            f"phi is {border / peak:.2e} (relative) on its grid border; enlarge the grid"
        )
    h = phi.step
    ind, (ia, ja) = _indicator_grid(dom.resolve(), h, supersample)
    conv = fftconvolve(ind, v) * h * h
    ci, cj = ia + phi.origin[0], ja + phi.origin[1]
    lo_i, lo_j = min(ia, ci), min(ja, cj)
    hi_i = max(ia + ind.shape[0], ci + conv.shape[0])
    hi_j = max(ja + ind.shape[1], cj + conv.shape[1])
    diff = np.zeros((hi_i - lo_i, hi_j - lo_j))
    diff[ci - lo_i : ci - lo_i + conv.shape[0], cj - lo_j : cj - lo_j + conv.shape[1]] += conv
    mass = phi.integral()
    diff[ia - lo_i : ia - lo_i + ind.shape[0], ja - lo_j : ja - lo_j + ind.shape[1]] -= mass * ind
    if complement:
        diff = -diff
    return float(np.sum(np.abs(diff)) * h * h)
