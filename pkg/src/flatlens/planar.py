"""Planar primitives: vectors, lattices and segments."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

EPS_GEOM = 1e-12


class GeometryError(ValueError):
    """Base class for geometric precondition failures."""


class DegenerateLattice(GeometryError):
    pass


class DegenerateSegment(GeometryError):
    pass


class ParallelGrazing(GeometryError):
    """The ray runs along the segment's supporting line."""


class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, o):  # type: ignore[override]
        return Vec2(self.x + o[0], self.y + o[1])

    def __sub__(self, o):
        return Vec2(self.x - o[0], self.y - o[1])

    def __neg__(self):
        return Vec2(-self.x, -self.y)

    def __mul__(self, k):  # type: ignore[override]
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def dot(self, o) -> float:
        return self.x * o[0] + self.y * o[1]

    def cross(self, o) -> float:
        return self.x * o[1] - self.y * o[0]

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def unit(self) -> "Vec2":
        n = self.norm()
        return Vec2(self.x / n, self.y / n)

    def perp(self) -> "Vec2":
        """Counterclockwise rotation by a quarter turn."""
        return Vec2(-self.y, self.x)


def vec(p) -> Vec2:
    v = Vec2(float(p[0]), float(p[1]))
    if not (math.isfinite(v.x) and math.isfinite(v.y)):
        raise GeometryError(f"non-finite vector {p!r}")
    return v


def direction(theta: float) -> Vec2:
    return Vec2(math.cos(theta), math.sin(theta))


@dataclass(frozen=True)
class Lattice:
    g1: Vec2
    g2: Vec2
    reduced: bool = False

    def __post_init__(self):
        object.__setattr__(self, "g1", vec(self.g1))
        object.__setattr__(self, "g2", vec(self.g2))
        if abs(self.det) < EPS_GEOM:
            raise DegenerateLattice(f"generators {self.g1}, {self.g2} are dependent")

    @property
    def det(self) -> float:
        return self.g1.cross(self.g2)

    @property
    def covolume(self) -> float:
        return abs(self.det)

    def point(self, m, n) -> Vec2:
        return Vec2(m * self.g1.x + n * self.g2.x, m * self.g1.y + n * self.g2.y)

    def coords(self, p) -> tuple[float, float]:
        """Real coordinates of p in the basis (g1, g2)."""
        d = self.det
        return ((p[0] * self.g2.y - p[1] * self.g2.x) / d,
                (self.g1.x * p[1] - self.g1.y * p[0]) / d)

    def cell(self, p) -> tuple[int, int]:
        a, b = self.coords(p)
        return math.floor(a), math.floor(b)

    def wrap(self, p) -> Vec2:
        """Representative of p in the half-open fundamental parallelogram."""
        a, b = self.coords(p)
        return Vec2(p[0], p[1]) - self.point(math.floor(a), math.floor(b))

    def contains(self, v, tol: float = 1e-9) -> bool:
        a, b = self.coords(v)
        return abs(a - round(a)) < tol and abs(b - round(b)) < tol

    def reduce(self) -> "Lattice":
        return lattice_reduce(self.g1, self.g2)

    def to_json(self):
        return [[self.g1.x, self.g1.y], [self.g2.x, self.g2.y]]


def lattice_reduce(g1, g2) -> Lattice:
    """Lagrange-Gauss reduction of a planar basis.

    The result satisfies |g1| <= |g2| and |<g1, g2>| <= |g1|^2 / 2.
    """
    u, v = vec(g1), vec(g2)
    if abs(u.cross(v)) < EPS_GEOM:
        raise DegenerateLattice(f"generators {u}, {v} are dependent")
    if u.dot(u) > v.dot(v):
        u, v = v, u
    while True:
        k = round(u.dot(v) / u.dot(u))
        if k:
            v = v - u * k
        if v.dot(v) < u.dot(u) - 1e-15 * u.dot(u):
            u, v = v, u
            continue
        break
    return Lattice(u, v, reduced=True)


def lattice_min_dist(lat: Lattice, p, exclude_zero: bool = False) -> float:
    """min |p + v| over lattice vectors v (v != 0 when exclude_zero)."""
    if not lat.reduced:
        lat = lat.reduce()
    p = vec(p)
    g1, g2 = lat.g1, lat.g2
    radius = p.norm() + 2.0 * g2.norm()
    # bound the coefficients of the lattice points in the ball around -p
    h1 = lat.covolume / g2.norm()  # distance between lines spanned by g2
    h2 = lat.covolume / g1.norm()
    a0, b0 = lat.coords(-p)
    ma = int(math.ceil(radius / h1)) + 1
    mb = int(math.ceil(radius / h2)) + 1
    best = math.inf
    for m in range(math.floor(a0) - ma, math.ceil(a0) + ma + 1):
        for n in range(math.floor(b0) - mb, math.ceil(b0) + mb + 1):
            if exclude_zero and m == 0 and n == 0:
                continue
            d = math.hypot(p.x + m * g1.x + n * g2.x, p.y + m * g1.y + n * g2.y)
            if d < best:
                best = d
    return best


@dataclass(frozen=True)
class Segment:
    a: Vec2
    b: Vec2

    def __post_init__(self):
        object.__setattr__(self, "a", vec(self.a))
        object.__setattr__(self, "b", vec(self.b))
        if (self.b - self.a).norm() < EPS_GEOM:
            raise DegenerateSegment(f"segment endpoints coincide at {self.a}")

    @property
    def center(self) -> Vec2:
        return Vec2((self.a.x + self.b.x) / 2, (self.a.y + self.b.y) / 2)

    @property
    def half_length(self) -> float:
        return (self.b - self.a).norm() / 2

    @property
    def direction(self) -> Vec2:
        return (self.b - self.a).unit()

    def translate(self, v) -> "Segment":
        return Segment(self.a + v, self.b + v)

    def point_at(self, u: float) -> Vec2:
        return self.center + self.direction * u


def segment_ray_hit(seg: Segment, origin, dir, eps: float = EPS_GEOM) -> Optional[tuple[float, float]]:
    """First hit (t, u) of the ray origin + t*dir (t > eps) with seg.

    u is the signed offset of the hit from the segment center along the
    segment direction.  Raises ParallelGrazing if the ray lies on the
    segment's line and would run into it.
    """
    o, d = vec(origin), vec(dir)
    e = seg.direction
    c = seg.center
    h = seg.half_length
    denom = d.cross(e)
    w = c - o
    if abs(denom) < eps:
        # parallel: only a problem if collinear and the segment lies ahead
        if abs(w.cross(d)) < eps * max(1.0, w.norm()):
            along = w.dot(d)
            if along + h > eps:
                raise ParallelGrazing("ray runs along the segment")
        return None
    # o + t d = c + u e
    t = w.cross(e) / denom
    u = w.cross(d) / denom
    if t <= eps or abs(u) > h + eps:
        return None
    return t, max(-h, min(h, u))


def segments_intersect(s1: Segment, s2: Segment, eps: float = 1e-12, proper: bool = True) -> bool:
    """Whether two segments meet; with proper=True shared endpoints do not count."""
    d1 = s1.b - s1.a
    d2 = s2.b - s2.a
    denom = d1.cross(d2)
    w = s2.a - s1.a
    if abs(denom) < eps:
        if abs(w.cross(d1)) > eps * max(1.0, d1.norm()):
            return False
        # collinear: overlap of projections
        L = d1.dot(d1)
        t0 = w.dot(d1) / L
        t1 = (s2.b - s1.a).dot(d1) / L
        lo, hi = min(t0, t1), max(t0, t1)
        if proper:
            return hi > eps and lo < 1 - eps and (min(hi, 1) - max(lo, 0)) > eps
        return hi >= -eps and lo <= 1 + eps
    t = w.cross(d2) / denom
    s = w.cross(d1) / denom
    if proper:
        inside1 = eps < t < 1 - eps
        inside2 = eps < s < 1 - eps
        on1 = -eps <= t <= 1 + eps
        on2 = -eps <= s <= 1 + eps
        return on1 and on2 and (inside1 or inside2)
    return -eps <= t <= 1 + eps and -eps <= s <= 1 + eps
