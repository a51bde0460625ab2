"""Periodic lens and slit configurations, the curve gamma_W, and their checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .planar import (GeometryError, Lattice, Segment, Vec2, direction, lattice_min_dist,
                     lattice_reduce, vec)


class ImproperCenters(GeometryError):
    pass


class SlitParallelToW(GeometryError):
    pass


class DeformationBlocked(GeometryError):
    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair


@dataclass(frozen=True)
class Lens:
    c: Vec2
    r: float


@dataclass
class LensConfiguration:
    lattice: Lattice
    lenses: list = field(default_factory=list)

    def __post_init__(self):
        self.lenses = [Lens(vec(l.c if isinstance(l, Lens) else l[0]),
                            float(l.r if isinstance(l, Lens) else l[1])) for l in self.lenses]
        for l in self.lenses:
            if not l.r > 0:
                raise GeometryError(f"lens radius must be positive, got {l.r}")

    @property
    def centers(self):
        return [l.c for l in self.lenses]

    @property
    def radii(self):
        return [l.r for l in self.lenses]

    def translate(self, v) -> "LensConfiguration":
        v = vec(v)
        return LensConfiguration(self.lattice, [Lens(l.c + v, l.r) for l in self.lenses])

    def check_proper(self, tol: float = 1e-9):
        red = self.lattice.reduce()
        for i in range(len(self.lenses)):
            for j in range(i + 1, len(self.lenses)):
                if lattice_min_dist(red, self.lenses[i].c - self.lenses[j].c) < tol:
                    raise ImproperCenters(f"lenses {i} and {j} coincide modulo the lattice")

    def to_json(self):
        return {"lattice": self.lattice.to_json(),
                "lenses": [{"c": [l.c.x, l.c.y], "r": l.r} for l in self.lenses]}

    @classmethod
    def from_json(cls, data) -> "LensConfiguration":
        g = data["lattice"]
        return cls(Lattice(g[0], g[1]), [(l["c"], l["r"]) for l in data.get("lenses", [])])


def same_configuration(a: LensConfiguration, b: LensConfiguration, tol: float = 1e-9) -> bool:
    """Equal lattices and equal lens multisets modulo the lattice."""
    ra, rb = a.lattice.reduce(), b.lattice.reduce()
    for g in (ra.g1, ra.g2):
        if not rb.contains(g, tol):
            return False
    for g in (rb.g1, rb.g2):
        if not ra.contains(g, tol):
            return False
    if len(a.lenses) != len(b.lenses):
        return False
    used = set()
    for la in a.lenses:
        for k, lb in enumerate(b.lenses):
            if k in used or abs(la.r - lb.r) > tol:
                continue
            if lattice_min_dist(ra, la.c - lb.c) <= tol:
                used.add(k)
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# the ergodic curve gamma_W

def _l(theta: float) -> float:
    # symmetric in theta -> pi - theta; see the decisions ledger on the 3pi/4 end
    c = abs(1.0 / math.tan(theta))
    return 2.0 - c * (1.0 - c)


def gamma_w_branch(theta: float, branch: int, keep_zero: bool = False) -> LensConfiguration:
    """Evaluate one of the four defining formulas of gamma_W at theta."""
    sin, cos = math.sin(theta), math.cos(theta)
    if branch in (1, 4):
        lat = Lattice((0.0, 4.0), (4.0, 2.0))
        r0 = 2.0 * sin
        x = 1.0 if branch == 1 else -1.0
        # mirror symmetric in theta -> pi - theta, see the decisions ledger
        cp = Vec2(x, 1.0 + abs(math.tan(theta)))
        rp = cos if branch == 1 else -cos
    elif branch in (2, 3):
        l = _l(theta)
        lat = Lattice((0.0, 4.0), (2.0 * l, 2.0))
        r0 = l * sin
        cot = cos / sin
        cp = Vec2(cot if branch == 2 else -cot, 2.0)
        rp = cos if branch == 2 else -cos
    else:
        raise ValueError("branch must be 1..4")
    lenses = []
    for c, r in ((Vec2(0.0, 0.0), r0), (cp, rp), (-cp, rp)):
        r = abs(r) if abs(r) > 1e-15 else 0.0
        if r > 0 or keep_zero:
            lenses.append((c, r))
    cfg = LensConfiguration.__new__(LensConfiguration)
    cfg.lattice = lat
    cfg.lenses = [Lens(vec(c), float(r)) for c, r in lenses]
    return cfg


def gamma_w_branch_index(theta: float) -> int:
    t = math.fmod(theta, math.pi)
    if t < 0:
        t += math.pi
    q = math.pi / 4
    if t <= q:
        return 1
    if t <= 2 * q:
        return 2
    if t <= 3 * q:
        return 3
    return 4


def gamma_w(theta: float, keep_zero: bool = False) -> LensConfiguration:
    """The lens configuration gamma_W(theta); theta is taken mod pi.

    Lens order: the lens at the origin (omitted when its radius vanishes),
    then the pair at +c and -c (omitted when their radius vanishes).
    """
    t = math.fmod(theta, math.pi)
    if t < 0:
        t += math.pi
    return gamma_w_branch(t, gamma_w_branch_index(t), keep_zero)


# ---------------------------------------------------------------------------
# admissibility

@dataclass
class AdmissibilityReport:
    ok: bool
    worst_pair: tuple
    slack: float

    def __bool__(self):
        return self.ok


def is_admissible(cfg: LensConfiguration, tol: float = 1e-9) -> AdmissibilityReport:
    cfg.check_proper()
    red = cfg.lattice.reduce()
    worst, pair = math.inf, ()
    n = len(cfg.lenses)
    for i in range(n):
        for j in range(i, n):
            li, lj = cfg.lenses[i], cfg.lenses[j]
            dist = lattice_min_dist(red, li.c - lj.c, exclude_zero=(i == j))
            slack = dist - (li.r + lj.r)
            if slack < worst:
                worst, pair = slack, (i, j)
    return AdmissibilityReport(worst >= -tol, pair, worst)


# ---------------------------------------------------------------------------
# slit configurations

@dataclass
class SlitConfiguration:
    lattice: Lattice
    v: Vec2
    centers: list
    radii: list

    def __post_init__(self):
        self.v = vec(self.v).unit()
        self.centers = [vec(c) for c in self.centers]
        self.radii = [float(r) for r in self.radii]

    def segments(self) -> list[Segment]:
        return [Segment(c - self.v * r, c + self.v * r) for c, r in zip(self.centers, self.radii)]

    def to_skeleton(self):
        from .skeleton import Skeleton, SlitFold
        return Skeleton(self.lattice, [SlitFold(s) for s in self.segments()])


def lens_to_slits(cfg: LensConfiguration, theta: float) -> SlitConfiguration:
    """Flat lenses: same centers, diameter perpendicular to theta."""
    v = direction(theta).perp()
    return SlitConfiguration(cfg.lattice, v, list(cfg.centers), list(cfg.radii))


def _primitive(lat: Lattice, w) -> tuple[Vec2, int, int]:
    a, b = lat.coords(w)
    m, n = round(a), round(b)
    if abs(a - m) > 1e-9 or abs(b - n) > 1e-9 or (m == 0 and n == 0):
        raise GeometryError(f"{w} is not a nonzero lattice vector")
    g = math.gcd(m, n)
    return lat.point(m // g, n // g), m // g, n // g


def is_separated(slits: SlitConfiguration, w, tol: float = 1e-12) -> bool:
    """Shadows along w are proper cylinders, pairwise disjoint or w-collinear.

    Every shadow S_j(w) is a closed cylinder on the torus, so we work on the
    quotient circle of the torus by the direction of the primitive vector
    under w: a shadow projects to an interval there.
    """
    lat = slits.lattice
    w0, _, _ = _primitive(lat, vec(w))
    wl = w0.norm()
    wu = w0 * (1 / wl)
    sin = abs(slits.v.cross(wu))
    if sin < 1e-12:
        raise SlitParallelToW("slits are parallel to w")
    H = lat.covolume / wl  # circumference of the quotient circle
    eta = [wu.cross(c) % H for c in slits.centers]
    half = [r * sin for r in slits.radii]
    for h in half:
        if 2 * h >= H - tol:
            return False
    k = len(eta)
    for i in range(k):
        for j in range(i + 1, k):
            d = (eta[j] - eta[i]) % H
            d = min(d, H - d)
            if d < 1e-9 * max(1.0, H):
                continue  # same linear loop parallel to w
            if d < half[i] + half[j] - tol:
                return False
    return True


def shadow_interval(slits: SlitConfiguration, j: int, w) -> tuple[float, float, float]:
    """(center, half-width, circumference) of the j-th shadow on the quotient circle."""
    lat = slits.lattice
    w0, _, _ = _primitive(lat, vec(w))
    wu = w0.unit()
    H = lat.covolume / w0.norm()
    return wu.cross(slits.centers[j]) % H, slits.radii[j] * abs(slits.v.cross(wu)), H


# ---------------------------------------------------------------------------
# railed rescaling

def delta_region(c, r: float, theta: float, xi: float) -> list[list[Vec2]]:
    """The two triangles forming Delta_{c,r}(theta, xi)."""
    c = vec(c)
    e = direction(theta)
    tan = math.tan(theta - xi)
    old = e.perp() * r                     # s = 0 end, t = 1
    new = Vec2(e.x * tan, e.y * tan) * r + old  # s = 1 end, t = 1
    return [[c, c + old, c + new], [c, c - old, c - new]]


def _axes(poly):
    out = []
    n = len(poly)
    for i in range(n):
        e = poly[(i + 1) % n] - poly[i]
        if e.norm() > 1e-15:
            out.append(e.unit())
            out.append(e.unit().perp())
    return out


def polygons_overlap(p1, p2, tol: float = 1e-12) -> bool:
    """Separating-axis test for convex (possibly degenerate) polygons."""
    for ax in _axes(p1) + _axes(p2):
        a = [ax.dot(p) for p in p1]
        b = [ax.dot(p) for p in p2]
        if max(a) < min(b) + tol or max(b) < min(a) + tol:
            return False
    return True


@dataclass
class RescaleResult:
    slits: SlitConfiguration
    valid: bool
    collision: tuple | None


def railed_rescale(slits: SlitConfiguration, theta: float, xi: float,
                   raise_on_block: bool = True) -> RescaleResult:
    delta = theta - xi
    if abs(math.cos(delta)) < 1e-12:
        raise GeometryError("|theta - xi| must stay below pi/2")
    sec = 1.0 / math.cos(delta)
    v_new = direction(xi).perp()
    new = SlitConfiguration(slits.lattice, v_new, list(slits.centers),
                            [r * abs(sec) for r in slits.radii])
    regions = [delta_region(c, r, theta, xi) for c, r in zip(slits.centers, slits.radii)]
    red = slits.lattice.reduce()
    collision = None
    k = len(regions)
    reach = [max(r, r * abs(sec)) for r in slits.radii]
    for i in range(k):
        for j in range(i, k):
            dvec = slits.centers[j] - slits.centers[i]
            bound = reach[i] + reach[j]
            for lv in _lattice_vectors_near(red, -dvec, bound + 1e-9):
                if i == j and lv == Vec2(0.0, 0.0):
                    continue
                shifted = [[p + lv for p in tri] for tri in regions[j]]
                if any(polygons_overlap(t1, t2) for t1 in regions[i] for t2 in shifted):
                    collision = (i, j, (lv.x, lv.y))
                    break
            if collision:
                break
        if collision:
            break
    if collision and raise_on_block:
        raise DeformationBlocked(f"Delta regions of slits {collision[0]} and {collision[1]} collide",
                                 collision)
    return RescaleResult(new, collision is None, collision)


def _lattice_vectors_near(red: Lattice, p: Vec2, radius: float) -> list[Vec2]:
    """Lattice vectors lv with |lv - p| <= radius."""
    a0, b0 = red.coords(p)
    h1 = red.covolume / red.g2.norm()
    h2 = red.covolume / red.g1.norm()
    ma = int(math.ceil(radius / h1)) + 1
    mb = int(math.ceil(radius / h2)) + 1
    out = []
    for m in range(math.floor(a0) - ma, math.ceil(a0) + ma + 1):
        for n in range(math.floor(b0) - mb, math.ceil(b0) + mb + 1):
            lv = red.point(m, n)
            if (lv - p).norm() <= radius:
                out.append(Vec2(float(lv.x), float(lv.y)))
    return out
