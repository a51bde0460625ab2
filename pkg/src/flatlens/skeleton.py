"""Skeletons: unions of slit-folds, pillow-folds and chip-folds.

A slit-fold identifies points of its segment at equal distance from the
center; a trajectory that reaches it reappears at the mirrored point and
leaves on the side it arrived from.  A pillow-fold is a parallelogram whose
two sides parallel to ab are slit-folds and whose other two sides are
identified by a translation.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

from .planar import (EPS_GEOM, GeometryError, Lattice, Segment, Vec2, direction,
                     segments_intersect, vec)


class TangentialHit(GeometryError):
    """Trajectory runs along a fold segment."""


class CorrespondenceMissing(GeometryError):
    pass


class UnknownName(KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown name"


class NotOnFold(GeometryError):
    pass


@dataclass(frozen=True)
class SlitFold:
    seg: Segment

    @classmethod
    def of(cls, a, b) -> "SlitFold":
        return cls(Segment(vec(a), vec(b)))

    @property
    def center(self) -> Vec2:
        return self.seg.center

    def translate(self, v) -> "SlitFold":
        return SlitFold(self.seg.translate(v))

    def to_json(self):
        return {"type": "slit", "a": list(self.seg.a), "b": list(self.seg.b)}


@dataclass(frozen=True)
class PillowFold:
    """The n-pillow-fold on the parallelogram spanned by [a,b] and [c,d]."""
    a: Vec2
    b: Vec2
    c: Vec2
    d: Vec2
    n: int = 1

    def __post_init__(self):
        for k in "abcd":
            object.__setattr__(self, k, vec(getattr(self, k)))
        if self.n < 1:
            raise GeometryError("n must be a positive integer")
        ab, cd = self.b - self.a, self.d - self.c
        if ab.norm() < EPS_GEOM or cd.norm() < EPS_GEOM:
            raise GeometryError("degenerate pillow side")
        if abs(ab.cross(cd)) < 1e-12 * ab.norm() * cd.norm():
            raise GeometryError("pillow sides are parallel")
        # c sits on [a, (a+b)/2]
        ac = self.c - self.a
        s = ac.dot(ab) / ab.dot(ab)
        if abs(ab.cross(ac)) > 1e-9 * ab.norm() or not (-1e-12 <= s <= 0.5 + 1e-12):
            raise GeometryError("c must lie on the first half of [a,b]")

    @property
    def step(self) -> Vec2:
        """Offset between consecutive slit sides."""
        return self.d - self.c

    @property
    def jump(self) -> Vec2:
        """Translation carrying the lower translation side to the upper one."""
        return self.a + self.b - self.c * 2

    def slit_sides(self) -> list[Segment]:
        return [Segment(self.a + self.step * k, self.b + self.step * k) for k in range(self.n + 1)]

    def translation_sides(self) -> list[tuple[Segment, Segment]]:
        """(lower, upper) pairs, one per cell."""
        top0 = self.b - (self.c - self.a)
        out = []
        for k in range(self.n):
            off = self.step * k
            out.append((Segment(self.c + off, self.d + off),
                        Segment(top0 + off, top0 + self.step + off)))
        return out

    def translate(self, v) -> "PillowFold":
        return PillowFold(self.a + v, self.b + v, self.c + v, self.d + v, self.n)

    def to_json(self):
        return {"type": "pillow", "a": list(self.a), "b": list(self.b),
                "c": list(self.c), "d": list(self.d), "n": self.n}


@dataclass(frozen=True)
class ChipFold:
    """The n-chip-fold: the explicit slit-fold union on the same parallelogram."""
    a: Vec2
    b: Vec2
    c: Vec2
    d: Vec2
    n: int = 1

    def __post_init__(self):
        for k in "abcd":
            object.__setattr__(self, k, vec(getattr(self, k)))
        if self.n < 1:
            raise GeometryError("n must be a positive integer")

    def slits(self) -> list[SlitFold]:
        a, b, c, d = self.a, self.b, self.c, self.d
        step = d - c
        out = []
        for k in range(self.n):
            off = step * k
            out.append(SlitFold(Segment(a + off, b + off)))
            out.append(SlitFold(Segment(c + off, d + off)))
            out.append(SlitFold(Segment(b + a - c + off, b + a + d - c * 2 + off)))
        out.append(SlitFold(Segment(a + step * self.n, b + step * self.n)))
        return out

    def translate(self, v) -> "ChipFold":
        return ChipFold(self.a + v, self.b + v, self.c + v, self.d + v, self.n)

    def to_json(self):
        return {"type": "chip", "a": list(self.a), "b": list(self.b),
                "c": list(self.c), "d": list(self.d), "n": self.n}


Fold = Union[SlitFold, PillowFold, ChipFold]


@dataclass(frozen=True)
class Primitive:
    """One segment of a skeleton with its gluing rule.

    kind 'slit' mirrors through `center`; kind 'jump' translates by `shift`.
    `owner` indexes the fold in the skeleton's fold list.
    """
    kind: str
    seg: Segment
    center: Vec2
    shift: Vec2
    owner: int


@dataclass
class Skeleton:
    lattice: Optional[Lattice]
    folds: list = field(default_factory=list)

    def primitives(self) -> list[Primitive]:
        out = []
        zero = Vec2(0.0, 0.0)
        for i, f in enumerate(self.folds):
            if isinstance(f, SlitFold):
                out.append(Primitive("slit", f.seg, f.center, zero, i))
            elif isinstance(f, ChipFold):
                for s in f.slits():
                    out.append(Primitive("slit", s.seg, s.center, zero, i))
            elif isinstance(f, PillowFold):
                for s in f.slit_sides():
                    out.append(Primitive("slit", s, s.center, zero, i))
                for lo, hi in f.translation_sides():
                    out.append(Primitive("jump", lo, lo.center, f.jump, i))
                    out.append(Primitive("jump", hi, hi.center, -f.jump, i))
            else:
                raise TypeError(f"unknown fold {f!r}")
        return out

    def slit_segments(self) -> list[Segment]:
        return [p.seg for p in self.primitives() if p.kind == "slit"]

    def to_json(self):
        return {"lattice": self.lattice.to_json() if self.lattice else None,
                "folds": [f.to_json() for f in self.folds]}

    @classmethod
    def from_json(cls, data) -> "Skeleton":
        lat = data.get("lattice")
        lattice = Lattice(lat[0], lat[1]) if lat else None
        folds = []
        for f in data["folds"]:
            t = f["type"]
            if t == "slit":
                folds.append(SlitFold.of(f["a"], f["b"]))
            elif t == "pillow":
                folds.append(PillowFold(f["a"], f["b"], f["c"], f["d"], int(f.get("n", 1))))
            elif t == "chip":
                folds.append(ChipFold(f["a"], f["b"], f["c"], f["d"], int(f.get("n", 1))))
            else:
                raise GeometryError(f"unknown fold type {t!r}")
        return cls(lattice, folds)


# ---------------------------------------------------------------------------
# local transition maps

def _check_transversal(seg: Segment, theta: float):
    d = direction(theta)
    if abs(d.cross(seg.direction)) < 1e-12:
        raise TangentialHit(f"direction {theta} runs along {seg}")


def slit_cross(fold: SlitFold, hit, dir_sign: int, theta: float) -> tuple[Vec2, int]:
    hit = vec(hit)
    seg = fold.seg
    off = hit - seg.a
    if abs(off.cross(seg.direction)) > 1e-9 * max(1.0, seg.half_length):
        raise NotOnFold(f"{hit} is not on {seg}")
    _check_transversal(seg, theta)
    return fold.center * 2 - hit, -dir_sign


def pillow_edge_cross(fold: PillowFold, hit, dir_sign: int, theta: Optional[float] = None) -> tuple[Vec2, int]:
    hit = vec(hit)
    tol = 1e-9 * max(1.0, fold.step.norm(), fold.jump.norm())
    for lo, hi in fold.translation_sides():
        for seg, shift in ((lo, fold.jump), (hi, -fold.jump)):
            off = hit - seg.a
            along = off.dot(seg.direction)
            if abs(off.cross(seg.direction)) <= tol and -tol <= along <= 2 * seg.half_length + tol:
                if theta is not None:
                    _check_transversal(seg, theta)
                return hit + shift, dir_sign
    raise NotOnFold(f"{hit} is not on a translation side of {fold}")


# ---------------------------------------------------------------------------
# pillow to chip conversion

def pillow_to_chip(fold: PillowFold, theta: float) -> list[SlitFold]:
    """Replace a pillow-fold by slit-folds with the same outside dynamics in direction theta."""
    if (fold.c - fold.a).norm() > 1e-12 * (fold.b - fold.a).norm():
        raise GeometryError("pillow_to_chip needs c == a")
    origin = fold.a
    ex = fold.step * fold.n       # whole width, across the slit sides
    ey = fold.b - fold.a          # slit side direction
    det = ex.cross(ey)
    d = direction(theta)
    # direction in unit coordinates (alpha along ex, beta along ey)
    da = d.cross(ey) / det
    db = ex.cross(d) / det
    if abs(da) < 1e-12:
        return [SlitFold(s) for s in (Segment(origin, origin + ey),
                                      Segment(origin + ex, origin + ex + ey))]
    m = db / da  # slope in unit coordinates
    n = max(1, math.ceil(abs(m) - 1e-12))
    h = abs(m) / (2 * n)  # height of the pushed slits inside each subcell
    P = lambda al, be: origin + ex * al + ey * be
    out = [SlitFold(Segment(P(k / n, 0.0), P(k / n, 1.0))) for k in range(n + 1)]
    for k in range(n):
        lo, hi = k / n, (k + 1) / n
        levels = [h] if abs(h - 0.5) < 1e-12 else [h, 1.0 - h]
        for be in levels:
            if be <= 1e-12 or be >= 1.0 - 1e-12:
                continue  # flow along the translation sides: nothing to push
            out.append(SlitFold(Segment(P(lo, be), P(hi, be))))
    return out


# ---------------------------------------------------------------------------
# railed deformations

@dataclass
class RailCertificate:
    ok: bool
    segments: list
    blocked: Optional[tuple] = None


def _lattice_shifts(lat: Optional[Lattice], radius: int = 3):
    if lat is None:
        return [Vec2(0.0, 0.0)]
    return [lat.point(m, n) for m in range(-radius, radius + 1) for n in range(-radius, radius + 1)]


def _interior_cross(conn: Segment, seg: Segment, eps: float = 1e-9) -> bool:
    """Whether seg meets conn at a point strictly inside conn."""
    d1 = conn.b - conn.a
    d2 = seg.b - seg.a
    denom = d1.cross(d2)
    w = seg.a - conn.a
    if abs(denom) < 1e-14:
        if abs(w.cross(d1)) > eps * d1.norm():
            return False
        L = d1.dot(d1)
        t0, t1 = w.dot(d1) / L, (seg.b - conn.a).dot(d1) / L
        lo, hi = min(t0, t1), max(t0, t1)
        return hi > eps and lo < 1 - eps
    t = w.cross(d2) / denom
    s = w.cross(d1) / denom
    return eps < t < 1 - eps and -eps <= s <= 1 + eps


def railed_equivalent(skelA: Skeleton, skelB: Skeleton, theta: float,
                      correspondence: Optional[list[int]] = None) -> RailCertificate:
    """Check that each slit-fold of A slides along direction-theta rails onto its partner in B."""
    segA, segB = skelA.slit_segments(), skelB.slit_segments()
    if correspondence is None:
        if len(segA) != len(segB):
            raise CorrespondenceMissing("fold counts differ and no correspondence given")
        correspondence = list(range(len(segA)))
    if len(correspondence) != len(segA):
        raise CorrespondenceMissing("correspondence length differs from fold count")
    lat = skelA.lattice
    e = direction(theta)
    shifts = _lattice_shifts(lat)
    obstacles = []
    for sk in (segA, segB):
        for idx, s in enumerate(sk):
            for v in shifts:
                obstacles.append((sk is segA, idx, s.translate(v)))
    rails = []
    for i, j in enumerate(correspondence):
        sa, sb0 = segA[i], segB[j]
        # every translate of the partner reachable along leaves, shortest rails first
        cands = []
        for v in shifts:
            sb = sb0.translate(v)
            for p, q in (((sa.a, sb.a), (sa.b, sb.b)), ((sa.a, sb.b), (sa.b, sb.a))):
                if all(abs((y - x).cross(e)) < 1e-9 * max(1.0, (y - x).norm()) for x, y in (p, q)):
                    cands.append(((p[1] - p[0]).norm() + (q[1] - q[0]).norm(), p, q))
        if not cands:
            return RailCertificate(False, rails, (i, "endpoints not on common leaves"))
        cands.sort(key=lambda c: c[0])
        first_block = None
        for _, p, q in cands:
            conns, block = [], None
            for x, y in (p, q):
                if (y - x).norm() < 1e-12:
                    continue
                conn = Segment(x, y)
                for fromA, idx, ob in obstacles:
                    if (fromA and idx == i) or (not fromA and idx == j):
                        continue
                    if _interior_cross(conn, ob):
                        block = (i, conn, ob)
                        break
                if block:
                    break
                conns.append(conn)
            if block is None:
                rails += conns
                break
            first_block = first_block or block
        else:
            return RailCertificate(False, rails, first_block)
    return RailCertificate(True, rails)


# ---------------------------------------------------------------------------
# singularity census

def _rays_at(prims, lat, p: Vec2, tol: float):
    """Rays leaving p along skeleton segments: (angle, kind, center/shift)."""
    rays = []
    for pr in prims:
        for v in _lattice_shifts(lat, 1):
            s = pr.seg.translate(v)
            e = s.direction
            off = p - s.a
            if abs(off.cross(e)) > tol:
                continue
            u = off.dot(e)
            L = 2 * s.half_length
            if u < -tol or u > L + tol:
                continue
            img = (pr.center + v) * 2 if pr.kind == "slit" else pr.shift
            if u > tol:
                rays.append((math.atan2(-e.y, -e.x) % (2 * math.pi), pr.kind, img))
            if u < L - tol:
                rays.append((math.atan2(e.y, e.x) % (2 * math.pi), pr.kind, img))
    rays.sort(key=lambda r: r[0])
    return rays


def _key(lat, p: Vec2):
    if lat is None:
        return (round(p.x, 6), round(p.y, 6))
    a, b = lat.coords(p)
    return (round(a % 1.0, 6) % 1.0, round(b % 1.0, 6) % 1.0)


def cone_angles(skel: Skeleton, tol: float = 1e-9) -> list[float]:
    """Total angles (in units of pi) of the singular points of a periodic skeleton.

    Points are the fold endpoints and centers; sectors around them are
    chained through the gluing rules until they close up.
    """
    prims = skel.primitives()
    lat = skel.lattice
    cand = []
    for pr in prims:
        cand += [pr.seg.a, pr.seg.b, pr.seg.center]
    seen = set()
    angles = []
    twopi = 2 * math.pi
    for p0 in cand:
        rays0 = _rays_at(prims, lat, p0, tol)
        for r0 in rays0:
            start = (_key(lat, p0), round(r0[0], 9))
            if start in seen:
                continue
            total = 0.0
            p, ang = p0, r0[0]
            cycle = []
            for _ in range(10000):
                key = (_key(lat, p), round(ang % twopi, 9))
                if cycle and key == cycle[0]:
                    break
                cycle.append(key)
                rays = _rays_at(prims, lat, p, tol)
                nxt = None
                for r in rays:
                    if r[0] > ang + 1e-9:
                        nxt = r
                        break
                if nxt is None:
                    nxt = (rays[0][0] + twopi,) + rays[0][1:]
                total += nxt[0] - ang
                a_next = nxt[0] % twopi
                if nxt[1] == "slit":
                    p = nxt[2] - p
                    ang = (a_next + math.pi) % twopi
                else:
                    p = p + nxt[2]
                    ang = a_next
                # normalize to the ray list of the new point
            else:
                raise GeometryError("sector chain did not close")
            seen.update(cycle)
            angles.append(round(total / math.pi, 6))
    return angles


def census(skel: Skeleton) -> Counter:
    """Multiset of cone angles (units of pi) different from 2*pi."""
    return Counter(a for a in cone_angles(skel) if abs(a - 2.0) > 1e-6)


def _inside_pillow(skel: Skeleton, p: Vec2) -> bool:
    for f in skel.folds:
        if not isinstance(f, PillowFold):
            continue
        ex = f.step * f.n
        ey = f.jump
        det = ex.cross(ey)
        for v in _lattice_shifts(skel.lattice, 1):
            w = p - f.c - v
            al = w.cross(ey) / det
            be = ex.cross(w) / det
            if 0.0 < al < 1.0 and 0.0 < be < 1.0:
                return True
    return False


def outside_census(skel: Skeleton) -> Counter:
    """Census restricted to the surface outside the pillow-fold interiors."""
    prims = skel.primitives()
    lat = skel.lattice
    out = Counter()
    for total, sectors in _cycles(skel, prims, lat):
        if all(_inside_pillow(skel, p + direction(a) * 1e-6) for p, a in sectors):
            continue
        if abs(total - 2.0) > 1e-6:
            out[total] += 1
    return out


def _cycles(skel, prims, lat, tol: float = 1e-9):
    """Yield (angle / pi, [(point, mid-sector angle), ...]) for each cone point."""
    cand = []
    for pr in prims:
        cand += [pr.seg.a, pr.seg.b, pr.seg.center]
    seen = set()
    twopi = 2 * math.pi
    for p0 in cand:
        for r0 in _rays_at(prims, lat, p0, tol):
            if (_key(lat, p0), round(r0[0], 9)) in seen:
                continue
            total = 0.0
            p, ang = p0, r0[0]
            cycle, sectors = [], []
            for _ in range(10000):
                key = (_key(lat, p), round(ang % twopi, 9))
                if cycle and key == cycle[0]:
                    break
                cycle.append(key)
                rays = _rays_at(prims, lat, p, tol)
                nxt = next((r for r in rays if r[0] > ang + 1e-9), None)
                if nxt is None:
                    nxt = (rays[0][0] + twopi,) + rays[0][1:]
                sectors.append((p, (ang + nxt[0]) / 2))
                total += nxt[0] - ang
                a_next = nxt[0] % twopi
                if nxt[1] == "slit":
                    p = nxt[2] - p
                    ang = (a_next + math.pi) % twopi
                else:
                    p = p + nxt[2]
                    ang = a_next
            else:
                raise GeometryError("sector chain did not close")
            seen.update(cycle)
            yield round(total / math.pi, 6), sectors


# ---------------------------------------------------------------------------
# skeletons from cover gluings

def cover_census(cover) -> Counter:
    """Cone angles (units of pi, 2*pi excluded) of a cyclic pillowcase cover."""
    from .covers import build_complex, singularity_orders
    out = Counter()
    for counts in singularity_orders(build_complex(cover)).values():
        for ang, k in counts.items():
            if ang != 2:
                out[float(ang)] += k
    return out


@dataclass
class CutAndTurn:
    """The cover as one rectangle R = [0,d] x [-1,1] after the central cut.

    tops[j] is the translation carrying the bottom partner of the top unit
    segment [j, j+1] x {1} onto it; folds maps each fold center to the plane
    edges folded about it.
    """
    d: int
    tops: list
    folds: dict


def _square_gluings(d: int, wh: int, wv: int) -> list:
    # unit squares 2i, 2i+1 are the halves of rectangle i; 'T' glues right
    # edge to left edge by translation, 'H' by a half turn (top or bottom)
    out = []
    for i in range(d):
        L, R = 2 * i, 2 * i + 1
        out.append((L, R, "T", (-1, 0)))
        out.append((R, 2 * ((i + wv) % d), "T", (-1, 0)))
        out.append((R, 2 * ((i + wh) % d), "H", (1, 2)))
        out.append((R, L, "H", (1, 0)))
    return out


_EDGE = {"right": ((1, 0), (1, 1)), "left": ((0, 0), (0, 1)),
         "top": ((0, 1), (1, 1)), "bottom": ((0, 0), (1, 0))}


def cut_and_turn(cover) -> CutAndTurn:
    """Cut the strip of d rectangles vertically through its center and turn the right half underneath."""
    d, wh, wv = cover.d, cover.w_h, cover.w_v
    if math.gcd(wv, d) != 1:
        raise GeometryError("the vertical gluing does not form a single strip")
    pos, sgn = {}, {}
    for k, r in enumerate((k * wv) % d for k in range(d)):
        for half in (0, 1):
            s, sq = 2 * k + half, 2 * r + half
            if s < d:
                pos[sq], sgn[sq] = (s, 0), 1
            else:
                # half turn: [s, s+1] x [0,1] lands on [2d-s-1, 2d-s] x [-1,0]
                pos[sq], sgn[sq] = (2 * d - s, 0), -1

    def plane(sq, edge):
        (px, py), s = pos[sq], sgn[sq]
        return sorted((px + s * x, py + s * y) for x, y in _EDGE[edge])

    tops = [None] * d
    folds: dict = {}
    for A, B, kind, v in _square_gluings(d, wh, wv):
        if kind == "T":
            ea, eb = "right", "left"
        else:
            ea = eb = "top" if v == (1, 2) else "bottom"
        pa, pb = plane(A, ea), plane(B, eb)
        if sgn[A] * sgn[B] * (1 if kind == "T" else -1) == 1:
            t = (pb[0][0] - pa[0][0], pb[0][1] - pa[0][1])
            if t == (0, 0):
                continue
            top, bot = (pa, pb) if pa[0][1] == 1 else (pb, pa)
            tops[top[0][0]] = (top[0][0] - bot[0][0], top[0][1] - bot[0][1])
        else:
            c = ((pa[0][0] + pb[1][0]) / 2, (pa[0][1] + pb[1][1]) / 2)
            folds.setdefault(c, []).extend([tuple(pa), tuple(pb)])
    if any(t is None for t in tops):
        raise GeometryError("top edge is not translation glued to the bottom")
    return CutAndTurn(d, tops, folds)


def plane_skeleton(cover) -> Skeleton:
    """Periodic plane skeleton of the cover's Z^2 homology cover.

    Copies of R are placed along the translations of the outer top
    segments; top segments glued by any other translation leave a
    rectangular hole, filled in as a pillow-fold whose slit sides are the
    vertical edges of R.
    """
    ct = cut_and_turn(cover)
    d = ct.d
    vl, vr = Vec2(*ct.tops[0]), Vec2(*ct.tops[-1])
    lat = Lattice(vl, vr)
    folds: list = []
    for c, edges in sorted(ct.folds.items()):
        if c[1] != 0:
            raise GeometryError("unexpected fold off the middle line")
        if all(p[1] == 0 and q[1] == 0 for p, q in edges):
            xs = [p[0] for e in edges for p in e]
            folds.append(SlitFold.of((min(xs), 0), (max(xs), 0)))
    pillows = []
    j = 0
    while j < d:
        t = ct.tops[j]
        if t in (ct.tops[0], ct.tops[-1]):
            j += 1
            continue
        k = j
        while k < d and ct.tops[k] == t:
            k += 1
        jump = vl + vr - Vec2(*t)
        if abs(jump.x) > 1e-12 or jump.y <= 0:
            raise GeometryError("hole is not an upright rectangle")
        pillows.append(PillowFold((j, 1), (j, 1 + jump.y), (j, 1), (k, 1)))
        j = k
    if not pillows:
        folds.append(SlitFold.of((0, -1), (0, 1)))
    return Skeleton(lat, folds + pillows)


def _wollmilchsau() -> Skeleton:
    return Skeleton(Lattice((0, 4), (4, 2)),
                    [SlitFold.of((-2, 0), (2, 0)), SlitFold.of((0, 0), (0, 2)),
                     SlitFold.of((0, 0), (0, -2))])


def _x4() -> Skeleton:
    # two folds sharing an endpoint give the 6pi point; the other two each
    # end on a strand center, giving the two 3pi points
    return Skeleton(Lattice((4, 0), (0, 3)),
                    [SlitFold.of((0, 0), (2, 0)), SlitFold.of((0, 0), (0, 2)),
                     SlitFold.of((1, 0), (1, 1)), SlitFold.of((0, 1), (-1, 1))])


def builtin_skeleton(name: str) -> Skeleton:
    from .covers import CyclicCover
    key = name.lower().replace("-", "_")
    if key in ("wollmilchsau", "x3"):
        return _wollmilchsau()
    if key == "x2":
        return plane_skeleton(CyclicCover(3, 2, 1))
    if key == "x4":
        return _x4()
    if key == "c6_3_1":
        return plane_skeleton(CyclicCover(6, 3, 1))
    raise UnknownName(f"unknown model {name!r}")


BUILTIN_COVERS = {"wollmilchsau": (4, 2, 1), "x2": (3, 2, 1), "x4": (6, 3, 1), "c6_3_1": (6, 3, 1)}
