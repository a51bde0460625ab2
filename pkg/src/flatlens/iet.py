"""First-return interval exchanges of skeleton flows, their Z^d cocycles and skew products.

The section is a segment I transversal to theta, doubled over the two ways
of crossing it: the + copy crosses with velocity u(theta), the - copy with
-u(theta).  On the doubled coordinate y in [0, 2L) the + copy is read
along I and the - copy against it (y = 2L - x), which makes the return map
orientation preserving.  The deck class xi of a branch is the lattice
translate of I on which the orbit returns.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba as nb
import numpy as np

from .flow import EPS_END, EPS_T, _next_event, _wrap, compile_model
from .planar import GeometryError, Lattice, Vec2, direction
from .skeleton import PillowFold, Skeleton

SECTION = 6.0
# return codes of the section kernel
HIT, SINGULAR_HIT, CAPPED = 0, 1, 2


class SaddleConnectionDetected(GeometryError):
    pass


class SectionThroughSingularity(GeometryError):
    pass


class DiscontinuityHit(ValueError):
    pass


class ExactPeriodicity(Exception):
    def __init__(self, period: int):
        super().__init__(f"base map is periodic with period {period}")
        self.period = period


@dataclass(frozen=True)
class Section:
    """Segment origin + x * direction, 0 <= x < length."""
    origin: Vec2
    direction: Vec2
    length: float

    def point(self, x: float) -> Vec2:
        return self.origin + self.direction * x

    @property
    def center(self) -> Vec2:
        return self.point(self.length / 2)

    @classmethod
    def perpendicular(cls, theta: float, origin, length: float) -> "Section":
        u = direction(theta)
        return cls(Vec2(*origin), Vec2(u.y, -u.x), float(length))

    def sub(self, a: float, b: float) -> "Section":
        return Section(self.point(a), self.direction, b - a)

    def to_json(self):
        return {"origin": [self.origin.x, self.origin.y],
                "direction": [self.direction.x, self.direction.y], "length": self.length}


# ---------------------------------------------------------------------------
# the section kernel

@nb.njit(cache=True)
def _to_section(px, py, m, n, ux, uy, prims, g, periodic, sec, cap):
    """Flow until the section row `sec` is crossed.

    Returns (code, s, dm, dn, path, ux, uy, px, py, m, n): s is the offset
    along the section from its center, (dm, dn) the translate hit.
    """
    path = 0.0
    while True:
        t, k, tm, tn, s = _next_event(px, py, ux, uy, prims, g, periodic, cap - path + 1.0)
        if k < 0 or path + t > cap:
            return CAPPED, 0.0, 0, 0, path, ux, uy, px, py, m, n
        hx = px + t * ux
        hy = py + t * uy
        path += t
        kind = prims[k, 0]
        if kind == SECTION:
            return HIT, s, m + tm, n + tn, path, ux, uy, hx, hy, m, n
        if abs(s) >= prims[k, 5] - EPS_END:
            return SINGULAR_HIT, s, m + tm, n + tn, path, ux, uy, hx, hy, m, n
        if kind == 0.0:
            cx = prims[k, 1] + tm * g[0, 0] + tn * g[1, 0]
            cy = prims[k, 2] + tm * g[0, 1] + tn * g[1, 1]
            hx = 2.0 * cx - hx
            hy = 2.0 * cy - hy
            ux = -ux
            uy = -uy
        else:
            hx += prims[k, 6]
            hy += prims[k, 7]
        px, py = hx, hy
        if periodic:
            px, py, m, n = _wrap(g, px, py, m, n)


class _Tracer:
    """A compiled skeleton plus one section row."""

    def __init__(self, skel: Skeleton, theta: float, section: Section):
        if skel.lattice is None:
            raise GeometryError("IET extraction needs a torus skeleton (a lattice)")
        cm = compile_model(skel)
        c = section.center
        e = section.direction
        row = [SECTION, c.x, c.y, e.x, e.y, section.length / 2, 0.0, 0.0]
        self.prims = np.vstack([cm.prims, np.array(row)]) if len(cm.prims) else np.array([row])
        self.sec = len(self.prims) - 1
        self.g = cm.g
        self.lattice = skel.lattice
        self.section = section
        self.theta = theta
        self.u = direction(theta)
        g1, g2 = skel.lattice.g1, skel.lattice.g2
        self.cap = 1e3 * max((g1 + g2).norm(), (g1 - g2).norm())
        self.closed = self.lattice.contains(e * section.length)

    def raw(self, s: float) -> float:
        x = self.section.length / 2 + s
        if self.closed and x >= self.section.length - 1e-12:
            x -= self.section.length
        return x

    def start(self, L: float, y: float):
        """Point and sign for doubled coordinate y."""
        if y < L:
            return self.section.point(y), 1
        return self.section.point(2 * L - y), -1

    def ret(self, y: float):
        """(code, image y, xi, tau) for the doubled coordinate y."""
        L = self.section.length
        p, sign = self.start(L, y)
        # deck of the translate of I containing p is (0, 0) by convention
        px, py, m, n = _wrap(self.g, p.x, p.y, 0, 0)
        ux, uy = sign * self.u.x, sign * self.u.y
        code, s, dm, dn, path, vx, vy = _to_section(px, py, m, n, ux, uy, self.prims, self.g,
                                                    True, self.sec, self.cap)[:7]
        if code != HIT:
            return code, math.nan, (0, 0), path
        x = self.raw(s)
        back = 1 if vx * self.u.x + vy * self.u.y > 0 else -1
        yy = x if back > 0 else 2 * L - x
        if yy >= 2 * L - 1e-15:
            yy -= 2 * L
        return HIT, yy, (int(dm), int(dn)), path


# ---------------------------------------------------------------------------
# the IET object

@dataclass
class IetWithCocycle:
    """Orientation preserving IET on [0, total) with per-interval data.

    Interval a is [starts[a], starts[a] + lengths[a]) and is translated to
    [images[a], images[a] + lengths[a]).
    """
    lengths: np.ndarray
    images: np.ndarray
    tau: np.ndarray
    xi: np.ndarray
    section: Optional[Section] = None
    theta: Optional[float] = None
    saddle_connections: int = 0
    starts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.lengths = np.asarray(self.lengths, dtype=float)
        self.images = np.asarray(self.images, dtype=float)
        self.tau = np.asarray(self.tau, dtype=float)
        self.xi = np.asarray(self.xi, dtype=np.int64).reshape(len(self.lengths), -1)
        self.starts = np.concatenate([[0.0], np.cumsum(self.lengths)[:-1]])

    @property
    def total(self) -> float:
        return float(self.lengths.sum())

    @property
    def breakpoints(self) -> np.ndarray:
        return self.starts[1:]

    def __len__(self):
        return len(self.lengths)

    def locate(self, y):
        """Interval index of y (vectorized)."""
        idx = np.searchsorted(self.starts, y, side="right") - 1
        return np.clip(idx, 0, len(self.lengths) - 1)

    def __call__(self, y):
        a = self.locate(y)
        return y - self.starts[a] + self.images[a]

    def check(self, tol: float = 1e-9) -> list[str]:
        """Violated invariants (empty when the IET is valid)."""
        bad = []
        if self.section is not None and abs(self.total - 2 * self.section.length) > tol:
            bad.append(f"lengths sum to {self.total}, section is {2 * self.section.length}")
        if np.any(self.lengths <= 0):
            bad.append("non-positive length")
        if np.any(self.tau <= 0):
            bad.append("non-positive return time")
        order = np.argsort(self.images)
        ends = self.images[order] + self.lengths[order]
        if abs(self.images[order][0]) > tol or abs(ends[-1] - self.total) > tol:
            bad.append("images do not cover the section")
        if np.any(np.abs(self.images[order][1:] - ends[:-1]) > tol):
            bad.append("images overlap or leave gaps")
        return bad

    def to_json(self) -> str:
        return json.dumps({"lengths": self.lengths.tolist(), "images": self.images.tolist(),
                           "tau": self.tau.tolist(), "xi": self.xi.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "IetWithCocycle":
        d = json.loads(text)
        return cls(d["lengths"], d["images"], d["tau"], d["xi"])

    @classmethod
    def rotation(cls, alpha: float, cuts: Sequence[float] = (), values: Sequence = ()):
        """Rotation x -> x + alpha mod 1, optionally split at `cuts` and
        labelled interval by interval with `values` (the cocycle)."""
        alpha = alpha % 1.0
        pts = sorted({0.0, 1.0 - alpha, *[c % 1.0 for c in cuts]} - {1.0})
        pts.append(1.0)
        lengths = np.diff(pts)
        starts = np.array(pts[:-1])
        images = np.where(starts < 1.0 - alpha - 1e-15, starts + alpha, starts + alpha - 1.0)
        xi = np.asarray(values, dtype=np.int64).reshape(len(lengths), -1) if len(values) \
            else np.zeros((len(lengths), 1), dtype=np.int64)
        return cls(lengths, images, np.ones(len(lengths)), xi)


# ---------------------------------------------------------------------------
# extraction

def default_section(skel: Skeleton, theta: float) -> Section:
    """A perpendicular section through a generic point, about half the shortest period long."""
    lat = skel.lattice.reduce()
    short = min(lat.g1.norm(), lat.g2.norm())
    origin = skel.lattice.g1 * 0.3183098861837907 + skel.lattice.g2 * 0.5772156649015329
    return Section.perpendicular(theta, (origin.x, origin.y), 0.5 * short)


def _singular_points(skel: Skeleton) -> list[Vec2]:
    pts = []
    for pr in skel.primitives():
        pts += [pr.seg.a, pr.seg.b]
    return pts


def _check_section(skel: Skeleton, tr: _Tracer, tol: float = 1e-9):
    sec = tr.section
    if abs(sec.direction.cross(tr.u)) < 1e-9:
        raise GeometryError("section is parallel to the flow")
    lat = skel.lattice
    for p in _singular_points(skel):
        w = lat.wrap(p - sec.origin)
        for dm in (-1, 0, 1):
            for dn in (-1, 0, 1):
                q = w + lat.point(dm, dn)
                x = q.dot(sec.direction)
                if -tol <= x <= sec.length + tol and abs(q.cross(sec.direction)) < tol:
                    raise SectionThroughSingularity(f"section passes through {p}")


def _section_crossings(skel: Skeleton, sec: Section) -> list[Vec2]:
    """(x, point, image across the fold) where the section meets a fold.

    Orbits through such a point reach the section and the fold at once, so
    they separate branches of the return map just like singular orbits.
    """
    lat = skel.lattice
    out = []
    span = sec.length + max(pr.seg.half_length for pr in skel.primitives()) * 2 \
        if skel.folds else 0.0
    for pr in skel.primitives():
        w = lat.wrap(pr.seg.center - sec.center)
        reach = int(math.ceil(span / min(lat.reduce().g1.norm(), lat.reduce().g2.norm()))) + 1
        for dm in range(-reach - 1, reach + 2):
            for dn in range(-reach - 1, reach + 2):
                c = sec.center + w + lat.point(dm, dn)
                a = c - pr.seg.direction * pr.seg.half_length
                e = pr.seg.direction
                den = sec.direction.cross(e)
                if abs(den) < 1e-14:
                    continue
                d0 = a - sec.origin
                x = d0.cross(e) / den
                t = d0.cross(sec.direction) / den
                if 0.0 <= x <= sec.length and 0.0 <= t <= 2 * pr.seg.half_length:
                    q = sec.point(x)
                    out.append((x, q, c * 2 - q if pr.kind == "slit" else q + pr.shift))
    return out


def _candidates(skel: Skeleton, tr: _Tracer) -> tuple[list[float], int]:
    """Doubled coordinates of the section points whose orbit runs into a
    singularity or a section endpoint, found by tracing backward."""
    L = tr.section.length
    sources = _singular_points(skel)
    out, saddles = [], 0
    for x, q, q2 in _section_crossings(skel, tr.section):
        # the crossing itself splits both copies
        out += [x, 2 * L - x]
        sources += [q, q2]
    if not tr.closed:
        sources += [tr.section.point(0.0), tr.section.point(L)]
    for p in sources:
        for sign in (1, -1):
            ux, uy = sign * tr.u.x, sign * tr.u.y
            px, py, m, n = _wrap(tr.g, p.x, p.y, 0, 0)
            code, s, dm, dn, path, vx, vy = _to_section(px, py, m, n, ux, uy, tr.prims, tr.g,
                                                        True, tr.sec, tr.cap)[:7]
            if code == SINGULAR_HIT:
                saddles += 1
                continue
            if code != HIT:
                continue
            x = tr.raw(s)
            # the forward orbit left the section against the arrival velocity
            fwd = -1 if vx * tr.u.x + vy * tr.u.y > 0 else 1
            out.append(x if fwd > 0 else 2 * L - x)
    return out, saddles


def _branch(tr: _Tracer, y: float):
    code, yy, xi, tau = tr.ret(y)
    if code != HIT:
        return None
    L2 = 2 * tr.section.length
    off = (yy - y) % L2
    return (round(off, 7) % round(L2, 7), xi), tau


def extract_iet(skel: Skeleton, theta: float, section: Optional[Section] = None,
                samples: int = 1024, bisect_steps: int = 60, strict: bool = False) -> IetWithCocycle:
    section = section or default_section(skel, theta)
    tr = _Tracer(skel, theta, section)
    _check_section(skel, tr)
    L = section.length
    L2 = 2 * L
    cands, saddles = _candidates(skel, tr)
    if strict and saddles:
        raise SaddleConnectionDetected(f"{saddles} separatrices end in a singularity")
    cuts = {0.0, L, L2}
    cuts.update(c for c in cands if 0.0 < c < L2)
    # sampling finds what the backward traces missed; bisection pins it down
    ys = (np.arange(samples) + 0.5) * (L2 / samples)
    keys = [_branch(tr, y) for y in ys]
    bisected = 0
    for i in range(samples - 1):
        ka, kb = keys[i], keys[i + 1]
        a, b = ys[i], ys[i + 1]
        if (ka and kb and ka[0] == kb[0]) or any(a < c < b for c in cuts):
            continue
        for _ in range(bisect_steps):
            mid = 0.5 * (a + b)
            km = _branch(tr, mid)
            if km is not None and ka is not None and km[0] == ka[0]:
                a = mid
            else:
                b = mid
        cuts.add(0.5 * (a + b))
        bisected += 1
    pts = sorted(cuts)
    # drop cuts closer than the working precision
    clean = [pts[0]]
    for p in pts[1:]:
        if p - clean[-1] > 1e-11:
            clean.append(p)
    clean[-1] = L2
    lengths, images, taus, xis = [], [], [], []
    for a, b in zip(clean[:-1], clean[1:]):
        mid = 0.5 * (a + b)
        code, yy, xi, tau = tr.ret(mid)
        if code != HIT:
            if strict:
                raise SaddleConnectionDetected(f"orbit of {mid} never returns")
            raise GeometryError(f"orbit of section point {mid} does not return within the cap")
        img = (yy - (mid - a)) % L2
        if lengths and xi == xis[-1] and abs(img - (images[-1] + lengths[-1]) % L2) < 1e-9 \
                and abs(tau - taus[-1]) < 1e-7:
            lengths[-1] += b - a
            continue
        lengths.append(b - a)
        images.append(img)
        taus.append(tau)
        xis.append(xi)
    imgs = np.array(images)
    imgs[np.abs(imgs - L2) < 1e-9] = 0.0
    out = IetWithCocycle(np.array(lengths), imgs, np.array(taus), np.array(xis),
                         section=section, theta=theta, saddle_connections=saddles)
    out.bisected = bisected
    return out


def direct_return(skel: Skeleton, theta: float, section: Section, y: float):
    """(image y, xi, tau) by tracing the flow, without the IET."""
    tr = _Tracer(skel, theta, section)
    code, yy, xi, tau = tr.ret(y)
    if code != HIT:
        raise GeometryError(f"no return from {y}")
    return yy, xi, tau


# ---------------------------------------------------------------------------
# cocycles and skew products

def cocycle(iet: IetWithCocycle, gamma: Sequence) -> np.ndarray:
    """psi table: row a holds the pairings <gamma_i, xi_a>."""
    G = np.asarray(gamma, dtype=np.int64).reshape(-1, iet.xi.shape[1])
    return iet.xi @ G.T


@dataclass
class SkewOrbit:
    x: np.ndarray
    g: np.ndarray


def _near_break(iet: IetWithCocycle, y: float, tol: float) -> bool:
    b = iet.breakpoints
    return bool(len(b)) and float(np.min(np.abs(b - y))) < tol


def skew_orbit(iet: IetWithCocycle, psi: np.ndarray, x0: float, N: int,
               tol: float = 1e-12) -> SkewOrbit:
    psi = np.asarray(psi, dtype=np.int64).reshape(len(iet), -1)
    xs = np.empty(N + 1)
    gs = np.zeros((N + 1, psi.shape[1]), dtype=np.int64)
    x = float(x0)
    xs[0] = x
    for k in range(N):
        if _near_break(iet, x, tol):
            raise DiscontinuityHit(f"step {k} lands on a discontinuity at {x}")
        a = int(iet.locate(x))
        gs[k + 1] = gs[k] + psi[a]
        x = x - iet.starts[a] + iet.images[a]
        xs[k + 1] = x
    return SkewOrbit(xs, gs)


def deck_consistency(iet: IetWithCocycle, skel: Skeleton, theta: float, x0: float, N: int,
                     pos_tol: float = 1e-6) -> bool:
    """Trace one leaf through N section returns and compare deck values with the skew orbit."""
    orbit = skew_orbit(iet, iet.xi, x0, N)
    tr = _Tracer(skel, theta, iet.section)
    L = iet.section.length
    p, sign = tr.start(L, x0)
    # the starting translate of the section is (0, 0), as in _Tracer.ret
    px, py, m, n = _wrap(tr.g, p.x, p.y, 0, 0)
    ux, uy = sign * tr.u.x, sign * tr.u.y
    deck = np.zeros(2, dtype=np.int64)
    for k in range(N):
        code, s, dm, dn, path, ux, uy, px, py, m, n = _to_section(
            px, py, m, n, ux, uy, tr.prims, tr.g, True, tr.sec, tr.cap)
        if code != HIT:
            return False
        deck = np.array([dm, dn], dtype=np.int64)
        x = tr.raw(s)
        y = x if ux * tr.u.x + uy * tr.u.y > 0 else 2 * L - x
        if not np.array_equal(deck, orbit.g[k + 1]):
            return False
        if abs(y - orbit.x[k + 1]) > pos_tol and abs(abs(y - orbit.x[k + 1]) - 2 * L) > pos_tol:
            return False
        # continue from the hit point on the section
        m, n = int(m), int(n)
    return True


# ---------------------------------------------------------------------------
# inducing

@dataclass
class InducedPiece:
    start: float
    length: float
    image: float
    steps: int
    psi: np.ndarray


def _in_set(intervals, y, tol=1e-12):
    return any(a - tol <= y < b - tol for a, b in intervals)


def induce(iet: IetWithCocycle, psi: np.ndarray, J: Sequence[tuple[float, float]],
           max_steps: int = 100000) -> list[InducedPiece]:
    """First return of the IET to the union J of intervals, with Birkhoff sums of psi.

    Pieces are split exactly at the preimages of IET breakpoints and of the
    ends of J.
    """
    psi = np.asarray(psi, dtype=np.int64).reshape(len(iet), -1)
    bounds = sorted({e for ab in J for e in ab})
    todo = [(a, b - a, a, 0, np.zeros(psi.shape[1], dtype=np.int64)) for a, b in J]
    out = []
    while todo:
        s0, ln, cur, h, acc = todo.pop()
        if h and _in_set(J, cur + 0.5 * ln):
            out.append(InducedPiece(s0, ln, cur, h, acc))
            continue
        if h > max_steps:
            raise GeometryError("no return to J within the step limit")
        a = int(iet.locate(cur + 1e-15 * max(1.0, iet.total)))
        # split at the end of the current interval
        end = iet.starts[a] + iet.lengths[a]
        if cur + ln > end + 1e-13:
            cut = end - cur
            todo.append((s0 + cut, ln - cut, end, h, acc.copy()))
            ln = cut
        img = cur - iet.starts[a] + iet.images[a]
        acc = acc + psi[a]
        # split the image at the ends of J
        cuts = [c - img for c in bounds if img + 1e-13 < c < img + ln - 1e-13]
        if cuts:
            c = cuts[0]
            todo.append((s0 + c, ln - c, img + c, h + 1, acc.copy()))
            ln = c
        todo.append((s0, ln, img, h + 1, acc))
    out.sort(key=lambda p: p.start)
    return out


def doubled_sub(iet: IetWithCocycle, a: float, b: float) -> list[tuple[float, float]]:
    """Doubled coordinates of the sub-segment [a, b] of the section."""
    L = iet.section.length
    return [(a, b), (2 * L - b, 2 * L - a)]


def tower_check(iet: IetWithCocycle, skel: Skeleton, theta: float, a: float, b: float,
                gamma: Sequence = ((1, 0), (0, 1)), probes: int = 3,
                pos_tol: float = 1e-8) -> tuple[bool, list[str]]:
    """Birkhoff sums over return towers to J against the classes of the J-return loops.

    J = [a, b] on the section (both copies).  The J-return of each probe point
    is traced directly in the flow on the section J.
    """
    psi = cocycle(iet, gamma)
    G = np.asarray(gamma, dtype=np.int64).reshape(-1, 2)
    Jd = doubled_sub(iet, a, b)
    pieces = induce(iet, psi, Jd)
    sub = iet.section.sub(a, b)
    tr = _Tracer(skel, theta, sub)
    L, LJ = iet.section.length, b - a
    problems = []

    def to_j(y):
        return (y - a) if y < L else 2 * LJ - ((2 * L - y) - a)

    for pc in pieces:
        for k in range(probes):
            # irrational fractions: piece midpoints can sit on leaves through
            # removable marked points, where the tracer stops
            y = pc.start + pc.length * ((k + 0.6180339887) / probes)
            code, yy, xi, tau = tr.ret(to_j(y))
            if code != HIT:
                problems.append(f"J-return of {y} failed")
                continue
            want = G @ np.asarray(xi, dtype=np.int64)
            if not np.array_equal(want, pc.psi):
                problems.append(f"at {y}: Birkhoff sum {pc.psi.tolist()} vs class {want.tolist()}")
            img = pc.image + (y - pc.start)
            if abs(to_j(img) - yy) > pos_tol:
                problems.append(f"at {y}: induced image {to_j(img)} vs traced {yy}")
    return (not problems), problems


# ---------------------------------------------------------------------------
# rigidity scan

@dataclass
class EssentialValueCandidates:
    candidates: list          # (g, h, measure, sup displacement)
    subgroup: list            # Hermite basis rows of the generated subgroup
    index: Optional[int]      # index in Z^d, None when the rank is deficient
    monte_carlo: bool = True

    def to_dict(self):
        return {"candidates": [{"g": list(map(int, g)), "h": int(h), "measure": float(mu),
                                "sup_displacement": float(sd)} for g, h, mu, sd in self.candidates],
                "subgroup": self.subgroup, "index": self.index, "monte_carlo": self.monte_carlo}


def _subgroup(vectors: list, d: int):
    from sympy import Matrix
    from sympy.matrices.normalforms import hermite_normal_form, smith_normal_form
    from sympy.polys.domains import ZZ
    if not vectors:
        return [], None
    M = Matrix(vectors)
    if M.rank() < d:
        H = hermite_normal_form(M.T).T
        return [list(map(int, H.row(i))) for i in range(H.rows)], None
    S = smith_normal_form(M, domain=ZZ)
    index = 1
    for i in range(d):
        index *= abs(int(S[i, i]))
    H = hermite_normal_form(M.T).T
    return [list(map(int, H.row(i))) for i in range(H.rows)], index


def _circ(a, b, total):
    d = np.abs(a - b) % total
    return np.minimum(d, total - d)


def rigidity_scan(iet: IetWithCocycle, psi, h_max: int, rigid_tol: float = 1e-2,
                  measure_floor: float = 0.05, samples: int = 4000, seed: int = 0,
                  delta: float = 1e-9) -> EssentialValueCandidates:
    """Near-rigid times h <= h_max and the values psi^(h) takes on the near-rigid set.

    Measures are Monte Carlo estimates over `samples` uniform points; psi^(h)
    counts as locally constant at x when it agrees at x - delta and x + delta.
    """
    psi = np.asarray(psi, dtype=np.int64).reshape(len(iet), -1)
    d = psi.shape[1]
    total = iet.total
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, total, samples)
    lo = np.clip(x - delta, 0.0, total)
    hi = np.clip(x + delta, 0.0, total)
    pts = np.concatenate([x, lo, hi])
    cur = pts.copy()
    acc = np.zeros((len(pts), d), dtype=np.int64)
    cands = []
    for h in range(1, h_max + 1):
        a = iet.locate(cur)
        acc += psi[a]
        cur = cur - iet.starts[a] + iet.images[a]
        disp = _circ(cur[:samples], x, total)
        if np.all(disp < 1e-12):
            raise ExactPeriodicity(h)
        gx = acc[:samples]
        const = np.all(acc[samples:2 * samples] == gx, axis=1) & \
            np.all(acc[2 * samples:] == gx, axis=1)
        near = (disp < rigid_tol) & const
        if not near.any():
            continue
        vals, counts = np.unique(gx[near], axis=0, return_counts=True)
        for v, c in zip(vals, counts):
            mu = c / samples
            if mu >= measure_floor:
                sel = near & np.all(gx == v, axis=1)
                cands.append((tuple(int(t) for t in v), h, float(mu), float(disp[sel].max())))
    nonzero = [list(g) for g, *_ in cands if any(g)]
    basis, index = _subgroup(nonzero, d)
    return EssentialValueCandidates(cands, basis, index)
