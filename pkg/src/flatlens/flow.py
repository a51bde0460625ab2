"""Event-driven tracing of directional flows on skeletons and lens fields.

Positions are kept as a point of the fundamental parallelogram plus an
integer deck index, so long traces do not lose precision.  The hot loop is
compiled with numba; everything else is thin Python around it.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba as nb
import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .configurations import LensConfiguration, SlitConfiguration
from .planar import GeometryError, Lattice, Vec2, direction, vec
from .skeleton import Skeleton

# event kinds
SLIT, JUMP, LENS, SINGULAR, END, ESCAPE = 0, 1, 2, 3, 4, 5
KIND_NAMES = {SLIT: "fold-cross", JUMP: "pillow-jump", LENS: "lens-transit",
              SINGULAR: "singular", END: "end", ESCAPE: "escape"}

EPS_T = 1e-9      # minimal travel before a new hit counts
EPS_END = 1e-9    # distance to a fold endpoint treated as a cone point hit


class TravelCapExceeded(GeometryError):
    pass


class TooFewSamples(ValueError):
    pass


# ---------------------------------------------------------------------------
# model compilation

@dataclass
class CompiledModel:
    """Flat arrays describing one period of a model.

    prims columns: kind, cx, cy, ex, ey, half (or radius), shx, shy
    """
    prims: np.ndarray
    owners: np.ndarray
    g: np.ndarray
    periodic: bool
    n_objects: int


def compile_model(model) -> CompiledModel:
    if isinstance(model, SlitConfiguration):
        model = model.to_skeleton()
    rows, owners = [], []
    if isinstance(model, LensConfiguration):
        lat = model.lattice
        for j, lens in enumerate(model.lenses):
            rows.append([LENS, lens.c.x, lens.c.y, 0.0, 0.0, lens.r, 0.0, 0.0])
            owners.append(j)
        n_obj = len(model.lenses)
    elif isinstance(model, Skeleton):
        lat = model.lattice
        for p in model.primitives():
            e = p.seg.direction
            kind = SLIT if p.kind == "slit" else JUMP
            c = p.seg.center
            rows.append([kind, c.x, c.y, e.x, e.y, p.seg.half_length, p.shift.x, p.shift.y])
            owners.append(p.owner)
        n_obj = len(model.folds)
    else:
        raise TypeError(f"cannot trace on {type(model).__name__}")
    prims = np.array(rows, dtype=np.float64).reshape(-1, 8)
    if lat is None:
        g = np.eye(2)
        periodic = False
    else:
        g = np.array([[lat.g1.x, lat.g1.y], [lat.g2.x, lat.g2.y]], dtype=np.float64)
        periodic = True
    return CompiledModel(prims, np.array(owners, dtype=np.int64), g, periodic, n_obj)


# ---------------------------------------------------------------------------
# numba core

@nb.njit(cache=True)
def _coords(g, x, y):
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    a = (x * g[1, 1] - y * g[1, 0]) / det
    b = (g[0, 0] * y - g[0, 1] * x) / det
    return a, b


@nb.njit(cache=True)
def _wrap(g, x, y, m, n):
    a, b = _coords(g, x, y)
    fa = math.floor(a)
    fb = math.floor(b)
    if fa != 0 or fb != 0:
        x -= fa * g[0, 0] + fb * g[1, 0]
        y -= fa * g[0, 1] + fb * g[1, 1]
        m += int(fa)
        n += int(fb)
    return x, y, m, n


@nb.njit(cache=True)
def _hit_prim(k, prims, ox, oy, ux, uy):
    """Travel time to primitive row k from (ox, oy) along u, or inf; also the
    signed offset along the segment (impact parameter for lenses)."""
    kind = prims[k, 0]
    cx = prims[k, 1]
    cy = prims[k, 2]
    if kind == 2.0:
        R = prims[k, 5]
        wx = ox - cx
        wy = oy - cy
        b = wx * ux + wy * uy
        cc = wx * wx + wy * wy - R * R
        disc = b * b - cc
        if disc <= 0.0:
            return np.inf, 0.0
        t = -b - math.sqrt(disc)
        if t <= EPS_T:
            return np.inf, 0.0
        # impact parameter: offset of the entry point along perp(u)
        hx = ox + t * ux - cx
        hy = oy + t * uy - cy
        s = -uy * hx + ux * hy
        return t, s
    ex = prims[k, 3]
    ey = prims[k, 4]
    h = prims[k, 5]
    denom = ux * ey - uy * ex
    if abs(denom) < 1e-14:
        return np.inf, 0.0
    wx = cx - ox
    wy = cy - oy
    t = (wx * ey - wy * ex) / denom
    s = (wx * uy - wy * ux) / denom
    if t <= EPS_T or abs(s) > h + EPS_END:
        return np.inf, 0.0
    return t, s


@nb.njit(cache=True)
def _next_event(px, py, ux, uy, prims, g, periodic, horizon_cap):
    """First primitive hit along the ray.

    Returns (t, row, tm, tn, s); row = -1 when nothing is hit before
    horizon_cap.  (tm, tn) is the lattice translate of the primitive.
    """
    P = prims.shape[0]
    best_t = np.inf
    best_k = -1
    best_m = 0
    best_n = 0
    best_s = 0.0
    if not periodic:
        for k in range(P):
            t, s = _hit_prim(k, prims, px, py, ux, uy)
            if t < best_t:
                best_t, best_k, best_s = t, k, s
        if best_t > horizon_cap:
            return np.inf, -1, 0, 0, 0.0
        return best_t, best_k, 0, 0, best_s
    g1x, g1y, g2x, g2y = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
    vx = -uy
    vy = ux
    H = 2.0 * (math.hypot(g1x, g1y) + math.hypot(g2x, g2y))
    pg2 = vx * g2x + vy * g2y
    pg1 = vx * g1x + vy * g1y
    while True:
        for k in range(P):
            rho = prims[k, 5]
            if prims[k, 0] != 2.0:
                rho = rho + EPS_END
            # points o = c_k - p relative
            ocx = prims[k, 1] - px
            ocy = prims[k, 2] - py
            # bounding box of the needed translates: -o + [ -rho, H+rho ] stretch
            xs0 = min(0.0, H * ux) - rho - ocx
            xs1 = max(0.0, H * ux) + rho - ocx
            ys0 = min(0.0, H * uy) - rho - ocy
            ys1 = max(0.0, H * uy) + rho - ocy
            amin = np.inf
            amax = -np.inf
            bmin = np.inf
            bmax = -np.inf
            for cx_ in (xs0, xs1):
                for cy_ in (ys0, ys1):
                    a, b = _coords(g, cx_, cy_)
                    amin = min(amin, a)
                    amax = max(amax, a)
                    bmin = min(bmin, b)
                    bmax = max(bmax, b)
            m0 = int(math.floor(amin))
            m1 = int(math.ceil(amax))
            n0 = int(math.floor(bmin))
            n1 = int(math.ceil(bmax))
            if abs(pg2) > 1e-12 * math.hypot(g2x, g2y):
                for m in range(m0, m1 + 1):
                    base = vx * (ocx + m * g1x) + vy * (ocy + m * g1y)
                    lo = (-rho - base) / pg2
                    hi = (rho - base) / pg2
                    if lo > hi:
                        lo, hi = hi, lo
                    na = max(n0, int(math.floor(lo)))
                    nb_ = min(n1, int(math.ceil(hi)))
                    for n in range(na, nb_ + 1):
                        tx = m * g1x + n * g2x
                        ty = m * g1y + n * g2y
                        t, s = _hit_prim(k, prims, px - tx, py - ty, ux, uy)
                        if t < best_t:
                            best_t, best_k, best_m, best_n, best_s = t, k, m, n, s
            else:
                for n in range(n0, n1 + 1):
                    base = vx * (ocx + n * g2x) + vy * (ocy + n * g2y)
                    lo = (-rho - base) / pg1
                    hi = (rho - base) / pg1
                    if lo > hi:
                        lo, hi = hi, lo
                    ma = max(m0, int(math.floor(lo)))
                    mb = min(m1, int(math.ceil(hi)))
                    for m in range(ma, mb + 1):
                        tx = m * g1x + n * g2x
                        ty = m * g1y + n * g2y
                        t, s = _hit_prim(k, prims, px - tx, py - ty, ux, uy)
                        if t < best_t:
                            best_t, best_k, best_m, best_n, best_s = t, k, m, n, s
        if best_t <= H:
            return best_t, best_k, best_m, best_n, best_s
        if H >= horizon_cap:
            return np.inf, -1, 0, 0, 0.0
        H = min(2.0 * H, horizon_cap)


@nb.njit(cache=True)
def _grow1(a, n):
    b = np.zeros(n, dtype=a.dtype)
    b[:a.shape[0]] = a
    return b


@nb.njit(cache=True)
def _grow1i(a, n):
    b = np.zeros(n, dtype=np.int64)
    b[:a.shape[0]] = a
    return b


@nb.njit(cache=True)
def _grow2(a, n):
    b = np.zeros((n, a.shape[1]))
    b[:a.shape[0]] = a
    return b


@nb.njit(cache=True)
def _grow2i(a, n):
    b = np.zeros((n, a.shape[1]), dtype=np.int64)
    b[:a.shape[0]] = a
    return b


@nb.njit(cache=True)
def _trace_kernel(px, py, m, n, sign, theta, prims, owners, g, periodic,
                  max_path, n_check, max_events, log_events):
    ux = sign * math.cos(theta)
    uy = sign * math.sin(theta)
    if periodic:
        px, py, m, n = _wrap(g, px, py, m, n)
    x0, y0, m0, n0 = px, py, m, n
    # checkpoints at path k*max_path/n_check, k = 0..n_check
    cp = np.zeros((n_check + 1, 2))
    cdeck = np.zeros((n_check + 1, 2), dtype=np.int64)
    cpath = np.zeros(n_check + 1)
    cap = 4096
    ev_path = np.zeros(cap)
    ev_kind = np.zeros(cap, dtype=np.int64)
    ev_xy = np.zeros((cap, 2))
    ev_obj = np.zeros((cap, 3), dtype=np.int64)
    # deck of every event, for cell counts
    ev_deck = np.zeros((cap, 2), dtype=np.int64)
    n_ev = 0
    path = 0.0
    next_cp = 0
    reason = END
    while True:
        remaining = max_path - path
        t, k, tm, tn, s = _next_event(px, py, ux, uy, prims, g, periodic, remaining + 1.0)
        travel = t if k >= 0 else np.inf
        # checkpoints on the straight piece
        while next_cp <= n_check:
            target = next_cp * max_path / n_check
            if target - path > travel + 1e-15 or target > max_path + 1e-9:
                break
            d = target - path
            qx = px + d * ux
            qy = py + d * uy
            if periodic:
                dx = qx - x0 + (m - m0) * g[0, 0] + (n - n0) * g[1, 0]
                dy = qy - y0 + (m - m0) * g[0, 1] + (n - n0) * g[1, 1]
                _, _, cm, cn = _wrap(g, qx, qy, m, n)
            else:
                dx = qx - x0
                dy = qy - y0
                cm, cn = 0, 0
            cp[next_cp, 0] = dx
            cp[next_cp, 1] = dy
            cdeck[next_cp, 0] = cm
            cdeck[next_cp, 1] = cn
            cpath[next_cp] = target
            next_cp += 1
        if k < 0 or path + travel >= max_path:
            # free flight to the end
            d = max_path - path
            px += d * ux
            py += d * uy
            path = max_path
            if periodic:
                px, py, m, n = _wrap(g, px, py, m, n)
            reason = END
            break
        hx = px + travel * ux
        hy = py + travel * uy
        path += travel
        kind = int(prims[k, 0])
        cx = prims[k, 1] + tm * g[0, 0] + tn * g[1, 0]
        cy = prims[k, 2] + tm * g[0, 1] + tn * g[1, 1]
        singular = False
        if kind == 2:
            R = prims[k, 5]
            if abs(s) >= R - EPS_END:
                singular = True
            else:
                # exit: mirror the impact offset, reverse
                hx = hx + 2.0 * s * uy
                hy = hy - 2.0 * s * ux
                ux = -ux
                uy = -uy
                path += math.pi * R
        elif kind == 0:
            if abs(s) >= prims[k, 5] - EPS_END:
                singular = True
            else:
                hx = 2.0 * cx - hx
                hy = 2.0 * cy - hy
                ux = -ux
                uy = -uy
        else:
            if abs(s) >= prims[k, 5] - EPS_END:
                singular = True
            else:
                hx += prims[k, 6]
                hy += prims[k, 7]
        if n_ev == cap:
            cap *= 2
            ev_path = _grow1(ev_path, cap)
            ev_kind = _grow1i(ev_kind, cap)
            ev_xy = _grow2(ev_xy, cap)
            ev_obj = _grow2i(ev_obj, cap)
            ev_deck = _grow2i(ev_deck, cap)
        if log_events:
            ev_path[n_ev] = path
            ev_kind[n_ev] = SINGULAR if singular else kind
            ev_xy[n_ev, 0] = hx + m * g[0, 0] + n * g[1, 0]
            ev_xy[n_ev, 1] = hy + m * g[0, 1] + n * g[1, 1]
            ev_obj[n_ev, 0] = owners[k]
            ev_obj[n_ev, 1] = m + tm
            ev_obj[n_ev, 2] = n + tn
        px, py = hx, hy
        if periodic:
            px, py, m, n = _wrap(g, px, py, m, n)
        ev_deck[n_ev, 0] = m
        ev_deck[n_ev, 1] = n
        n_ev += 1
        if singular:
            reason = SINGULAR
            break
        if n_ev >= max_events:
            reason = ESCAPE
            break
    n_logged = n_ev if log_events else 0
    return (px, py, m, n, ux, uy, path, reason, n_ev,
            cp[:next_cp], cdeck[:next_cp], cpath[:next_cp],
            ev_path[:n_logged], ev_kind[:n_logged], ev_xy[:n_logged], ev_obj[:n_logged],
            ev_deck[:n_ev])


# ---------------------------------------------------------------------------
# Python surface

@dataclass
class FlowState:
    pos: Vec2
    sign: int
    theta: float
    path_length: float = 0.0

    @property
    def velocity(self) -> Vec2:
        return direction(self.theta) * self.sign


@dataclass
class Event:
    path_length: float
    kind: str
    location: Vec2
    obj: int
    translate: tuple


@dataclass
class Trajectory:
    start: FlowState
    final: FlowState
    event_kinds: np.ndarray
    event_paths: np.ndarray
    event_xy: np.ndarray
    event_objects: np.ndarray
    event_decks: np.ndarray
    displacement_samples: np.ndarray
    deck_samples: np.ndarray
    sample_paths: np.ndarray
    terminated: str
    n_events: int
    lattice: Optional[np.ndarray] = None

    @property
    def events(self) -> list[Event]:
        return [Event(float(self.event_paths[i]), KIND_NAMES[int(self.event_kinds[i])],
                      Vec2(float(self.event_xy[i, 0]), float(self.event_xy[i, 1])),
                      int(self.event_objects[i, 0]),
                      (int(self.event_objects[i, 1]), int(self.event_objects[i, 2])))
                for i in range(len(self.event_paths))]

    def itinerary(self) -> list[tuple[int, int, int]]:
        return [tuple(int(v) for v in row) for row in self.event_objects]

    def cell_count(self) -> int:
        decks = np.vstack([self.deck_samples, self.event_decks]) if len(self.event_decks) else self.deck_samples
        return int(len(np.unique(decks, axis=0)))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("path_length,x,y,deck_i,deck_j,event_kind\n")
            x0, y0 = self.start.pos
            fh.write(f"0,{float(x0)!r},{float(y0)!r},{int(self.deck_samples[0][0])},{int(self.deck_samples[0][1])},start\n")
            g = self.lattice
            for i in range(len(self.event_paths)):
                x, y = self.event_xy[i]
                if g is not None:
                    a, b = _coords(g, x, y)
                    di, dj = math.floor(a), math.floor(b)
                else:
                    di, dj = 0, 0
                fh.write(f"{float(self.event_paths[i])!r},{float(x)!r},{float(y)!r},{di},{dj},"
                         f"{KIND_NAMES[int(self.event_kinds[i])]}\n")


def _model_arrays(model):
    return model if isinstance(model, CompiledModel) else compile_model(model)


def next_event(state: FlowState, model, travel_cap: float = 1e6) -> Event:
    cm = _model_arrays(model)
    u = state.velocity
    p = vec(state.pos)
    if cm.prims.shape[0] == 0:
        raise TravelCapExceeded("no folds to hit")
    t, k, tm, tn, s = _next_event(p.x, p.y, u.x, u.y, cm.prims, cm.g, cm.periodic, travel_cap)
    if k < 0:
        raise TravelCapExceeded(f"free flight beyond {travel_cap}")
    kind = int(cm.prims[k, 0])
    half = cm.prims[k, 5]
    name = KIND_NAMES[SINGULAR] if abs(s) >= half - EPS_END else KIND_NAMES[kind]
    loc = p + u * t
    return Event(state.path_length + t, name, loc, int(cm.owners[k]), (int(tm), int(tn)))


def trace(start: FlowState, model, max_path: float, checkpoints: int = 1024,
          max_events: int = 2_000_000, log_events: bool = True) -> Trajectory:
    if max_path <= 0:
        raise ValueError("max_path must be positive")
    cm = _model_arrays(model)
    p = vec(start.pos)
    prims = cm.prims if cm.prims.shape[0] else np.zeros((0, 8))
    out = _trace_kernel(p.x, p.y, 0, 0, float(start.sign), float(start.theta), prims, cm.owners,
                        cm.g, cm.periodic, float(max_path), int(checkpoints), int(max_events),
                        bool(log_events))
    (px, py, m, n, ux, uy, path, reason, n_ev, cp, cdeck, cpath,
     ev_path, ev_kind, ev_xy, ev_obj, ev_deck) = out
    g = cm.g if cm.periodic else None
    gx = px + (m * cm.g[0, 0] + n * cm.g[1, 0] if g is not None else 0.0)
    gy = py + (m * cm.g[0, 1] + n * cm.g[1, 1] if g is not None else 0.0)
    u0 = direction(start.theta)
    fsign = 1 if ux * u0.x + uy * u0.y > 0 else -1
    final = FlowState(Vec2(gx, gy), fsign, start.theta, start.path_length + path)
    return Trajectory(start, final, ev_kind, ev_path, ev_xy, ev_obj, ev_deck,
                      cp, cdeck, cpath, KIND_NAMES[int(reason)], int(n_ev), g)


# ---------------------------------------------------------------------------
# model comparison

@dataclass
class AgreementReport:
    n_rays: int
    n_singular: int
    n_compared: int
    n_match: int
    mismatches: list = field(default_factory=list)

    @property
    def match_fraction(self) -> float:
        return self.n_match / self.n_compared if self.n_compared else 1.0

    def to_dict(self):
        return {"n_rays": self.n_rays, "n_singular": self.n_singular, "n_compared": self.n_compared,
                "n_match": self.n_match, "match_fraction": self.match_fraction}


def _random_outside(rng, cm: CompiledModel, lenses: Optional[LensConfiguration]):
    """Uniform point of the fundamental cell outside every lens."""
    while True:
        a, b = rng.random(2)
        p = Vec2(a * cm.g[0, 0] + b * cm.g[1, 0], a * cm.g[0, 1] + b * cm.g[1, 1])
        if lenses is None or not lenses.lenses:
            return p
        if all(d > l.r + 1e-9 for d, l in zip(_lens_dists(cm, p), lenses.lenses)):
            return p


def _lens_dists(cm: CompiledModel, p) -> list[float]:
    out = []
    for row in cm.prims:
        best = math.inf
        for m in range(-2, 3):
            for n in range(-2, 3):
                x = row[1] + m * cm.g[0, 0] + n * cm.g[1, 0] - p[0]
                y = row[2] + m * cm.g[0, 1] + n * cm.g[1, 1] - p[1]
                best = min(best, math.hypot(x, y))
        out.append(best)
    return out


def _itinerary(st: FlowState, cm: CompiledModel, path: float):
    p = st.pos
    out = _trace_kernel(p[0], p[1], 0, 0, float(st.sign), float(st.theta), cm.prims, cm.owners,
                        cm.g, cm.periodic, float(path), 1, 1_000_000, True)
    return out[15], out[7] == SINGULAR


def compare_models(lenses, slits, theta: float, n_rays: int, path: float, seed: int,
                   min_events: int = 1) -> AgreementReport:
    """Compare crossing itineraries of two models on seeded random rays.

    The models run on different clocks (lens transits take pi*R), so the
    itineraries are compared on their common prefix.
    """
    cl = _model_arrays(lenses)
    cs = _model_arrays(slits)
    rng = np.random.default_rng(seed)
    lens_cfg = lenses if isinstance(lenses, LensConfiguration) else None
    n_sing = n_cmp = n_ok = 0
    mism = []
    for i in range(n_rays):
        p = _random_outside(rng, cl, lens_cfg)
        sign = 1 if rng.random() < 0.5 else -1
        st = FlowState(p, sign, theta)
        ta = _itinerary(st, cl, path)
        tb = _itinerary(st, cs, path)
        if ta[1] or tb[1]:
            n_sing += 1
            continue
        ia, ib = ta[0], tb[0]
        k = min(len(ia), len(ib))
        n_cmp += 1
        if k == 0 and len(ia) != len(ib):
            mism.append((i, 0))
        elif np.array_equal(ia[:k], ib[:k]):
            n_ok += 1
        else:
            j = int(np.argmax(np.any(ia[:k] != ib[:k], axis=1)))
            mism.append((i, j))
    return AgreementReport(n_rays, n_sing, n_cmp, n_ok, mism)


# ---------------------------------------------------------------------------
# trapping statistics

@dataclass
class TrapStats:
    min_width: float
    trap_direction: Vec2
    cell_count: int
    growth_exponent: float

    def to_dict(self):
        return {"min_width": self.min_width, "trap_direction": list(self.trap_direction),
                "cell_count": self.cell_count, "growth_exponent": self.growth_exponent}


def min_width(points: np.ndarray) -> tuple[float, Vec2]:
    """Minimal directional width of a planar point set (rotating calipers on the hull)."""
    pts = np.asarray(points, dtype=float)
    span = pts.max(axis=0) - pts.min(axis=0)
    if np.all(span < 1e-15):
        return 0.0, Vec2(0.0, 1.0)
    try:
        hull = pts[ConvexHull(pts).vertices]
    except QhullError:
        # collinear: the width across the line is zero
        d = pts[np.argmax(np.linalg.norm(pts - pts[0], axis=1))] - pts[0]
        u = Vec2(-d[1], d[0]).unit()
        return 0.0, u
    best, best_u = math.inf, Vec2(0.0, 1.0)
    h = len(hull)
    for i in range(h):
        e = hull[(i + 1) % h] - hull[i]
        L = math.hypot(*e)
        if L < 1e-15:
            continue
        nrm = np.array([-e[1], e[0]]) / L
        w = float(np.max((hull - hull[i]) @ nrm) - np.min((hull - hull[i]) @ nrm))
        if w < best:
            best, best_u = w, Vec2(float(nrm[0]), float(nrm[1]))
    return best, best_u


def growth_exponent(paths: np.ndarray, disp: np.ndarray, u) -> float:
    """Slope of log max|<d,u>| against log L over the last two decades."""
    L = np.asarray(paths, float)
    proj = np.abs(np.asarray(disp, float) @ np.array([u[0], u[1]]))
    run = np.maximum.accumulate(proj)
    mask = (L > 0) & (L >= L[-1] / 100.0)
    if mask.sum() < 3:
        mask = L > 0
    floor = 1e-12
    x = np.log(L[mask])
    y = np.log(np.maximum(run[mask], floor))
    if np.ptp(x) == 0:
        return 0.0
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


def trap_stats(traj: Trajectory) -> TrapStats:
    d = traj.displacement_samples
    if len(d) < 10:
        raise TooFewSamples(f"need at least 10 samples, got {len(d)}")
    w, u = min_width(d)
    ge = growth_exponent(traj.sample_paths, d, u)
    return TrapStats(w, u, traj.cell_count(), ge)


# ---------------------------------------------------------------------------
# batch runs

def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("FLATLENS_THREADS", "1")))
    except ValueError:
        return 1


def run_batch(fn, tasks: Sequence, threads: Optional[int] = None) -> list:
    """Map fn over tasks, in worker processes when FLATLENS_THREADS > 1.

    Results come back in task order, so output does not depend on scheduling.
    """
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, tasks))


def write_svg(traj: Trajectory, path, model=None, size: int = 600):
    """Polyline of the displacement samples with an outline of nearby folds or lenses."""
    d = traj.displacement_samples + np.array(traj.start.pos)
    lo = d.min(axis=0) - 1.0
    hi = d.max(axis=0) + 1.0
    span = max(hi[0] - lo[0], hi[1] - lo[1], 1e-9)
    sc = size / span

    def tx(x, y):
        return (x - lo[0]) * sc, size - (y - lo[1]) * sc

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">']
    if model is not None:
        cm = _model_arrays(model)
        shifts = [(0, 0)]
        if cm.periodic:
            a0, b0 = _coords(cm.g, lo[0], lo[1])
            corners = [_coords(cm.g, x, y) for x in (lo[0], hi[0]) for y in (lo[1], hi[1])]
            ar = [c[0] for c in corners] + [a0]
            br = [c[1] for c in corners] + [b0]
            ma, mb = range(math.floor(min(ar)) - 1, math.ceil(max(ar)) + 2), \
                range(math.floor(min(br)) - 1, math.ceil(max(br)) + 2)
            if len(ma) * len(mb) <= 4000:
                shifts = [(m, n) for m in ma for n in mb]
        for m, n in shifts:
            ox = m * cm.g[0, 0] + n * cm.g[1, 0] if cm.periodic else 0.0
            oy = m * cm.g[0, 1] + n * cm.g[1, 1] if cm.periodic else 0.0
            for row in cm.prims:
                cx, cy = row[1] + ox, row[2] + oy
                if row[0] == LENS:
                    X, Y = tx(cx, cy)
                    parts.append(f'<circle cx="{X:.3f}" cy="{Y:.3f}" r="{row[5] * sc:.3f}" '
                                 'fill="none" stroke="#888" stroke-width="0.5"/>')
                else:
                    ax, ay = tx(cx - row[3] * row[5], cy - row[4] * row[5])
                    bx, by = tx(cx + row[3] * row[5], cy + row[4] * row[5])
                    col = "#c33" if row[0] == SLIT else "#36c"
                    parts.append(f'<line x1="{ax:.3f}" y1="{ay:.3f}" x2="{bx:.3f}" y2="{by:.3f}" '
                                 f'stroke="{col}" stroke-width="1"/>')
    pts = " ".join("%.3f,%.3f" % tx(x, y) for x, y in d)
    parts.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def stats_json(stats: TrapStats, **extra) -> str:
    rec = dict(extra)
    rec.update(stats.to_dict())
    return json.dumps(rec, sort_keys=True)
