"""Ray dynamics through a single Eaton lens.

Inside a lens of radius R the refractive index is n(r) = sqrt(2R/r - 1) and
n = 1 outside.  Every ray leaves antiparallel to the way it came in.  The
closed forms below work in the lens frame: center at the origin, incoming
direction +x, entry point (-sqrt(R^2 - s^2), s) for the impact parameter s.

Time bookkeeping.  The geodesic time from entry to exit is
pi*R + 2*sqrt(R^2 - s^2).  The second term is exactly the time a ray needs to
reach the perpendicular diameter and come back, i.e. what the flat lens
(a slit-fold through the center) costs.  The lens-specific delay is therefore
the constant pi*R, and that is what ``LensTransit.transit_time`` stores.
``metric_time`` keeps the full value.

The time coordinate t of ``lens_arc_point`` is the chart time in which the
entry point sits at t = -sqrt(R^2 - s^2) and the closest approach at
t = pi*R/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .planar import EPS_GEOM, GeometryError, Vec2, vec

CENTRAL_BAND = 1e-12
GRAZING_BAND = 1e-9


class NotOnBoundary(GeometryError):
    pass


class DirectionOutward(GeometryError):
    pass


class OutOfTimeRange(GeometryError):
    pass


class DegenerateImpact(GeometryError):
    pass


class OutsideLens(GeometryError):
    pass


class CenterSingular(GeometryError):
    pass


class StepTooLarge(GeometryError):
    pass


@dataclass(frozen=True)
class EatonLens:
    center: Vec2
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", vec(self.center))
        if not self.radius > 0:
            raise GeometryError(f"lens radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class LensTransit:
    entry: Vec2
    exit: Vec2
    entry_dir: Vec2
    exit_dir: Vec2
    transit_time: float
    s: float
    metric_time: float


def _frame(lens: EatonLens, entry, dir):
    p, d = vec(entry), vec(dir)
    nd = d.norm()
    if abs(nd - 1.0) > 1e-9:
        raise GeometryError("direction must be a unit vector")
    w = p - lens.center
    R = lens.radius
    if abs(w.norm() - R) > 1e-9 * max(1.0, R):
        raise NotOnBoundary(f"entry {p} is at distance {w.norm()} from the center, radius {R}")
    return w, d, d.perp()


def impact_parameter(lens: EatonLens, entry, dir) -> float:
    w, d, n = _frame(lens, entry, dir)
    return w.dot(n)


def lens_retroreflect(lens: EatonLens, entry, dir) -> LensTransit:
    w, d, n = _frame(lens, entry, dir)
    R = lens.radius
    along = w.dot(d)
    s = w.dot(n)
    if along > EPS_GEOM * max(1.0, R):
        raise DirectionOutward("direction points out of the lens")
    q = math.sqrt(max(R * R - s * s, 0.0))
    if abs(s) < CENTRAL_BAND * R:
        # the central ray turns back at the center
        ex = vec(entry)
        s = 0.0
    else:
        ex = lens.center - d * q - n * s
    return LensTransit(entry=vec(entry), exit=ex, entry_dir=d, exit_dir=-d,
                       transit_time=math.pi * R, s=s,
                       metric_time=math.pi * R + 2.0 * q)


def arc_time(R: float, s: float, r: float) -> float:
    """Chart time at radius r along the incoming half of the ellipse."""
    q = math.sqrt(R * R - s * s)
    under = max(r * (2 * R - r) - s * s, 0.0)
    arg = max(-1.0, min(1.0, (R - r) / q))
    return -math.sqrt(under) + R * math.asin(arg)


def lens_arc_point(R: float, s: float, t: float, tol: float = 1e-13,
                   max_iter: int = 200) -> tuple[float, float]:
    """Polar coordinates (r, phi) of the ray at chart time t.

    Valid for t in [-sqrt(R^2 - s^2), pi*R/2], i.e. from entry to the
    closest approach r0 = R - sqrt(R^2 - s^2).
    """
    if abs(s) >= R * (1 - 1e-12) or R - abs(s) < EPS_GEOM:
        raise DegenerateImpact(f"|s| = {abs(s)} too close to R = {R}")
    if s == 0:
        raise DegenerateImpact("central ray has no ellipse chart")
    q = math.sqrt(R * R - s * s)
    t_lo, t_hi = -q, math.pi * R / 2
    slack = 1e-12 * max(1.0, R)
    if t < t_lo - slack or t > t_hi + slack:
        raise OutOfTimeRange(f"t = {t} outside [{t_lo}, {t_hi}]")
    r0 = R - q
    lo, hi = r0, R  # arc_time decreases in r
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if arc_time(R, s, mid) > t:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    r = 0.5 * (lo + hi)
    c = (R * r - s * s) / (r * q)
    phi = math.acos(max(-1.0, min(1.0, -c)))
    return r, math.copysign(phi, s)


def arc_xy(R: float, s: float, t: float) -> tuple[float, float]:
    r, phi = lens_arc_point(R, s, t)
    return r * math.cos(phi), r * math.sin(phi)


def invariant_density(R: float, x: float, y: float) -> float:
    r = math.hypot(x, y)
    if r >= R:
        raise OutsideLens(f"({x}, {y}) is not inside the lens of radius {R}")
    if r < EPS_GEOM:
        raise CenterSingular("density is singular at the lens center")
    k = 4 * R * (R - r)
    return (2 * R - r) / r * k / ((math.sqrt(x * x + k) + x) ** 2 + k)


def chart_jacobian(R: float, t: float, s: float, h: float = 1e-5) -> float:
    """|det d(x,y)/d(t,s)| of the chart by central differences."""
    xp, yp = arc_xy(R, s, t + h)
    xm, ym = arc_xy(R, s, t - h)
    xs, ys = arc_xy(R, s + h, t)
    xn, yn = arc_xy(R, s - h, t)
    dxdt, dydt = (xp - xm) / (2 * h), (yp - ym) / (2 * h)
    dxds, dyds = (xs - xn) / (2 * h), (ys - yn) / (2 * h)
    return abs(dxdt * dyds - dydt * dxds)


@dataclass
class OdePath:
    points: np.ndarray
    times: np.ndarray
    exit: Vec2
    exit_dir: Vec2
    metric_time: float
    near_tangent: bool
    through_center: bool


def geodesic_ode_trace(lens: EatonLens, entry, dir, step: float = 0.05,
                       rtol: float = 1e-12, drift_tol: float = 1e-8) -> OdePath:
    """Numerically integrate the ray through the lens (independent oracle).

    With n^2 = 2R/r - 1 the ray equations in the time tau' with dx/dtau' = p
    are a Kepler problem of energy -1/2.  We integrate them in Levi-Civita
    variables x = u^2 (complex), dtau'/dlam = r, where the motion is regular
    through the center and the central ray bounces back on its own.  The
    metric time obeys dtau/dlam = n^2 r = 2R - r.
    """
    from scipy.integrate import solve_ivp

    w, d, n = _frame(lens, entry, dir)
    R = lens.radius
    if w.dot(d) > EPS_GEOM * max(1.0, R):
        raise DirectionOutward("direction points out of the lens")
    s = w.dot(n)
    near_tangent = R - abs(s) < 1e-2 * R
    c = lens.center
    u0 = np.sqrt(complex(w.x, w.y))
    v0 = complex(d.x, d.y) * np.conj(u0) / 2

    def rhs(_l, z):
        u1, u2, v1, v2, _tau = z
        return [v1, v2, -0.25 * u1, -0.25 * u2, 2 * R - (u1 * u1 + u2 * u2)]

    def leave(_l, z):
        return z[0] * z[0] + z[1] * z[1] - R
    leave.terminal = True
    leave.direction = 1
    z0 = [u0.real, u0.imag, v0.real, v0.imag, 0.0]
    sol = solve_ivp(rhs, (0, 8 * math.pi), z0, rtol=rtol, atol=1e-14 * max(1.0, R),
                    max_step=step, events=leave, method="DOP853")
    if sol.status != 1 or not len(sol.t_events[0]):
        raise StepTooLarge("integration did not reach the lens boundary")
    zt = sol.y_events[0][0]
    u = complex(zt[0], zt[1])
    v = complex(zt[2], zt[3])
    x = u * u
    r = abs(x)
    p = 2 * u * v / r
    drift = abs(abs(p) ** 2 / 2 - R / r + 0.5)
    if drift > drift_tol:
        raise StepTooLarge(f"energy drift {drift:.2e} exceeds {drift_tol:.1e}")
    ex = Vec2(x.real + c.x, x.imag + c.y)
    ed = Vec2(p.real / abs(p), p.imag / abs(p))
    us = sol.y[0] + 1j * sol.y[1]
    xs = us * us
    pts = np.column_stack([xs.real + c.x, xs.imag + c.y])
    taus = sol.y[4]
    return OdePath(pts, taus, ex, ed, float(zt[4]), near_tangent,
                   abs(s) < CENTRAL_BAND * R)
