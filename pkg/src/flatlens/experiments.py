"""Seeded direction sweeps behind the CLI experiments and the acceptance suite.

Every summary is a plain dict; `summary_json` renders it with sorted keys so
identical seeds give byte-identical files.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .configurations import (Lens, LensConfiguration, SlitConfiguration, gamma_w,
                             lens_to_slits)
from .flow import (SLIT, FlowState, TooFewSamples, compare_models, run_batch, trace,
                   trap_stats)
from .planar import Lattice, Vec2, direction
from .skeleton import PillowFold, Skeleton, builtin_skeleton, pillow_to_chip


@dataclass
class ExperimentConfig:
    model: str = "single-lens"        # builtin name or path to a JSON model
    thetas: int = 50
    theta_range: tuple = (0.0, 1.0)   # units of pi
    seed: int = 7
    path: float = 1e5
    rays: int = 1000
    exponent_max: float = 0.1         # trapped if the growth exponent stays below
    exponent_min: float = 0.3         # spreading if the exponent reaches this
    cells_min: int = 50               # ... or the orbit visits this many cells
    fraction_floor: float = 0.8
    match_floor: float = 0.99

    def __post_init__(self):
        if self.thetas <= 0 or self.rays <= 0 or self.path <= 0:
            raise ValueError("counts and path length must be positive")
        if not 0.0 <= self.fraction_floor <= 1.0 or not 0.0 <= self.match_floor <= 1.0:
            raise ValueError("fractions must lie in [0, 1]")
        lo, hi = self.theta_range
        if not lo < hi:
            raise ValueError("empty theta range")

    def sample_thetas(self) -> list[float]:
        rng = np.random.default_rng(self.seed)
        lo, hi = self.theta_range
        return [float(t) for t in np.sort(rng.uniform(lo * math.pi, hi * math.pi, self.thetas))]


# ---------------------------------------------------------------------------
# reference models

def single_lens() -> LensConfiguration:
    return LensConfiguration(Lattice((0, 4), (4, 2)), [Lens(Vec2(0.0, 0.0), 1.0)])


def separated_slits() -> SlitConfiguration:
    """Two horizontal slits whose vertical shadows are disjoint strips."""
    return SlitConfiguration(Lattice((1, 0), (0, 1)), Vec2(1.0, 0.0),
                             [Vec2(0.2, 0.3), Vec2(0.6, 0.7)], [0.1, 0.1])


SEPARATING_VECTOR = (0.0, 1.0)


def named_model(name: str, theta: float):
    key = name.lower().replace("_", "-")
    if key == "single-lens":
        return single_lens()
    if key in ("separated", "two-slit", "separated-slits"):
        return separated_slits()
    if key in ("gamma-w", "gammaw"):
        return gamma_w(theta)
    if key in ("gamma-w-slits",):
        return lens_to_slits(gamma_w(theta), theta)
    return builtin_skeleton(name)


def load_model(source: str, theta: float):
    """Builtin name, or a JSON file holding a skeleton or a lens configuration."""
    if source.endswith(".json"):
        with open(source) as fh:
            data = json.load(fh)
        if "lenses" in data:
            return LensConfiguration.from_json(data)
        return Skeleton.from_json(data)
    return named_model(source, theta)


def inside_lens(model, p: Vec2) -> bool:
    if not isinstance(model, LensConfiguration):
        return False
    lat = model.lattice
    for lens in model.lenses:
        w = lat.wrap(p - lens.c) if lat is not None else p - lens.c
        for m in (-1, 0, 1):
            for n in (-1, 0, 1):
                q = w - lat.point(m, n) if lat is not None else w
                if q.norm() <= lens.r + 1e-6:
                    return True
    return False


def start_point(model, rng) -> Vec2:
    """Uniform point of the fundamental cell outside every lens."""
    lat = model.lattice
    while True:
        a, b = rng.random(2)
        p = lat.g1 * float(a) + lat.g2 * float(b)
        if not inside_lens(model, p):
            return p


# ---------------------------------------------------------------------------
# trapping / spreading

def _orbit_record(task) -> dict:
    source, theta, path, seed = task
    model = load_model(source, theta)
    rng = np.random.default_rng(seed)
    p = start_point(model, rng)
    traj = trace(FlowState(p, 1, theta), model, path, checkpoints=2048, log_events=False)
    rec = {"theta": theta, "terminated": traj.terminated, "events": traj.n_events}
    try:
        st = trap_stats(traj)
        rec.update(st.to_dict())
        rec["trap_direction"] = [float(x) for x in rec["trap_direction"]]
    except TooFewSamples as exc:
        rec["error"] = str(exc)
    return rec


def orbit_sweep(cfg: ExperimentConfig) -> list[dict]:
    thetas = cfg.sample_thetas()
    tasks = [(cfg.model, th, cfg.path, cfg.seed * 100003 + i) for i, th in enumerate(thetas)]
    return run_batch(_orbit_record, tasks)


def trapping_summary(cfg: ExperimentConfig) -> dict:
    recs = orbit_sweep(cfg)
    ok = [r for r in recs if "growth_exponent" in r]
    trapped = sum(1 for r in ok if r["growth_exponent"] <= cfg.exponent_max)
    frac = trapped / len(recs)
    return {"experiment": "trapping", "config": _cfg_dict(cfg), "records": recs,
            "bounded_fraction": frac, "pass": frac >= cfg.fraction_floor}


def ergodic_summary(cfg: ExperimentConfig) -> dict:
    recs = orbit_sweep(cfg)
    spread = sum(1 for r in recs if "growth_exponent" in r and
                 (r["growth_exponent"] >= cfg.exponent_min or r["cell_count"] >= cfg.cells_min))
    frac = spread / len(recs)
    return {"experiment": "ergodic", "config": _cfg_dict(cfg), "records": recs,
            "spreading_fraction": frac, "pass": frac >= cfg.fraction_floor}


# ---------------------------------------------------------------------------
# lens versus flat lens

def _compare_record(task) -> dict:
    theta, rays, path, seed = task
    cfg = gamma_w(theta)
    rep = compare_models(cfg, lens_to_slits(cfg, theta), theta, rays, path, seed)
    rec = rep.to_dict()
    rec["theta"] = theta
    return rec


def compare_thetas(n: int) -> list[float]:
    """Midpoints of n equal subintervals of (0, pi)."""
    return [(k + 0.5) * math.pi / n for k in range(n)]


def compare_summary(cfg: ExperimentConfig) -> dict:
    tasks = [(th, cfg.rays, cfg.path, cfg.seed + i) for i, th in enumerate(compare_thetas(cfg.thetas))]
    recs = run_batch(_compare_record, tasks)
    worst = min(r["match_fraction"] for r in recs)
    return {"experiment": "compare", "config": _cfg_dict(cfg), "records": recs,
            "min_match_fraction": worst, "pass": worst >= cfg.match_floor}


# ---------------------------------------------------------------------------
# pillow-fold versus chip-fold

UNIT_PILLOW = PillowFold((0, 0), (0, 1), (0, 0), (1, 0))
PILLOW_LATTICE = Lattice((3, 0), (0, 3))


def chip_directions() -> list[float]:
    """20 directions covering every chip branch n = ceil|tan|, boundaries included."""
    slopes = [0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 7.5, -0.3, -1.0, -2.0, -3.0, -5.0,
              0.999, 1.001, 2.999, 3.001]
    out = [math.atan(s) % math.pi for s in slopes]
    return out + [math.pi / 2, 0.0]


def reference_crossings(traj, period: float = 3.0, offset: float = 2.0) -> list[tuple]:
    """Crossings of the lines x = period*i + offset and y = period*j + offset, in order.

    Each entry is (axis, line index, direction); the line index carries the
    deck displacement.
    """
    u = np.array(direction(traj.start.theta))
    p = np.array(traj.start.pos, float)
    s = traj.start.sign
    last = 0.0
    out = []

    def seg(P, Q):
        res = []
        for ax, name in ((0, "x"), (1, "y")):
            a, b = P[ax], Q[ax]
            if a == b:
                continue
            lo, hi = min(a, b), max(a, b)
            for i in range(math.ceil((lo - offset) / period), math.floor((hi - offset) / period) + 1):
                res.append(((offset + period * i - a) / (b - a), name, i, 1 if b > a else -1))
        res.sort()
        return [r[1:] for r in res]

    for k in range(len(traj.event_paths)):
        Q = p + (traj.event_paths[k] - last) * s * u
        out += seg(p, Q)
        p = traj.event_xy[k].copy()
        last = traj.event_paths[k]
        if traj.event_kinds[k] == SLIT:
            s = -s
    out += seg(p, np.array(traj.final.pos))
    return out


def _pillow_record(task) -> dict:
    theta, rays, path, seed = task
    pillow = Skeleton(PILLOW_LATTICE, [UNIT_PILLOW])
    chip = Skeleton(PILLOW_LATTICE, pillow_to_chip(UNIT_PILLOW, theta))
    rng = np.random.default_rng(seed)
    n_ok = n_cmp = n_sing = 0
    for _ in range(rays):
        while True:
            x, y = rng.uniform(0.0, 3.0, 2)
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                break
        st = FlowState(Vec2(float(x), float(y)), 1 if rng.random() < 0.5 else -1, theta)
        ta = trace(st, pillow, path, checkpoints=4)
        tb = trace(st, chip, path, checkpoints=4)
        if ta.terminated == "singular" or tb.terminated == "singular":
            n_sing += 1
            continue
        ca, cb = reference_crossings(ta), reference_crossings(tb)
        k = min(len(ca), len(cb))
        n_cmp += 1
        n_ok += int(k > 0 and ca[:k] == cb[:k])
    return {"theta": theta, "n_rays": rays, "n_singular": n_sing, "n_compared": n_cmp,
            "n_match": n_ok, "match_fraction": n_ok / n_cmp if n_cmp else 1.0}


def pillow_chip_summary(rays: int = 500, path: float = 200.0, seed: int = 8,
                        floor: float = 0.99) -> dict:
    tasks = [(th, rays, path, seed + i) for i, th in enumerate(chip_directions())]
    recs = run_batch(_pillow_record, tasks)
    worst = min(r["match_fraction"] for r in recs)
    return {"experiment": "pillow-chip", "records": recs, "min_match_fraction": worst,
            "pass": worst >= floor}


# ---------------------------------------------------------------------------

def _cfg_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["theta_range"] = list(d["theta_range"])
    return d


def summary_json(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=1)
