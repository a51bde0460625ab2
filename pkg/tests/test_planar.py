import itertools
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from flatlens.planar import (DegenerateLattice, DegenerateSegment, Lattice, ParallelGrazing,
                             Segment, Vec2, lattice_min_dist, lattice_reduce, segment_ray_hit)

coord = st.floats(-5, 5, allow_nan=False)


def brute_min(lat, p, exclude_zero, k=10):
    best = math.inf
    for m, n in itertools.product(range(-k, k + 1), repeat=2):
        if exclude_zero and m == 0 and n == 0:
            continue
        v = lat.point(m, n)
        best = min(best, math.hypot(p[0] + v.x, p[1] + v.y))
    return best


def same_lattice(a, b):
    return all(b.contains(g) for g in (a.g1, a.g2)) and all(a.contains(g) for g in (b.g1, b.g2))


def test_reduce_identity():
    lat = lattice_reduce((1, 0), (0, 1))
    assert (lat.g1, lat.g2) == (Vec2(1, 0), Vec2(0, 1))


def test_reduce_shear():
    lat = lattice_reduce((1, 0), (5, 1))
    assert lat.g1 == Vec2(1, 0)
    assert lat.g2 == Vec2(0, 1)


def test_reduce_wollmilchsau_lattice():
    orig = Lattice((0, 4), (4, 2))
    lat = lattice_reduce(orig.g1, orig.g2)
    assert same_lattice(lat, orig)
    # shortest vector by enumeration
    shortest = min(orig.point(m, n).norm() for m, n in itertools.product(range(-6, 7), repeat=2)
                   if (m, n) != (0, 0))
    assert lat.g1.norm() == pytest.approx(shortest)
    assert lat.g1.norm() <= lat.g2.norm()
    assert abs(lat.g1.dot(lat.g2)) <= lat.g1.dot(lat.g1) / 2 + 1e-12


def test_reduce_degenerate():
    with pytest.raises(DegenerateLattice):
        lattice_reduce((1, 2), (2, 4))


unimodular = st.lists(st.sampled_from([(1, 1, 0, 1), (1, -1, 0, 1), (1, 0, 1, 1), (1, 0, -1, 1),
                                         (0, 1, 1, 0)]), min_size=1, max_size=6)


def compose(steps):
    a, b, c, d = 1, 0, 0, 1
    for p, q, r, s in steps:
        a, b, c, d = a * p + b * r, a * q + b * s, c * p + d * r, c * q + d * s
    return a, b, c, d


@given(unimodular, st.floats(0.3, 3), st.floats(-2, 2), st.floats(0.3, 3))
def test_reduce_spans_same_lattice(steps, x1, x2, y2):
    a, b, c, d = compose(steps)
    base = Lattice((x1, 0.0), (x2, y2))
    g1, g2 = base.point(a, b), base.point(c, d)
    lat = lattice_reduce(g1, g2)
    assert same_lattice(lat, base)
    assert lat.g1.norm() <= lat.g2.norm() + 1e-12
    assert abs(lat.g1.dot(lat.g2)) <= lat.g1.dot(lat.g1) / 2 + 1e-9


def test_reduce_deterministic():
    assert lattice_reduce((3, 1), (7, 2)) == lattice_reduce((3, 1), (7, 2))


def test_min_dist_examples():
    z2 = Lattice((1, 0), (0, 1))
    assert lattice_min_dist(z2, (0.3, 0)) == pytest.approx(0.3)
    assert lattice_min_dist(z2, (0, 0), exclude_zero=True) == pytest.approx(1.0)
    w = Lattice((0, 4), (4, 2))
    # the enumeration oracle finds (2,2) - (4,2) = (-2,0), so the distance is 2, not sqrt(8)
    assert lattice_min_dist(w, (2, 2)) == pytest.approx(brute_min(w, (2, 2), False))
    assert lattice_min_dist(w, (2, 2)) == pytest.approx(2.0)


@settings(max_examples=60)
@given(st.floats(0.3, 3), st.floats(-2, 2), st.floats(0.3, 3), st.floats(0, 1), st.floats(0, 1),
       st.booleans())
def test_min_dist_matches_brute_force(x1, x2, y2, a, b, excl):
    lat = Lattice((x1, 0.0), (x2, y2)).reduce()
    scale = 5 * lat.g2.norm()
    p = Vec2((2 * a - 1) * scale / math.sqrt(2), (2 * b - 1) * scale / math.sqrt(2))
    got = lattice_min_dist(lat, p, excl)
    # coefficient range large enough for the lopsided bases drawn here
    assert got == pytest.approx(brute_min(lat, p, excl, k=40), abs=1e-12)
    if not excl:
        assert got <= p.norm() + 1e-12


def test_segment_hits():
    seg = Segment((-1, 0), (1, 0))
    t, u = segment_ray_hit(seg, (0.3, -1), (0, 1))
    assert (t, u) == pytest.approx((1.0, 0.3))
    assert segment_ray_hit(seg, (2, -1), (0, 1)) is None
    t, u = segment_ray_hit(Segment((0, 0), (0, 2)), (-1, 0.5), (1, 0))
    assert (t, u) == pytest.approx((1.0, -0.5))


def test_segment_grazing_and_degenerate():
    with pytest.raises(ParallelGrazing):
        segment_ray_hit(Segment((0, 0), (1, 0)), (-1, 0), (1, 0))
    assert segment_ray_hit(Segment((0, 0), (1, 0)), (-1, 1), (1, 0)) is None
    with pytest.raises(DegenerateSegment):
        Segment((1, 1), (1, 1))


def test_segment_derived():
    s = Segment((0, 0), (2, 0))
    assert s.center == Vec2(1, 0)
    assert s.half_length == 1.0
    assert s.direction == Vec2(1, 0)


@given(coord, coord, coord, coord, coord, coord, st.floats(0, 2 * math.pi))
def test_hit_within_half_length(ax, ay, bx, by, ox, oy, phi):
    assume(math.hypot(bx - ax, by - ay) > 1e-3)
    seg = Segment((ax, ay), (bx, by))
    try:
        hit = segment_ray_hit(seg, (ox, oy), (math.cos(phi), math.sin(phi)))
    except ParallelGrazing:
        return
    if hit is not None:
        t, u = hit
        assert t > 0
        assert abs(u) <= seg.half_length
        p = seg.point_at(u)
        assert p.x == pytest.approx(ox + t * math.cos(phi), abs=1e-6)
        assert p.y == pytest.approx(oy + t * math.sin(phi), abs=1e-6)
