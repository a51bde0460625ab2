import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatlens.iet import (DiscontinuityHit, ExactPeriodicity, IetWithCocycle, Section, cocycle,
                          deck_consistency, direct_return, doubled_sub, extract_iet, induce,
                          rigidity_scan, skew_orbit, tower_check)
from flatlens.planar import Lattice
from flatlens.skeleton import Skeleton, SlitFold, builtin_skeleton

Z2 = Lattice((1, 0), (0, 1))
SLIT = Skeleton(Z2, [SlitFold.of((0.25, 0.5), (0.75, 0.5))])
UP = math.pi / 2
SEC = Section.perpendicular(UP, (0, 0), 1.0)
GOLD = (math.sqrt(5) - 1) / 2


@pytest.fixture(scope="module")
def worked():
    return extract_iet(SLIT, UP, SEC)


def test_worked_example(worked):
    # doubled section: [0, 1) is the upward copy, [1, 2) the downward one
    assert worked.starts == pytest.approx([0, 0.25, 0.75, 1, 1.25, 1.75], abs=1e-9)
    assert worked.images == pytest.approx([0, 1.25, 0.75, 1, 0.25, 1.75], abs=1e-9)
    assert worked.xi.tolist() == [[0, 1], [0, 0], [0, 1], [0, -1], [0, 0], [0, -1]]
    assert worked.tau == pytest.approx([1] * 6, abs=1e-9)
    assert worked.check() == []
    # the shadow (0.25, 0.75) lands on the down copy at x -> 1 - x
    for x in (0.3, 0.5, 0.7):
        assert worked(x) == pytest.approx(2 - (1 - x))


def test_empty_torus():
    iet = extract_iet(Skeleton(Z2, []), UP, SEC)
    assert len(iet) == 2
    assert iet.lengths == pytest.approx([1, 1])
    assert iet.xi.tolist() == [[0, 1], [0, -1]]
    assert iet.tau == pytest.approx([1, 1])


def test_wollmilchsau_one_third():
    th = math.atan(1 / 3)
    w = builtin_skeleton("wollmilchsau")
    iet = extract_iet(w, th)
    assert iet.check(1e-9) == []
    assert abs(iet.total - 2 * iet.section.length) < 1e-9
    rng = np.random.default_rng(0)
    ys = rng.uniform(0, iet.total, 1000)
    img = iet(ys)
    # bijection: images stay in range and distinct points keep distinct images
    assert np.all((img >= -1e-12) & (img < iet.total + 1e-12))
    assert len(np.unique(np.round(img, 12))) == 1000


@settings(max_examples=8, deadline=None)
@given(st.floats(0.05, math.pi - 0.05), st.sampled_from(["wollmilchsau", "x2", "x4", "c6_3_1"]))
def test_prediction_matches_direct_trace(theta, name):
    sk = builtin_skeleton(name)
    iet = extract_iet(sk, theta)
    assert iet.check(1e-9) == []
    rng = np.random.default_rng(1)
    for y in rng.uniform(0, iet.total, 50):
        a = int(iet.locate(y))
        yy, xi, tau = direct_return(sk, theta, iet.section, float(y))
        assert yy == pytest.approx(float(iet(y)), abs=1e-8)
        assert tau == pytest.approx(iet.tau[a], abs=1e-8)
        assert list(xi) == iet.xi[a].tolist()


def test_cocycle(worked):
    psi = cocycle(worked, [(1, 0), (0, 1)])
    assert psi.tolist() == worked.xi.tolist()
    assert not cocycle(worked, [(0, 0)]).any()
    assert cocycle(worked, [(1, 0)]).ravel().tolist() == worked.xi[:, 0].tolist()


def test_skew_orbit_examples(worked):
    psi = cocycle(worked, [(1, 0), (0, 1)])
    orb = skew_orbit(worked, psi, 0.1, 20)
    assert [tuple(g) for g in orb.g] == [(0, n) for n in range(21)]
    orb = skew_orbit(worked, psi, 0.4, 20)
    assert not np.any(orb.g)
    orb = skew_orbit(worked, psi, 0.37, 0)
    assert orb.g.tolist() == [[0, 0]]


def test_skew_orbit_discontinuity(worked):
    psi = cocycle(worked, [(1, 0), (0, 1)])
    with pytest.raises(DiscontinuityHit):
        skew_orbit(worked, psi, 0.25, 3)


@pytest.mark.parametrize("name", ["wollmilchsau", "x2", "x4", "c6_3_1"])
def test_deck_consistency(name):
    sk = builtin_skeleton(name)
    th = 0.7321
    iet = extract_iet(sk, th)
    assert deck_consistency(iet, sk, th, 0.123456 * iet.total, 300)


def test_json_round_trip(worked):
    back = IetWithCocycle.from_json(worked.to_json())
    assert back.lengths.tolist() == worked.lengths.tolist()
    assert back.images.tolist() == worked.images.tolist()
    assert back.xi.tolist() == worked.xi.tolist()


def test_induce_on_worked_example(worked):
    psi = cocycle(worked, [(1, 0), (0, 1)])
    J = doubled_sub(worked, 0.0, 0.2)
    pieces = induce(worked, psi, J)
    assert sum(p.length for p in pieces) == pytest.approx(0.4)
    for p in pieces:
        assert p.steps >= 1


@pytest.mark.parametrize("name,theta", [("wollmilchsau", 0.4142), ("x4", 1.9)])
def test_tower_check(name, theta):
    sk = builtin_skeleton(name)
    iet = extract_iet(sk, theta)
    L = iet.section.length
    ok, problems = tower_check(iet, sk, theta, 0.2 * L, 0.45 * L)
    assert ok, problems


def test_rigidity_golden_rotation():
    iet = IetWithCocycle.rotation(GOLD, cuts=[0.5], values=[[1], [1], [-1]])
    res = rigidity_scan(iet, iet.xi, 100, rigid_tol=1e-2, measure_floor=0.05)
    hs = {c[1] for c in res.candidates if c[0][0] != 0}
    assert hs & {34, 55, 89}
    assert res.index is not None


def test_rigidity_periodic_base():
    iet = IetWithCocycle.rotation(0.25, values=[[1], [0]])
    with pytest.raises(ExactPeriodicity) as exc:
        rigidity_scan(iet, iet.xi, 50)
    assert exc.value.period == 4


def test_rigidity_wollmilchsau_exploratory():
    # diagnostic threshold: finite index in most sampled directions
    w = builtin_skeleton("wollmilchsau")
    rng = np.random.default_rng(5)
    finite = 0
    thetas = rng.uniform(0.05, math.pi - 0.05, 6)
    for th in thetas:
        iet = extract_iet(w, th)
        res = rigidity_scan(iet, cocycle(iet, [(1, 0), (0, 1)]), 2000)
        finite += res.index is not None
    assert finite >= 4
