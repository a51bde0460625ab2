import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flatlens.configurations import (DeformationBlocked, ImproperCenters, Lens, LensConfiguration,
                                     SlitConfiguration, SlitParallelToW, gamma_w, gamma_w_branch,
                                     is_admissible, is_separated, lens_to_slits, railed_rescale,
                                     same_configuration)
from flatlens.planar import Lattice, Vec2, lattice_min_dist
from flatlens.skeleton import railed_equivalent

Z2 = Lattice((1, 0), (0, 1))


def test_gamma_w_zero():
    cfg = gamma_w(0.0)
    assert cfg.lattice.g1 == Vec2(0, 4) and cfg.lattice.g2 == Vec2(4, 2)
    assert len(cfg.lenses) == 2
    got = sorted((l.c.x, l.c.y, l.r) for l in cfg.lenses)
    assert got == pytest.approx([(-1, -1, 1), (1, 1, 1)])


def test_gamma_w_branch_boundaries():
    for th, (b1, b2) in ((math.pi / 4, (1, 2)), (math.pi / 2, (2, 3)), (3 * math.pi / 4, (3, 4))):
        a = gamma_w_branch(th, b1, keep_zero=True)
        b = gamma_w_branch(th, b2, keep_zero=True)
        assert same_configuration(a, b, 1e-9)
    c = gamma_w(math.pi / 4)
    radii = sorted(c.radii)
    assert radii == pytest.approx(sorted([math.sqrt(2), math.sqrt(2) / 2, math.sqrt(2) / 2]))


def test_gamma_w_period():
    # the closed-curve endpoint theta = pi comes from the last branch
    end = gamma_w_branch(math.pi, 4)
    assert same_configuration(end.translate((0, 2)), gamma_w(0.0), 1e-9)


def test_gamma_w_lipschitz():
    ths = np.linspace(0, math.pi, 10001)
    prev = None
    step = ths[1] - ths[0]
    for th in ths[:-1]:
        cfg = gamma_w(float(th), keep_zero=True)
        if prev is not None:
            red = cfg.lattice.reduce()
            assert (cfg.lattice.g2 - prev.lattice.g2).norm() < 10 * step
            for l in cfg.lenses:
                d = min(max(lattice_min_dist(red, l.c - m.c), abs(l.r - m.r)) for m in prev.lenses)
                assert d < 10 * step
        prev = cfg


def test_admissibility_examples():
    assert not is_admissible(LensConfiguration(Z2, [Lens(Vec2(0, 0), 0.6)]))
    for k in range(11):
        assert is_admissible(gamma_w(0.1 * k * math.pi))
    rep = is_admissible(gamma_w(0.0))
    assert rep.ok
    assert abs(rep.slack) < 1e-12


def test_improper():
    cfg = LensConfiguration(Z2, [Lens(Vec2(0, 0), 0.1), Lens(Vec2(1, 0), 0.1)])
    with pytest.raises(ImproperCenters):
        is_admissible(cfg)


def test_lens_to_slits():
    th = math.pi / 8
    s = lens_to_slits(gamma_w(th), th)
    assert len(s.centers) == 3
    assert abs(s.v.dot((math.cos(th), math.sin(th)))) < 1e-15
    v = lens_to_slits(gamma_w(0.0), 0.0).v
    assert abs(v.x) < 1e-15 and abs(abs(v.y) - 1) < 1e-15


def vertical(xs, radii=None, ys=None):
    ys = ys or [0.5] * len(xs)
    radii = radii or [0.1] * len(xs)
    return SlitConfiguration(Z2, (0, 1), [Vec2(x, y) for x, y in zip(xs, ys)], radii)


def test_separated_examples():
    # vertical slits have horizontal shadows along w = (1, 0)
    assert is_separated(SlitConfiguration(Z2, (1, 0), [Vec2(0.5, 0.2), Vec2(0.5, 0.6)], [0.1, 0.1]),
                        (0, 1))
    overlap = SlitConfiguration(Z2, (1, 0), [Vec2(0.5, 0.2), Vec2(0.6, 0.25)], [0.1, 0.1])
    assert not is_separated(overlap, (0, 1))
    stacked = SlitConfiguration(Z2, (1, 0), [Vec2(0.2, 0.3), Vec2(0.2, 0.7)], [0.1, 0.1])
    assert is_separated(stacked, (0, 1))
    with pytest.raises(SlitParallelToW):
        is_separated(stacked, (1, 0))


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 0.3), st.floats(0.01, 0.3))
def test_separated_sign_invariant(y1, y2, r1, r2):
    s = SlitConfiguration(Z2, (1, 0), [Vec2(0.3, y1), Vec2(0.7, y2)], [r1, r2])
    assert is_separated(s, (0, 1)) == is_separated(s, (0, -1))


def test_rescale_identity():
    s = SlitConfiguration(Z2, (0, 1), [Vec2(0.3, 0.3)], [0.1])
    res = railed_rescale(s, 0.0, 0.0)
    assert res.valid
    assert res.slits.radii == pytest.approx([0.1])


def test_rescale_small_angle_railed():
    s = SlitConfiguration(Z2, (0, 1), [Vec2(0.2, 0.3), Vec2(0.7, 0.6)], [0.05, 0.05])
    th, xi = 0.3, 0.2
    s = SlitConfiguration(Z2, Vec2(-math.sin(th), math.cos(th)), s.centers, s.radii)
    res = railed_rescale(s, th, xi)
    assert res.valid
    assert res.slits.radii[0] == pytest.approx(0.05 / math.cos(th - xi))
    assert railed_equivalent(s.to_skeleton(), res.slits.to_skeleton(), th).ok


def test_rescale_blocked():
    s = SlitConfiguration(Z2, (0, 1), [Vec2(0.3, 0.5), Vec2(0.45, 0.5)], [0.4, 0.4])
    with pytest.raises(DeformationBlocked):
        railed_rescale(s, 0.0, 1.2)


def test_json_round_trip():
    cfg = gamma_w(0.3)
    back = LensConfiguration.from_json(cfg.to_json())
    assert same_configuration(cfg, back)
