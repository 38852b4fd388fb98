import math

import numpy as np
import pytest

from geoloops.bounds import net_size_bound
from geoloops.cover import build_cover
from geoloops.loopspace import (
    Curve,
    CurveTooLong,
    KindMismatch,
    Net,
    canonical_rotation,
    net_size_observed,
    project_to_net,
    sup_distance,
)

from conftest import circle_of_latitude, on_equator, random_loop


@pytest.fixture(scope="module")
def net(sphere):
    return Net(build_cover(sphere, 0.6), 2.0)


def test_curve_length_and_closure(sphere):
    c = circle_of_latitude(sphere, 0.3, n=24)
    assert c.length == pytest.approx(sum(p.length for p in c.segments), rel=1e-9)
    assert sphere.same_point(c.eval(0.0), c.eval(1.0))
    assert c.length == pytest.approx(2 * math.pi * math.cos(0.3), rel=0.01)


def test_reverse_and_concat(sphere):
    a = Curve.from_breakpoints(sphere, [sphere.locate(on_equator(0)), sphere.locate(on_equator(0.5))])
    b = Curve.from_breakpoints(sphere, [sphere.locate(on_equator(0.5)), sphere.locate(on_equator(1.2))])
    ab = a.then(b)
    assert ab.length == pytest.approx(a.length + b.length)
    assert sphere.same_point(ab.reversed().eval(1.0), a.eval(0.0))
    assert sphere.same_point(ab.eval(a.length / ab.length), b.start)


def test_sup_distance_basics(sphere):
    c = circle_of_latitude(sphere, 0.2)
    assert sup_distance(c, c) == 0.0
    open_curve = Curve.from_breakpoints(sphere, [sphere.locate(on_equator(0)), sphere.locate(on_equator(1))])
    with pytest.raises(KindMismatch):
        sup_distance(c, open_curve)
    with pytest.raises(ValueError):
        sup_distance(c, c, samples=4)


def test_parallel_circles(sphere):
    a = circle_of_latitude(sphere, 0.0)
    b = circle_of_latitude(sphere, 0.25)
    d = sup_distance(a, b)
    assert d == pytest.approx(0.25, abs=0.02)
    assert abs(d - sup_distance(b, a)) <= 2 * sphere.tol_geo * math.pi


def test_canonical_rotation():
    assert canonical_rotation((3, 1, 2, 1, 0)) == (4, (0, 3, 1, 2, 1))
    assert canonical_rotation((2, 2)) == (0, (2, 2))


def test_net_starts_empty_and_counts(sphere):
    n = Net(build_cover(sphere, 1.2), 2.0)
    assert net_size_observed(n) == 0
    project_to_net(circle_of_latitude(sphere, 1.3, n=12), n)
    assert net_size_observed(n) == 1


def test_projection_is_idempotent(sphere):
    net = Net(build_cover(sphere, 0.6), 10.0)
    g = circle_of_latitude(sphere, 1.3, n=16)
    e1 = project_to_net(g, net)
    e2 = project_to_net(g, net)
    assert e1.key == e2.key
    e3 = project_to_net(e1.curve, net)
    assert e3.key == e1.key
    assert sup_distance(e1.curve, e3.curve) < 1e-9


def test_too_long(sphere, net):
    with pytest.raises(CurveTooLong):
        project_to_net(circle_of_latitude(sphere, 0.0), net)


def test_epsilon_net_property(sphere, net):
    rng = np.random.default_rng(11)
    done = 0
    while done < 40:
        g = random_loop(sphere, rng)
        if g.length > net.L:
            continue
        e = project_to_net(g, net)
        slack = (g.length + e.curve.length) / 64
        assert sup_distance(g, e.curve) < 5 * net.eps / 6 + slack
        assert e.curve.length <= 3 * net.L
        assert e.segment_count <= max(1, math.ceil(18 * net.L / net.eps))
        done += 1
    assert net_size_bound(len(net.cover), net.L, net.eps) >= net_size_observed(net)
    for elem in net.elements.values():
        assert elem.curve.length <= 3 * net.L
        assert canonical_rotation(elem.key)[1] == elem.key
