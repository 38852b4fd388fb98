import json
import math

import numpy as np
import pytest

from geoloops.homotopy import (
    ConeFailure,
    CurvesNotClose,
    EndpointMismatch,
    Homotopy,
    NotAContraction,
    VariationTooLarge,
    contract_based_short,
    contract_in_ball,
    contract_via_net,
    digon_loop,
    extend_to_interval,
    free_to_based,
    geodesic_circle,
    homotope_close_curves,
    merged_schedule,
    path_homotopy,
    raw_contraction,
    short_path_family,
    shorten_levels,
)
from geoloops.loopspace import Curve, KindMismatch, sup_distance

from conftest import circle_of_latitude, north_cap_circle, on_equator, pole, random_loop

SLACK = 1.10


def arc(s, a0, a1, n=8):
    """Open path along the equator from angle a0 to a1."""
    pts = [s.locate(on_equator(a)) for a in np.linspace(a0, a1, n + 1)]
    return Curve.from_breakpoints(s, pts)


@pytest.fixture(scope="module")
def cap_cone(sphere):
    loop = north_cap_circle(sphere, 0.6, n=32)
    return loop, *contract_in_ball(loop, pole(sphere), 0.6 * 1.02)


@pytest.fixture(scope="module")
def equator_cone(sphere):
    loop = circle_of_latitude(sphere, 0.0, n=48)
    H, _ = contract_in_ball(loop, pole(sphere), math.pi / 2 * 1.02)
    return loop, H


@pytest.fixture(scope="module")
def equator_via(equator_cone, calib):
    loop, H = equator_cone
    return contract_via_net(loop, H, calib.net, calib.a, calib.r_emp)


# ------------------------------------------------------------- cone and ball
def test_cone_of_cap_circle(sphere, cap_cone):
    loop, H, bc = cap_cone
    assert H.kind == "free-closed"
    assert H.first is loop
    assert H.last.is_point()
    assert bc.containment == pytest.approx(0.6, rel=0.02)
    # every point slides down its meridian: trajectories are as long as the radius
    assert bc.width == pytest.approx(0.6, rel=0.03)
    assert bc.measured_R == pytest.approx(1.0, abs=0.05)
    lengths = H.level_lengths()
    assert np.all(np.diff(lengths) <= 1e-9)


def test_cone_point_loop_is_trivial(sphere):
    c = pole(sphere)
    H, bc = contract_in_ball(Curve.point(sphere, c), c, 0.1)
    assert bc.width == 0.0 and bc.measured_R == 1.0
    assert len(H) == 2


def test_cone_rejects_loop_outside_ball(sphere):
    loop = north_cap_circle(sphere, 0.6)
    with pytest.raises(ValueError):
        contract_in_ball(loop, pole(sphere), 0.3)
    with pytest.raises(KindMismatch):
        contract_in_ball(arc(sphere, 0, 1), pole(sphere), 2.0)


def test_cone_through_cut_locus_fails(sphere):
    # a circle through the south pole seen from the north pole: rays jump across the cut point
    s = sphere
    south = np.array([0.0, 0.0, -1.0])
    center = np.array([math.sin(0.5), 0.0, -math.cos(0.5)])
    loop = geodesic_circle(s, s.locate(center), 0.5, n=48)
    assert min(s.distance(x, s.locate(south)) for x in loop.breakpoints) < 0.1
    with pytest.raises(ConeFailure):
        contract_in_ball(loop, pole(s), math.pi * 1.02)


def test_geodesic_circle_radius(sphere):
    c = pole(sphere)
    loop = geodesic_circle(sphere, c, 0.8, n=24)
    assert all(sphere.distance(c, x) == pytest.approx(0.8, rel=0.01) for x in loop.breakpoints)
    assert loop.length == pytest.approx(2 * math.pi * math.sin(0.8), rel=0.02)


# ------------------------------------------------------------- close curves
def test_close_curves_width_law(sphere, calib):
    a = circle_of_latitude(sphere, 0.0, n=32)
    b = circle_of_latitude(sphere, 0.12, n=32, phase=0.05)
    H = homotope_close_curves(a, b, calib.a, calib.r_emp)
    assert H.first is a and H.last is b
    assert H.width() <= calib.close_bound * SLACK
    assert H.width() >= sup_distance(a, b) * 0.9


def test_close_curves_rejects_far_curves(sphere, calib):
    a = circle_of_latitude(sphere, 0.0)
    b = circle_of_latitude(sphere, 1.4)
    with pytest.raises(CurvesNotClose):
        homotope_close_curves(a, b, calib.a, calib.r_emp)
    with pytest.raises(ValueError):
        homotope_close_curves(a, a, 2.0, calib.r_emp)


def test_close_paths_keep_endpoints(sphere, calib):
    s = sphere
    g1 = arc(s, 0.0, 1.0)
    mid = s.locate([math.cos(0.5), math.sin(0.5), 0.1])
    g2 = Curve.from_breakpoints(s, [g1.start, mid, g1.end])
    H = homotope_close_curves(g1, g2, calib.a, calib.r_emp)
    assert H.kind == "fixed-endpoints"
    assert H.check_kind()
    with pytest.raises(EndpointMismatch):
        homotope_close_curves(g1, arc(s, 0.0, 1.1), calib.a, calib.r_emp)
    with pytest.raises(KindMismatch):
        homotope_close_curves(g1, circle_of_latitude(s, 0.0), calib.a, calib.r_emp)


# -------------------------------------------------------------- calibration
def test_calibration_on_sphere(calib):
    # cones work up to most of the way to the antipode and cost no extra width
    assert 0.5 * math.pi <= calib.r_emp <= math.pi
    assert 1.0 <= calib.R_emp <= 1.1
    assert calib.eps_net == pytest.approx(calib.r_emp / (4 * calib.a))
    data = calib.to_json()
    assert len(data["probes"]) == 20
    json.dumps(data)


# ------------------------------------------------------------- loop pipeline
def test_via_net_chain(equator_cone, equator_via, calib):
    loop, _ = equator_cone
    H = equator_via
    assert H.first is loop
    assert H.last.is_point()
    assert H.meta["chain_length"] >= 1
    assert H.continuity() < calib.r_emp / calib.a


def test_shorten_levels_bound(equator_via, sphere):
    eps = 0.5
    W = equator_via.width()
    S = shorten_levels(equator_via, eps)
    gamma = equator_via.first
    assert S.max_length <= (gamma.length + 3 * W + eps) * SLACK
    assert S.last.is_point()
    # level 0 is gamma with block knots: same image and length
    assert S.first.length == pytest.approx(gamma.length, rel=1e-9)
    assert sup_distance(S.first.constant_speed(), gamma.constant_speed(), 32) < 1e-6
    assert S.check_kind()


def test_free_to_based_bound(cap_cone):
    _, H, _ = cap_cone
    B = free_to_based(H, H.max_length)
    assert B.kind == "based-loop"
    assert B.check_kind()
    assert B.max_length <= (H.max_length + 2 * H.width()) * SLACK
    assert B.last.is_point()


def test_pipeline_rejects_non_contraction(sphere, calib):
    a = circle_of_latitude(sphere, 0.0, n=16)
    b = circle_of_latitude(sphere, 0.05, n=16)
    H = Homotopy([a, b], "free-closed")
    with pytest.raises(NotAContraction):
        shorten_levels(H, 0.5)
    with pytest.raises(NotAContraction):
        free_to_based(H)
    with pytest.raises(ValueError):
        free_to_based(Homotopy([a, Curve.point(sphere, a.start)], "free-closed"), L=0.1)


def test_contract_based_short_bound(equator_cone, calib, sphere):
    loop, H = equator_cone
    C = contract_based_short(loop, H, calib.net, calib.a, calib.r_emp, eps=0.5)
    W = C.meta["W_measured"]
    assert C.kind == "based-loop" and C.check_kind()
    assert C.max_length <= (2 * calib.diameter + 5 * W + 0.5) * SLACK
    assert C.last.is_point()


def test_raw_contraction_of_random_loop(sphere):
    rng = np.random.default_rng(3)
    loop = random_loop(sphere, rng, rho_max=0.6)
    H = raw_contraction(loop)
    assert H.first is loop and H.last.is_point()


# ------------------------------------------------------------- path pipeline
@pytest.fixture(scope="module")
def digon(sphere):
    s = sphere
    g1 = arc(s, 0.0, 1.0)
    top = s.locate([math.cos(0.5), math.sin(0.5), 0.6])
    g2 = Curve.from_breakpoints(s, [g1.start, top, g1.end])
    return g1, g2


def test_path_homotopy_bound(digon):
    g1, g2 = digon
    C = free_to_based(raw_contraction(digon_loop(g1, g2)))
    P = path_homotopy(g1, g2, C)
    assert P.kind == "fixed-endpoints" and P.check_kind()
    assert P.max_length <= (C.max_length + min(g1.length, g2.length)) * (1 + 1e-9)
    assert P.first.length == pytest.approx(g1.length) and P.last.length == pytest.approx(g2.length)
    assert sup_distance(P.first, g1, 32) < 1e-6
    assert sup_distance(P.last, g2, 32) < 1e-6
    # swapping the roles flips the order
    Q = path_homotopy(g2, g1, free_to_based(raw_contraction(digon_loop(g2, g1))))
    assert Q.first.length == pytest.approx(g2.length)


def test_path_homotopy_checks(digon, sphere):
    g1, g2 = digon
    C = free_to_based(raw_contraction(digon_loop(g1, g2)))
    with pytest.raises(EndpointMismatch):
        path_homotopy(g1, arc(sphere, 0.0, 1.2), C)
    with pytest.raises(KindMismatch):
        path_homotopy(g1, g2, raw_contraction(digon_loop(g1, g2)))


def test_short_family_of_geodesic_has_no_digons(sphere):
    alpha = Curve.from_polylines(sphere, [sphere.geodesic(sphere.locate(on_equator(0)), sphere.locate(on_equator(1.2)))])
    F = short_path_family(alpha)
    assert F.meta["jumps"] == 0
    assert F.max_length <= alpha.length * (1 + 1e-6)
    assert np.all(np.diff(F.phi) >= 0)


def test_short_family_through_antipode(sphere):
    s = sphere
    loop = geodesic_circle(s, s.locate([0.3, 0.5, 0.8]), math.pi / 2, n=64)
    alpha = loop.as_open()
    F = short_path_family(alpha)
    assert F.meta["jumps"] == 1
    curves, phi = F
    assert np.all(np.diff(phi) >= 0)
    assert phi[0] == 0.0 and phi[-1] == 1.0
    for c, t in zip(curves, phi):
        assert s.same_point(c.start, alpha.start)
        assert s.distance(c.end, alpha.eval(t)) < 1e-6
    # path homotopy law: contraction levels plus the shorter side (a geodesic, at most pi)
    (d,) = F.meta["digons"]
    assert F.max_length <= d["contraction_max_length"] + math.pi * 1.01


def test_merged_schedule_pairs_same_parameter():
    pa = [0.0, 0.2, 0.2, 0.2, 0.5, 1.0]
    pb = [0.0, 0.2, 0.5, 0.5, 1.0]
    sched = merged_schedule(pa, pb)
    assert all(pa[i] == t == pb[j] for i, j, t in sched)
    assert sched[0] == (0, 0, 0.0) and sched[-1] == (5, 4, 1.0)
    steps = [(i2 - i1) + (j2 - j1) for (i1, j1, _), (i2, j2, _) in zip(sched, sched[1:])]
    assert all(1 <= x <= 2 for x in steps)
    with pytest.raises(ValueError):
        merged_schedule([0.0, 1.0], [0.0, 0.5, 1.0])


def test_extend_constant_family(sphere, calib):
    s = sphere
    f = arc(s, 0.0, 1.0, n=6)
    members = [f] * 5
    ts = np.linspace(0, 1, 33)
    fam = short_path_family(f, ts=ts)
    ext = extend_to_interval(members, 2, ts, fam, fam, fam, 0.2, W=calib.W_emp, diameter=calib.diameter)
    q = f.end
    for c in ext.curves:
        assert s.same_point(c.start, f.start) and s.same_point(c.end, q)
    assert ext.max_length <= fam.max_length + 2 * fam.max_length + 1e-9
    assert ext.max_length <= ext.bound


def test_extend_detects_large_variation(sphere, calib):
    s = sphere
    a = arc(s, 0.0, 1.0, n=4)
    top = s.locate([math.cos(0.5), math.sin(0.5), 0.5])
    b = Curve.from_breakpoints(s, [a.start, top, a.end])
    ts = np.linspace(0, 1, 17)
    fa, fb = short_path_family(a, ts=ts), short_path_family(b, ts=ts)
    with pytest.raises(VariationTooLarge):
        extend_to_interval([a, b, a], 1, ts, fb, fa, fa, 0.05, W=1.0, diameter=math.pi)


# --------------------------------------------------------------- bookkeeping
def test_width_subadditive(sphere, calib):
    rng = np.random.default_rng(11)
    for _ in range(3):
        a = random_loop(sphere, rng)
        H0 = homotope_close_curves(a, a.subdivided(12), calib.a, calib.r_emp)
        H1 = raw_contraction(H0.last)
        H2 = Homotopy([H1.last, H1.last], "free-closed")
        chain = H0.then(H1).then(H2)
        assert chain.width() <= H0.width() + H1.width() + H2.width() + 1e-6


def test_serialization(cap_cone):
    _, H, bc = cap_cone
    data = H.to_json()
    assert data["n_levels"] == len(H)
    assert json.loads(json.dumps(data))["kind"] == "free-closed"
    csv_text = H.lengths_csv().splitlines()
    assert csv_text[0] == "level,tau,length"
    assert len(csv_text) == len(H) + 1
    assert bc.to_json()["measured_R"] >= 1.0
