import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geoloops.homotopy import VariationTooLarge, _open_curve
from geoloops.loopspace import Curve, sup_distance
from geoloops.sweep import (
    InsufficientGeodesics,
    Sweepout,
    birkhoff_run,
    birkhoff_shorten,
    compress_family,
    find_geodesics,
    spiral_sweepout,
    winding_skeleton,
)
from geoloops.meshes import load_fixture

from conftest import on_equator


@pytest.fixture(scope="module")
def ellipsoid():
    return load_fixture("ellipsoid")


def endpoints(s, angle=1.0):
    return s.locate(on_equator(0.0)), s.locate(on_equator(angle))


def wiggle(s, a0, a1, amp, n=12, phase=0.0):
    """Equatorial arc whose breakpoints alternate above and below the equator."""
    pts = [s.locate(on_equator(a0))]
    for k, a in enumerate(np.linspace(a0, a1, n + 1)[1:-1]):
        z = amp * (1 if (k + int(phase)) % 2 else -1)
        pts.append(s.locate([math.cos(a), math.sin(a), z]))
    pts.append(s.locate(on_equator(a1)))
    return Curve.from_breakpoints(s, pts)


def geodesic_path(s, p, q):
    return _open_curve(s, [s.geodesic(p, q)])


# ---------------------------------------------------------------- Birkhoff
def test_minimizer_is_a_fixed_point(sphere):
    p, q = endpoints(sphere, 1.2)
    g = geodesic_path(sphere, p, q)
    res = birkhoff_run(g, tol=1e-6)
    assert res.converged
    assert res.curve.length == pytest.approx(g.length, rel=1e-6)


def test_wiggly_equator_arc_straightens(sphere):
    p, q = endpoints(sphere, 1.5)
    w = wiggle(sphere, 0.0, 1.5, 0.15)
    assert w.length > 1.1 * sphere.distance(p, q)
    out = birkhoff_shorten(w)
    assert out.length == pytest.approx(sphere.distance(p, q), rel=0.02)
    assert sphere.same_point(out.start, p, 1e-9) and sphere.same_point(out.end, q, 1e-9)


@settings(max_examples=12, deadline=None)
@given(amp=st.floats(0.02, 0.3), span=st.floats(0.4, 2.5), phase=st.integers(0, 1))
def test_lengths_never_increase(sphere, amp, span, phase):
    res = birkhoff_run(wiggle(sphere, 0.0, span, amp, phase=phase), max_iters=20)
    assert all(b <= a + 1e-12 for a, b in zip(res.lengths, res.lengths[1:]))


def test_non_convergence_is_flagged(sphere):
    w = wiggle(sphere, 0.0, 2.0, 0.3, n=30)
    res = birkhoff_run(w, max_iters=1, tol=1e-12)
    assert not res.converged and res.iterations == 1
    with pytest.warns(RuntimeWarning, match="did not converge"):
        best = birkhoff_shorten(w, max_iters=1, tol=1e-12)
    assert best.length <= w.length


def test_closed_curves_are_rejected(sphere):
    loop = Curve.from_breakpoints(sphere, [sphere.locate(on_equator(a)) for a in (0.0, 2.0, 4.0)], closed=True)
    with pytest.raises(ValueError):
        birkhoff_run(loop)


# ---------------------------------------------------------------- geodesics
def test_winding_skeleton_shapes(sphere):
    p, q = endpoints(sphere)
    w = sphere.locate([0.0, 0.0, 1.0])
    assert winding_skeleton(0, p, q, w) == [p, q]
    assert winding_skeleton(1, p, q, w) == [p, w, q]
    assert winding_skeleton(2, p, q, w) == [p, q, w, p, q]
    assert winding_skeleton(3, p, q, w) == [p, w, q, p, w, q]


def test_first_geodesic_is_the_minimizer(sphere):
    p, q = endpoints(sphere, 1.3)
    (g,) = find_geodesics(sphere, p, q, 1)
    assert g.length == pytest.approx(sphere.distance(p, q), rel=sphere.tol_geo)


def test_m_must_be_positive(sphere):
    p, q = endpoints(sphere)
    with pytest.raises(ValueError):
        find_geodesics(sphere, p, q, 0)


def test_dedup_shortfall_raises(sphere):
    p, q = endpoints(sphere)
    report = {}
    with pytest.raises(InsufficientGeodesics):
        find_geodesics(sphere, p, q, 3, separation=1e6, extra=0, report=report)
    assert [t["kept"] for t in report["tried"]] == [True, False, False]


def test_ellipsoid_three_critical_curves(ellipsoid):
    p, q = ellipsoid.locate([1.0, 0.0, 0.0]), ellipsoid.locate([0.0, 1.0, 0.3])
    gs = find_geodesics(ellipsoid, p, q, 3)
    lengths = [g.length for g in gs]
    assert lengths == sorted(lengths)
    sep = 3.0 * ellipsoid.mean_edge_length
    for i in range(3):
        for j in range(i + 1, 3):
            assert sup_distance(gs[i], gs[j], 64) > sep
    for g in gs:
        assert ellipsoid.same_point(g.start, p, 1e-9) and ellipsoid.same_point(g.end, q, 1e-6)
        # locally unshortenable: more passes gain nothing
        assert birkhoff_run(g, max_iters=10).curve.length >= g.length * (1 - 1e-3)


# ---------------------------------------------------------------- sweepouts
def test_sweepout_invariants(sphere):
    p, q = endpoints(sphere)
    g = geodesic_path(sphere, p, q)
    with pytest.raises(ValueError):
        Sweepout([g])
    other = geodesic_path(sphere, p, sphere.locate(on_equator(2.0)))
    with pytest.raises(ValueError, match="same two points"):
        Sweepout([g, other])
    loop = Curve.from_breakpoints(sphere, [p, q, sphere.locate([0, 0, 1.0])], closed=True)
    with pytest.raises(ValueError, match="open"):
        Sweepout([g, loop])


def test_spiral_sweepout_shape_and_roundtrip(sphere):
    p, q = endpoints(sphere)
    f = spiral_sweepout(sphere, p, q, 2, max_length=4 * math.pi, members=8, points=24)
    assert f.is_closed_loop() and f.degree == 2
    assert len(f.family) == 9
    assert f.max_length == pytest.approx(4 * math.pi, rel=0.05)
    back = Sweepout.from_json(sphere, json.loads(json.dumps(f.to_json())))
    assert back.degree == 2
    assert np.allclose(back.lengths(), f.lengths())


def test_spiral_needs_a_size(sphere):
    p, q = endpoints(sphere)
    with pytest.raises(ValueError):
        spiral_sweepout(sphere, p, q, 1)


# ---------------------------------------------------------------- compression
@pytest.fixture(scope="module")
def constant_compression(sphere, calib):
    p, q = endpoints(sphere)
    f = Sweepout([geodesic_path(sphere, p, q)] * 9)
    return f, compress_family(f, calib, 0.5)


def test_compressing_minimizers_stays_below_diameter(constant_compression, calib):
    _, out = constant_compression
    assert out.max_length <= calib.diameter * 1.01
    assert out.max_length <= out.bound


def test_compressed_family_keeps_endpoints(sphere, constant_compression):
    f, out = constant_compression
    assert out.sweepout.is_closed_loop()
    for c in out.sweepout.family:
        assert sphere.same_point(c.start, f.p, 1e-9) and sphere.same_point(c.end, f.q, 1e-9)


def test_audit_chain_starts_at_the_input(constant_compression):
    f, out = constant_compression
    assert out.audit
    for h in out.audit:
        assert h.kind == "fixed-endpoints"
        assert sup_distance(h.levels[0], f.family[0], 32) < 1e-9
    data = json.loads(json.dumps(out.to_json()))
    assert data["within_bound"] and data["fill"] == "cone"


def test_compress_rejects_open_parameter_circle(sphere, calib):
    p, q = endpoints(sphere)
    g = geodesic_path(sphere, p, q)
    h = _open_curve(sphere, [sphere.geodesic(p, sphere.locate([0, 0, 1.0])), sphere.geodesic(sphere.locate([0, 0, 1.0]), q)])
    with pytest.raises(ValueError, match="coincide"):
        compress_family(Sweepout([g, h]), calib, 0.5)


def test_coarse_family_is_refused(sphere, calib):
    p, q = endpoints(sphere)
    g = geodesic_path(sphere, p, q)
    h = _open_curve(sphere, [sphere.geodesic(p, sphere.locate([0, 0, 1.0])), sphere.geodesic(sphere.locate([0, 0, 1.0]), q)])
    with pytest.raises(VariationTooLarge):
        compress_family(Sweepout([g, h, g]), calib, 0.05)
