import math

import numpy as np
import pytest

from geoloops.meshes import flat_torus, icosphere
from geoloops.surface import (
    InvalidPoint,
    MeshError,
    Surface,
    SurfacePoint,
    geodesic_distance,
    invariants,
    load_surface,
    minimizing_geodesic,
    write_off,
)

from conftest import on_equator, unit


def test_point_validation():
    with pytest.raises(InvalidPoint):
        SurfacePoint(0, (0.5, 0.6, 0.0))
    with pytest.raises(InvalidPoint):
        SurfacePoint(0, (-0.1, 0.6, 0.5))
    p = SurfacePoint.make(3, (1, 1, 2))
    assert p.bary == (0.25, 0.25, 0.5)


def test_mesh_validation(tmp_path):
    V, F = icosphere(1)
    with pytest.raises(MeshError, match="closed"):
        Surface(V, F[:-1])
    flipped = F.copy()
    flipped[0] = flipped[0][::-1]
    with pytest.raises(MeshError):
        Surface(V, flipped)
    with pytest.raises(MeshError, match="triangle inequality"):
        lengths = {tuple(sorted(map(int, e))): 1.0 for e in Surface(V, F).edges}
        lengths[tuple(sorted(map(int, F[0][:2])))] = 5.0
        Surface(V, F, lengths)
    with pytest.raises(MeshError, match="not found"):
        load_surface(tmp_path / "nope.off")
    (tmp_path / "bad.off").write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 0\n")
    with pytest.raises(MeshError):
        load_surface(tmp_path / "bad.off")


def test_io_round_trip(tmp_path):
    V, F = icosphere(2)
    write_off(tmp_path / "s.off", V, F)
    a = load_surface(tmp_path / "s.off")
    obj = tmp_path / "s.obj"
    obj.write_text("".join(f"v {x} {y} {z}\n" for x, y, z in V) + "".join(f"f {i+1} {j+1} {k+1}\n" for i, j, k in F))
    b = load_surface(obj)
    assert a.n_faces == b.n_faces == len(F)
    assert np.allclose(a.edge_len, b.edge_len)


def test_distance_basics(sphere):
    p = sphere.locate(on_equator(0.0))
    assert geodesic_distance(sphere, p, p) == 0.0
    v = 17
    nb = int(sphere.edges[np.nonzero(sphere.edges[:, 0] == v)[0][0], 1])
    d = sphere.distance(sphere.vertex_point(v), sphere.vertex_point(nb))
    assert d == pytest.approx(np.linalg.norm(sphere.V[v] - sphere.V[nb]), rel=1e-12)


def test_antipodal_distance_is_pi(sphere_fine):
    s = sphere_fine
    p, q = s.locate([0, 0, 1]), s.locate([0, 0, -1])
    assert abs(s.distance(p, q) - math.pi) / math.pi < 0.02


def test_equatorial_geodesic_length(sphere):
    p, q = sphere.locate(on_equator(0.0)), sphere.locate(on_equator(1.0))
    c = minimizing_geodesic(sphere, p, q)
    assert abs(c.length - 1.0) < 0.02
    assert sphere.same_point(c.start, p) and sphere.same_point(c.end, q)
    pt = minimizing_geodesic(sphere, p, p)
    assert pt.length == 0.0


def test_great_circle_distances(sphere):
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = unit(rng.normal(size=3)), unit(rng.normal(size=3))
        d = sphere.distance(sphere.locate(a), sphere.locate(b))
        true = math.acos(np.clip(a @ b, -1, 1))
        assert abs(d - true) <= 0.01 * true + 1e-9


def test_geodesic_length_matches_distance(sphere):
    rng = np.random.default_rng(4)
    for _ in range(100):
        p = SurfacePoint.make(int(rng.integers(sphere.n_faces)), rng.dirichlet([1, 1, 1]))
        q = SurfacePoint.make(int(rng.integers(sphere.n_faces)), rng.dirichlet([1, 1, 1]))
        c = minimizing_geodesic(sphere, p, q)
        assert c.length == pytest.approx(geodesic_distance(sphere, p, q), rel=sphere.tol_geo)


def test_symmetry_and_triangle_inequality(sphere):
    rng = np.random.default_rng(5)
    tol = 3 * sphere.tol_geo * math.pi
    for _ in range(200):
        p, q, r = (SurfacePoint.make(int(rng.integers(sphere.n_faces)), rng.dirichlet([1, 1, 1])) for _ in range(3))
        pq, qr, pr = sphere.distance(p, q), sphere.distance(q, r), sphere.distance(p, r)
        assert pr <= pq + qr + tol
        assert abs(pq - sphere.distance(q, p)) <= 2 * sphere.tol_geo * max(pq, 1e-12)


def test_refined_graph_oracle(sphere):
    oracle = sphere.with_steiner(4 * sphere.steiner)
    rng = np.random.default_rng(6)
    for _ in range(40):
        p = SurfacePoint.make(int(rng.integers(sphere.n_faces)), rng.dirichlet([1, 1, 1]))
        q = SurfacePoint.make(int(rng.integers(sphere.n_faces)), rng.dirichlet([1, 1, 1]))
        d, g = sphere.distance(p, q), oracle.graph_distance(p, q)
        assert abs(d - g) <= 2 * sphere.tol_geo * g
        assert d <= g * (1 + 1e-12)  # the graph metric never undershoots


def test_geodesics_are_unshortenable(sphere):
    rng = np.random.default_rng(7)
    for _ in range(10):
        p = SurfacePoint.make(int(rng.integers(sphere.n_faces)), rng.dirichlet([1, 1, 1]))
        q = SurfacePoint.make(int(rng.integers(sphere.n_faces)), rng.dirichlet([1, 1, 1]))
        poly = sphere.geodesic(p, q)
        again = sphere.straighten(poly)
        assert again.length >= poly.length * (1 - sphere.tol_geo)


def test_flat_torus_is_exact(torus):
    p = torus.vertex_point(0)
    assert torus.distance(p, torus.vertex_point(8 + 16 * 8)) == pytest.approx(math.hypot(0.5, 0.5), rel=1e-12)
    assert torus.distance(p, torus.vertex_point(5 + 16 * 3)) == pytest.approx(math.hypot(5, 3) / 16, rel=1e-12)
    # wrap-around: vertex 15 is one step to the left of vertex 0
    assert torus.distance(p, torus.vertex_point(15)) == pytest.approx(1 / 16, rel=1e-12)


def test_torus_invariants(torus):
    inv = invariants(torus, 16)
    assert abs(inv.curv_lower_est) < 1e-6
    assert inv.area == pytest.approx(1.0, rel=1e-12)
    assert inv.diameter_est == pytest.approx(math.hypot(0.5, 0.5), rel=1e-9)


def test_sphere_invariants(sphere_fine):
    inv = invariants(sphere_fine, 16)
    assert sphere_fine.n_faces >= 10_000
    assert abs(inv.area - 4 * math.pi) / (4 * math.pi) < 0.01
    assert abs(inv.diameter_est - math.pi) / math.pi < 0.02
    assert abs(inv.curv_lower_est - 1.0) < 0.1
    assert inv.diameter_est >= inv.sampled_max


def test_scaling_homogeneity(small_sphere):
    a = invariants(small_sphere, 8)
    b = invariants(small_sphere.scaled(2.0), 8)
    assert b.diameter_est == pytest.approx(2 * a.diameter_est, rel=1e-9)
    assert b.area == pytest.approx(4 * a.area, rel=1e-12)


def test_sidecar_overrides_positions(tmp_path):
    V, F, L = flat_torus(6, 6)
    write_off(tmp_path / "t.off", V, F)
    import json

    (tmp_path / "t.json").write_text(json.dumps({"edge_lengths": [[i, j, x] for (i, j), x in L.items()]}))
    s = load_surface(tmp_path / "t.off")
    assert not s.embedded
    assert s.area == pytest.approx(1.0)
