import math

import numpy as np
import pytest

from geoloops.bounds import ball_count_bound
from geoloops.cover import EpsTooSmall, brute_force_nerve, build_cover, nerve, verify_cover


def test_single_center_when_eps_is_huge(sphere):
    c = build_cover(sphere, 12 * math.pi * 1.01)
    assert len(c) == 1
    assert nerve(c) == []


@pytest.mark.parametrize("eps", [1.2, 2.4])
def test_count_between_cap_bound_and_ball_bound(sphere, eps):
    c = build_cover(sphere, eps)
    lower = sphere.area / (2 * math.pi * (1 - math.cos(eps / 6)))
    assert lower <= len(c)
    assert ball_count_bound(eps, math.pi, 2) >= len(c)


def test_packing_and_covering(sphere):
    c = build_cover(sphere, 2.4)
    rep = verify_cover(c)
    assert rep["vertex_cover_radius"] <= c.cover_radius
    assert rep["centroid_cover_radius"] <= c.cover_radius * (1 + sphere.tol_geo)
    assert rep["min_separation"] >= 2 * c.pack_radius * (1 - sphere.tol_geo)


def test_each_center_is_needed(sphere):
    c = build_cover(sphere, 2.4)
    verts = c.center_vertices
    for i, v in enumerate(verts):
        others = [u for j, u in enumerate(verts) if j != i]
        d = min(sphere.vertex_distances(u, limit=c.cover_radius * 1.01)[v] for u in others)
        assert d > c.cover_radius


def test_nerve_matches_brute_force(sphere):
    c = build_cover(sphere, 2.4)
    fast = [(i, j) for i, j, _ in nerve(c)]
    assert fast == brute_force_nerve(c)
    assert all(i != j for i, j in fast)
    for i, j, poly in nerve(c):
        assert poly.length <= c.eps / 2


def test_close_pair_gives_one_edge(small_sphere):
    # with eps chosen so the two farthest-point centers sit at distance about eps/3
    c = build_cover(small_sphere, 12 * math.pi * 1.01)
    assert len(c) == 1
    d = small_sphere.vertex_distances(0)
    v = int(np.argmax(d > 0.3))
    eps = 3 * d[v] * 1.0001
    c2 = build_cover(small_sphere, eps)
    assert len(nerve(c2)) == len(brute_force_nerve(c2))


def test_cap_is_enforced(sphere):
    with pytest.raises(EpsTooSmall):
        build_cover(sphere, 0.6, cap=10)
