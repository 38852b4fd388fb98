"""Greedy packings of a surface, the covers they induce, and their nerve."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .surface import Polyline, Surface, SurfacePoint

__all__ = ["EpsTooSmall", "Cover", "build_cover", "nerve", "brute_force_nerve", "verify_cover"]

# graph distances overestimate true ones by well under this factor on the bundled meshes
_GRAPH_SLACK = 1.05


class EpsTooSmall(ValueError):
    """The packing would need more centers than the configured cap."""


@dataclass(eq=False)
class Cover:
    surface: Surface
    eps: float
    center_vertices: list[int]
    vertex_min_dist: np.ndarray
    near_centers: list[list[int]]
    _nerve: list | None = field(default=None, repr=False)
    _segments: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def pack_radius(self) -> float:
        return self.eps / 12.0

    @property
    def cover_radius(self) -> float:
        return self.eps / 6.0

    @property
    def centers(self) -> list[SurfacePoint]:
        return [self.surface.vertex_point(v) for v in self.center_vertices]

    def __len__(self) -> int:
        return len(self.center_vertices)

    @property
    def nerve_edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j, _ in nerve(self)]

    def center_point(self, i: int) -> SurfacePoint:
        return self.surface.vertex_point(self.center_vertices[i])

    def segment(self, i: int, j: int) -> Polyline:
        """Minimizing geodesic from center ``i`` to center ``j`` (cached)."""
        if i == j:
            return Polyline.point(self.center_point(i))
        key = (min(i, j), max(i, j))
        with self._lock:
            poly = self._segments.get(key)
        if poly is None:
            poly = self.surface.geodesic(self.center_point(key[0]), self.center_point(key[1]))
            with self._lock:
                self._segments[key] = poly
        return poly if i < j else poly.reversed()

    def nearest_center(self, x: SurfacePoint) -> tuple[int, float]:
        """Index of the closest center (ties go to the smaller index) and its distance."""
        s = self.surface
        cand = sorted({c for f in s.faces_of(x) for v in s.F[f] for c in self.near_centers[int(v)]})
        if not cand:
            cand = list(range(len(self)))
        if s.embedded:
            xyz = s.xyz(x)
            lower = [float(np.linalg.norm(s.V[self.center_vertices[c]] - xyz)) for c in cand]
        else:
            lower = [0.0] * len(cand)
        order = sorted(range(len(cand)), key=lambda k: (lower[k], cand[k]))
        best, best_d = -1, math.inf
        for k in order:
            if lower[k] > best_d + 1e-12:
                break
            d = s.distance(x, self.center_point(cand[k]))
            if d < best_d - 1e-12 or (abs(d - best_d) <= 1e-12 and cand[k] < best):
                best, best_d = cand[k], d
        return best, best_d

    def to_json(self, with_nerve: bool = True) -> dict:
        data = {
            "eps": self.eps,
            "pack_radius": self.pack_radius,
            "cover_radius": self.cover_radius,
            "center_vertices": list(map(int, self.center_vertices)),
            "centers": [p.to_json() for p in self.centers],
        }
        if with_nerve:
            data["nerve_edges"] = [list(e) for e in self.nerve_edges]
        return data


def build_cover(s: Surface, eps: float, cap: int = 10**6) -> Cover:
    """Farthest-point packing seeded at vertex 0.

    New centers are added while some vertex is farther than ``eps/6`` from
    every center, so centers end up more than ``eps/6 = 2*pack_radius`` apart
    and every vertex lies within ``eps/6`` of a center.  The sweep runs on
    Steiner-graph distances, which never undershoot the true ones; a
    candidate that the graph places just outside the radius is re-measured
    with the refined solver before it becomes a center.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    radius = eps / 6.0
    mind = s.vertex_distances(0)
    centers = [0]
    slot = {0: 0}
    while True:
        v = int(np.argmax(mind))
        if mind[v] <= radius:
            break
        # the graph metric can overshoot short distances; confirm with refined ones
        near = s.vertex_distances(v, limit=radius * _GRAPH_SLACK * 1.5)
        refined = [s.distance(s.vertex_point(v), s.vertex_point(u)) for u in np.nonzero(np.isfinite(near))[0] if int(u) in slot]
        if refined and min(refined) <= radius:
            mind[v] = min(refined)
            continue
        if len(centers) >= cap:
            raise EpsTooSmall(f"more than {cap} centers needed at eps={eps}")
        slot[v] = len(centers)
        centers.append(v)
        d = s.vertex_distances(v, limit=float(mind[v]))
        np.minimum(mind, d, out=mind)
    # per-vertex list of centers that could be nearest for a point in an incident face
    reach = (eps / 3.0 + 2.0 * float(s.edge_len.max())) * _GRAPH_SLACK
    near: list[list[int]] = [[] for _ in range(s.n_vertices)]
    for i, c in enumerate(centers):
        d = s.vertex_distances(c, limit=reach)
        for v in np.nonzero(np.isfinite(d))[0]:
            near[int(v)].append(i)
    return Cover(s, float(eps), centers, mind, near)


def nerve(cover: Cover) -> list[tuple[int, int, Polyline]]:
    """Pairs of centers at distance at most ``eps/2``, with their geodesics."""
    if cover._nerve is not None:
        return cover._nerve
    s = cover.surface
    half = cover.eps / 2.0
    out = []
    for i, c in enumerate(cover.center_vertices):
        d = s.vertex_distances(c, limit=half * _GRAPH_SLACK + s.mean_edge_length)
        for j, cj in enumerate(cover.center_vertices):
            if j <= i or not np.isfinite(d[cj]):
                continue
            poly = cover.segment(i, j)
            if poly.length <= half:
                out.append((i, j, poly))
    cover._nerve = out
    return out


def brute_force_nerve(cover: Cover) -> list[tuple[int, int]]:
    """All-pairs check of the nerve condition (test oracle)."""
    s = cover.surface
    half = cover.eps / 2.0
    out = []
    n = len(cover)
    for i in range(n):
        for j in range(i + 1, n):
            pi, pj = cover.center_point(i), cover.center_point(j)
            if s.embedded and np.linalg.norm(s.xyz(pi) - s.xyz(pj)) > half:
                continue  # the chord already exceeds the threshold
            if s.distance(pi, pj) <= half:
                out.append((i, j))
    return out


def verify_cover(cover: Cover) -> dict:
    """Measured packing and covering radii.

    Covering is checked at every vertex and at a spread sample of face
    centroids.  Separation uses refined geodesic distances between centers
    that are close in the graph metric.
    """
    s = cover.surface
    vertex_cover = float(cover.vertex_min_dist.max())
    centroid_cover = 0.0
    for f in range(0, s.n_faces, max(1, s.n_faces // 400)):
        _, d = cover.nearest_center(SurfacePoint.make(f, (1.0, 1.0, 1.0)))
        centroid_cover = max(centroid_cover, d)
    min_sep = math.inf
    for i, c in enumerate(cover.center_vertices):
        d = s.vertex_distances(c, limit=cover.eps / 6.0 * _GRAPH_SLACK * 1.5)
        for j, cj in enumerate(cover.center_vertices):
            if j != i and np.isfinite(d[cj]):
                min_sep = min(min_sep, cover.segment(i, j).length)
    return {
        "n_centers": len(cover),
        "vertex_cover_radius": vertex_cover,
        "centroid_cover_radius": centroid_cover,
        "min_separation": min_sep,
    }
