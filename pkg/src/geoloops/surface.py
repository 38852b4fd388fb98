"""Intrinsic metric on closed triangle meshes.

Distances and minimizing geodesics are computed in two stages.  A Dijkstra
search on a Steiner graph (mesh vertices plus evenly spaced points on every
edge) finds a corridor of faces; the corridor is then unfolded into the plane
and the exact shortest path inside it is pulled taut with the funnel
algorithm.  Whenever the taut path wraps around a mesh vertex whose other
side is shorter, the corridor is rerouted through that side and the funnel
is rerun.  The result is a straight-line path in every face, a true local
geodesic of the polyhedral metric.
"""

from __future__ import annotations

import heapq
import json
import math
import threading
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

__all__ = [
    "MeshError",
    "InvalidPoint",
    "SurfacePoint",
    "Polyline",
    "Surface",
    "SurfaceInvariants",
    "load_surface",
    "geodesic_distance",
    "minimizing_geodesic",
    "invariants",
]

BARY_TOL = 1e-12
_SNAP = 1e-10
_SOURCE_SLOTS = 128
_GEO_CACHE_SIZE = 200_000


class MeshError(ValueError):
    """The mesh is unreadable or violates a Surface invariant."""


class InvalidPoint(ValueError):
    """Barycentric data does not describe a point of the surface."""


@dataclass(frozen=True)
class SurfacePoint:
    face: int
    bary: tuple[float, float, float]

    def __post_init__(self):
        b = self.bary
        if len(b) != 3 or not all(math.isfinite(x) for x in b):
            raise InvalidPoint(f"bad barycentric coordinates {b!r}")
        if min(b) < -BARY_TOL or max(b) > 1 + BARY_TOL or abs(sum(b) - 1.0) > BARY_TOL:
            raise InvalidPoint(f"barycentric coordinates {b!r} are not a convex combination")

    @classmethod
    def make(cls, face: int, bary) -> "SurfacePoint":
        """Clean up rounding noise (tiny negatives, sums off by an ulp)."""
        b = np.clip(np.asarray(bary, dtype=float), 0.0, None)
        b[b < _SNAP] = 0.0
        total = b.sum()
        if not total > 0:
            raise InvalidPoint(f"degenerate barycentric coordinates {bary!r}")
        b = b / total
        return cls(int(face), (float(b[0]), float(b[1]), float(b[2])))

    def to_json(self) -> dict:
        return {"face": self.face, "bary": list(self.bary)}

    @classmethod
    def from_json(cls, data: dict) -> "SurfacePoint":
        return cls.make(data["face"], data["bary"])


@dataclass(frozen=True, eq=False)
class Polyline:
    """A path made of straight segments, each lying inside one face."""

    faces: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    seg: np.ndarray

    @cached_property
    def cum(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.seg)])

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    @property
    def start(self) -> SurfacePoint:
        return SurfacePoint.make(self.faces[0], self.b0[0])

    @property
    def end(self) -> SurfacePoint:
        return SurfacePoint.make(self.faces[-1], self.b1[-1])

    def locate(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Faces and barycentric coordinates at arc lengths ``s``."""
        s = np.clip(np.atleast_1d(np.asarray(s, dtype=float)), 0.0, self.length)
        i = np.clip(np.searchsorted(self.cum, s, side="right") - 1, 0, len(self.seg) - 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(self.seg[i] > 0, (s - self.cum[i]) / self.seg[i], 0.0)
        u = np.clip(u, 0.0, 1.0)[:, None]
        return self.faces[i], (1 - u) * self.b0[i] + u * self.b1[i]

    def point_at(self, s: float) -> SurfacePoint:
        f, b = self.locate(s)
        return SurfacePoint.make(f[0], b[0])

    def reversed(self) -> "Polyline":
        return Polyline(self.faces[::-1].copy(), self.b1[::-1].copy(), self.b0[::-1].copy(), self.seg[::-1].copy())

    def concat(self, other: "Polyline") -> "Polyline":
        return Polyline(
            np.concatenate([self.faces, other.faces]),
            np.concatenate([self.b0, other.b0]),
            np.concatenate([self.b1, other.b1]),
            np.concatenate([self.seg, other.seg]),
        )

    @classmethod
    def point(cls, p: SurfacePoint) -> "Polyline":
        b = np.asarray([p.bary], dtype=float)
        return cls(np.array([p.face]), b, b.copy(), np.zeros(1))

    @classmethod
    def join(cls, parts) -> "Polyline":
        """Concatenate many polylines in one pass."""
        parts = list(parts)
        if len(parts) == 1:
            return parts[0]
        return cls(
            np.concatenate([x.faces for x in parts]),
            np.concatenate([x.b0 for x in parts]),
            np.concatenate([x.b1 for x in parts]),
            np.concatenate([x.seg for x in parts]),
        )

    def sub(self, s0: float, s1: float) -> "Polyline":
        """The piece between arc lengths ``s0 <= s1`` (a point polyline if they meet)."""
        s0 = min(max(float(s0), 0.0), self.length)
        s1 = min(max(float(s1), s0), self.length)
        if s1 - s0 <= 0.0:
            return Polyline.point(self.point_at(s0))
        cum = self.cum
        i = int(np.clip(np.searchsorted(cum, s0, side="right") - 1, 0, len(self.seg) - 1))
        j = int(np.clip(np.searchsorted(cum, s1, side="left") - 1, i, len(self.seg) - 1))
        faces = self.faces[i : j + 1].copy()
        b0 = self.b0[i : j + 1].copy()
        b1 = self.b1[i : j + 1].copy()
        seg = self.seg[i : j + 1].copy()

        def lerp(k, s):
            u = 0.0 if self.seg[k] <= 0 else min(max((s - cum[k]) / self.seg[k], 0.0), 1.0)
            return (1 - u) * self.b0[k] + u * self.b1[k], u

        start, u0 = lerp(i, s0)
        end, u1 = lerp(j, s1)
        if i == j:
            b0[0], b1[0], seg[0] = start, end, (u1 - u0) * self.seg[i]
        else:
            b0[0], seg[0] = start, (1 - u0) * self.seg[i]
            b1[-1], seg[-1] = end, u1 * self.seg[j]
        return Polyline(faces, b0, b1, seg)


@dataclass(frozen=True)
class SurfaceInvariants:
    diameter_est: float
    area: float
    curv_lower_est: float
    sampled_max: float = 0.0

    def to_json(self) -> dict:
        return {
            "diameter_est": self.diameter_est,
            "area": self.area,
            "curv_lower_est": self.curv_lower_est,
            "sampled_max": self.sampled_max,
        }


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass
class _Strip:
    """Unfolded corridor of faces between two points."""

    faces: list[int]
    coords: list[dict[int, np.ndarray]]
    portals: list[tuple[int, int]]  # (left vertex, right vertex) between face i-1 and i
    start: np.ndarray
    end: np.ndarray


class Surface:
    """A closed, orientable triangulated surface with an intrinsic metric."""

    def __init__(self, vertices, faces, edge_lengths=None, *, tol_geo: float = 0.01, steiner: int = 2, name: str = "mesh"):
        self.name = name
        self.tol_geo = float(tol_geo)
        self.steiner = int(steiner)
        F = np.asarray(faces, dtype=np.int64)
        if F.ndim != 2 or F.shape[1] != 3 or len(F) == 0:
            raise MeshError("faces must be a non-empty list of vertex triples")
        n_vert = int(F.max()) + 1
        V = np.zeros((n_vert, 3)) if vertices is None else np.asarray(vertices, dtype=float).reshape(-1, 3)
        if len(V) < n_vert or F.min() < 0:
            raise MeshError("face refers to a missing vertex")
        if np.any(F[:, 0] == F[:, 1]) or np.any(F[:, 1] == F[:, 2]) or np.any(F[:, 0] == F[:, 2]):
            raise MeshError("degenerate face with a repeated vertex")
        self.V, self.F = V, F
        self.n_vertices, self.n_faces = len(V), len(F)

        he = np.stack([F, np.roll(F, -1, axis=1)], axis=2).reshape(-1, 2)  # face edge j: corner j -> j+1
        if len(np.unique(he, axis=0)) != len(he):
            raise MeshError("mesh is non-orientable or has a repeated directed edge")
        key = np.sort(he, axis=1)
        edges, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        if np.any(counts != 2):
            raise MeshError("mesh is not closed: every edge needs exactly two faces")
        self.edges = edges
        self.face_edges = inv.reshape(-1, 3)
        order = np.argsort(inv, kind="stable")
        self.edge_faces = (order // 3).reshape(-1, 2)
        self.edge_local = (order % 3).reshape(-1, 2)
        self.face_adj = np.empty_like(F)
        for side in (0, 1):
            f, j = self.edge_faces[:, side], self.edge_local[:, side]
            self.face_adj[f, j] = self.edge_faces[:, 1 - side]

        if edge_lengths is None:
            lengths = np.linalg.norm(V[edges[:, 0]] - V[edges[:, 1]], axis=1)
        elif isinstance(edge_lengths, dict):
            lookup = {(min(a, b), max(a, b)): float(x) for (a, b), x in edge_lengths.items()}
            try:
                lengths = np.array([lookup[(int(a), int(b))] for a, b in edges])
            except KeyError as exc:
                raise MeshError(f"edge-length sidecar is missing edge {exc.args[0]}") from None
        else:
            lengths = np.asarray(edge_lengths, dtype=float)
            if lengths.shape != (len(edges),):
                raise MeshError("edge-length array does not match the edge count")
        if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
            raise MeshError("edge lengths must be positive")
        self.edge_len = lengths

        L = lengths[self.face_edges]  # L[:, j] = |corner j, corner j+1|
        a, b, c = L[:, 0], L[:, 1], L[:, 2]
        bad = (a >= b + c) | (b >= a + c) | (c >= a + b)
        if np.any(bad):
            raise MeshError(f"triangle inequality fails in face {int(np.argmax(bad))}")

        n_comp, _ = connected_components(
            csr_matrix((np.ones(len(edges)), (self.edge_faces[:, 0], self.edge_faces[:, 1])), shape=(self.n_faces,) * 2),
            directed=False,
        )
        if n_comp != 1:
            raise MeshError(f"mesh has {n_comp} connected components")

        # planar layout of every face: corner 0 at the origin, corner 1 on +x
        x2 = (a**2 + c**2 - b**2) / (2 * a)
        y2 = np.sqrt(np.maximum(c**2 - x2**2, 0.0))
        self.layout = np.zeros((self.n_faces, 3, 2))
        self.layout[:, 1, 0] = a
        self.layout[:, 2, 0] = x2
        self.layout[:, 2, 1] = y2
        self.face_area = 0.5 * a * y2
        ang = np.empty((self.n_faces, 3))
        for j in range(3):
            opp, s1, s2 = L[:, (j + 1) % 3], L[:, j], L[:, (j + 2) % 3]
            ang[:, j] = np.arccos(np.clip((s1**2 + s2**2 - opp**2) / (2 * s1 * s2), -1.0, 1.0))
        self.angles = ang
        self.angle_sum = np.bincount(F.ravel(), weights=ang.ravel(), minlength=self.n_vertices)
        self._fans = self._build_fans()
        self._lock = threading.Lock()

    # ------------------------------------------------------------------ io
    @classmethod
    def from_file(cls, path, sidecar=None, **kw) -> "Surface":
        return load_surface(path, sidecar, **kw)

    def scaled(self, factor: float) -> "Surface":
        return Surface(self.V * factor, self.F, self.edge_len * factor, tol_geo=self.tol_geo, steiner=self.steiner, name=self.name)

    def with_steiner(self, steiner: int) -> "Surface":
        return Surface(self.V, self.F, self.edge_len, tol_geo=self.tol_geo, steiner=steiner, name=self.name)

    # ------------------------------------------------------------ topology
    def _build_fans(self) -> list[np.ndarray]:
        fans: list[list[int]] = [[] for _ in range(self.n_vertices)]
        seen = np.zeros((self.n_faces, 3), dtype=bool)
        F, adj = self.F, self.face_adj
        for f0 in range(self.n_faces):
            for c0 in range(3):
                if seen[f0, c0]:
                    continue
                v = F[f0, c0]
                f, c = f0, c0
                ring = []
                while True:
                    seen[f, c] = True
                    ring.append(f)
                    g = adj[f, (c + 2) % 3]  # across the edge (prev corner -> v)
                    c = int(np.nonzero(F[g] == v)[0][0])
                    f = g
                    if f == f0:
                        break
                if fans[v]:
                    raise MeshError(f"vertex {v} is not a manifold vertex")
                fans[v] = ring
        return [np.asarray(r, dtype=np.int64) for r in fans]

    def fan(self, v: int) -> np.ndarray:
        return self._fans[v]

    def corner_of(self, f: int, v: int) -> int:
        hit = np.nonzero(self.F[f] == v)[0]
        return int(hit[0]) if len(hit) else -1

    # --------------------------------------------------------------- points
    def vertex_point(self, v: int) -> SurfacePoint:
        f = int(self._fans[v][0])
        b = [0.0, 0.0, 0.0]
        b[self.corner_of(f, v)] = 1.0
        return SurfacePoint(f, tuple(b))

    def canonical(self, p: SurfacePoint) -> SurfacePoint:
        """Unique representation: vertices and edge points use the lowest face index."""
        faces = self.faces_of(p)
        f = min(faces)
        return p if f == p.face else SurfacePoint.make(f, self.bary_in(p, f))

    def same_point(self, p: SurfacePoint, q: SurfacePoint, tol: float = 1e-9) -> bool:
        a, b = self.canonical(p), self.canonical(q)
        if a.face == b.face:
            return max(abs(x - y) for x, y in zip(a.bary, b.bary)) <= tol
        return self.distance(a, b) <= tol * self.mean_edge_length

    def check_point(self, p: SurfacePoint) -> None:
        if not isinstance(p, SurfacePoint) or not 0 <= p.face < self.n_faces:
            raise InvalidPoint(f"{p!r} is not a point of this surface")

    def xyz(self, p: SurfacePoint) -> np.ndarray:
        return np.asarray(p.bary) @ self.V[self.F[p.face]]

    def xyz_many(self, faces, bary) -> np.ndarray:
        return np.einsum("ij,ijk->ik", bary, self.V[self.F[faces]])

    def faces_of(self, p: SurfacePoint) -> list[int]:
        """Faces whose closure contains ``p``."""
        b = p.bary
        nz = [j for j in range(3) if b[j] > _SNAP]
        if len(nz) == 1:
            return [int(f) for f in self._fans[self.F[p.face, nz[0]]]]
        if len(nz) == 2:
            j = ({0, 1, 2} - set(nz)).pop()  # zero coordinate -> opposite edge
            edge_local = (j + 1) % 3
            return [p.face, int(self.face_adj[p.face, edge_local])]
        return [p.face]

    def bary_in(self, p: SurfacePoint, g: int) -> np.ndarray:
        """Barycentric coordinates of ``p`` with respect to face ``g``."""
        if g == p.face:
            return np.asarray(p.bary, dtype=float)
        out = np.zeros(3)
        for j in range(3):
            if p.bary[j] > 0:
                c = self.corner_of(g, self.F[p.face, j])
                if c < 0:
                    raise InvalidPoint(f"point does not lie on face {g}")
                out[c] = p.bary[j]
        return out

    def locate(self, xyz) -> SurfacePoint:
        """Nearest surface point to an ambient position (embedded meshes only)."""
        x = np.asarray(xyz, dtype=float)
        _, cand = self._centroid_tree.query(x, k=min(12, self.n_faces))
        best = None
        for f in np.atleast_1d(cand):
            b, d = _closest_on_triangle(x, *self.V[self.F[f]])
            if best is None or d < best[0] - 1e-15:
                best = (d, int(f), b)
        return SurfacePoint.make(best[1], best[2])

    @cached_property
    def _centroid_tree(self):
        from scipy.spatial import cKDTree

        return cKDTree(self.V[self.F].mean(axis=1))

    @cached_property
    def embedded(self) -> bool:
        """True when the intrinsic lengths are the lengths of the embedded edges."""
        chords = np.linalg.norm(self.V[self.edges[:, 0]] - self.V[self.edges[:, 1]], axis=1)
        return bool(np.allclose(chords, self.edge_len, rtol=1e-9, atol=0.0))

    @cached_property
    def mean_edge_length(self) -> float:
        return float(self.edge_len.mean())

    @cached_property
    def area(self) -> float:
        return float(self.face_area.sum())

    def point2d(self, f: int, bary) -> np.ndarray:
        return np.asarray(bary, dtype=float) @ self.layout[f]

    # --------------------------------------------------------- steiner graph
    @cached_property
    def _graph(self):
        k = self.steiner
        F, nV = self.F, self.n_vertices
        ts = (np.arange(k) + 1.0) / (k + 1.0)
        nodes = [F]
        bary = [np.broadcast_to(np.eye(3), (self.n_faces, 3, 3))]
        for j in range(3):
            e = self.face_edges[:, j]
            forward = F[:, j] == self.edges[e, 0]
            t = np.where(forward[:, None], ts[None, :], 1.0 - ts[None, :])  # weight on corner j+1
            ids = nV + e[:, None] * k + np.where(forward[:, None], np.arange(k)[None, :], np.arange(k)[None, :])
            b = np.zeros((self.n_faces, k, 3))
            b[:, :, j] = 1.0 - t
            b[:, :, (j + 1) % 3] = t
            nodes.append(ids)
            bary.append(b)
        face_nodes = np.concatenate(nodes, axis=1)
        face_bary = np.concatenate(bary, axis=1)
        pts = np.einsum("fnk,fkd->fnd", face_bary, self.layout)
        iu, ju = np.triu_indices(face_nodes.shape[1], 1)
        u, w = face_nodes[:, iu].ravel(), face_nodes[:, ju].ravel()
        d = np.linalg.norm(pts[:, iu] - pts[:, ju], axis=2).ravel()
        pair = np.stack([np.minimum(u, w), np.maximum(u, w)], axis=1)
        pair, first = np.unique(pair, axis=0, return_index=True)
        d = d[first]
        n_nodes = nV + len(self.edges) * k
        src = n_nodes
        rows = np.concatenate([pair[:, 0], pair[:, 1], np.full(_SOURCE_SLOTS, src)])
        cols = np.concatenate([pair[:, 1], pair[:, 0], np.full(_SOURCE_SLOTS, src)])
        data = np.concatenate([d, d, np.ones(_SOURCE_SLOTS)])
        order = np.argsort(rows, kind="stable")
        rows, cols, data = rows[order], cols[order], data[order]
        indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n_nodes + 1))])
        G = csr_matrix((data, cols.astype(np.int32), indptr.astype(np.int32)), shape=(n_nodes + 1,) * 2)
        return {"G": G, "face_nodes": face_nodes, "face_bary": face_bary, "n_nodes": n_nodes, "src": src}

    def _node_faces(self, node: int) -> list[int]:
        if node < self.n_vertices:
            return [int(f) for f in self._fans[node]]
        e = (node - self.n_vertices) // self.steiner
        return [int(f) for f in self.edge_faces[e]]

    def _node_point2d(self, node: int, f: int) -> np.ndarray:
        g = self._graph
        col = np.nonzero(g["face_nodes"][f] == node)[0][0]
        return g["face_bary"][f, col] @ self.layout[f]

    def _attach(self, p: SurfacePoint):
        """Graph nodes around ``p`` with their straight-line distances."""
        g = self._graph
        best: dict[int, float] = {}
        for f in self.faces_of(p):
            xy = self.point2d(f, self.bary_in(p, f))
            pts = g["face_bary"][f] @ self.layout[f]
            dist = np.linalg.norm(pts - xy, axis=1)
            for node, dd in zip(g["face_nodes"][f], dist):
                node = int(node)
                if dd < best.get(node, math.inf):
                    best[node] = float(dd)
        return best

    def _search(self, p: SurfacePoint, limit=None):
        g = self._graph
        G, src = g["G"], g["src"]
        start = self._attach(p)
        if len(start) > _SOURCE_SLOTS:
            raise MeshError("vertex valence too high for the source attachment")
        with self._lock:
            G.data[-_SOURCE_SLOTS:] = 1.0
            G.indices[-_SOURCE_SLOTS:] = src
            nodes = np.fromiter(start.keys(), dtype=np.int32)
            G.data[-_SOURCE_SLOTS : -_SOURCE_SLOTS + len(nodes)] = np.fromiter(start.values(), dtype=float)
            G.indices[-_SOURCE_SLOTS : -_SOURCE_SLOTS + len(nodes)] = nodes
            kw = {} if limit is None else {"limit": float(limit)}
            dist, pred = dijkstra(G, directed=True, indices=src, return_predecessors=True, **kw)
        return dist, pred

    def graph_distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        """Distance in the Steiner graph alone (an upper bound; used as an oracle)."""
        self.check_point(p)
        self.check_point(q)
        if p == q:
            return 0.0
        dist, _ = self._search(p)
        direct = self._same_face_distance(p, q)
        end = self._attach(q)
        return min([direct] + [dist[n] + d for n, d in end.items()])

    def vertex_distances(self, v: int, limit=None) -> np.ndarray:
        """Steiner-graph distances from vertex ``v`` to every vertex."""
        kw = {} if limit is None else {"limit": float(limit)}
        with self._lock:
            d = dijkstra(self._graph["G"], directed=True, indices=v, **kw)
        return d[: self.n_vertices]

    def _same_face_distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        fq = set(self.faces_of(q))
        best = math.inf
        for f in self.faces_of(p):
            if f in fq:
                d = float(np.linalg.norm(self.point2d(f, self.bary_in(p, f)) - self.point2d(f, self.bary_in(q, f))))
                best = min(best, d)
        return best

    # ------------------------------------------------------------- geodesics
    @cached_property
    def _adj_lists(self):
        G = self._graph["G"]
        n = self._graph["n_nodes"]
        return G.indptr[: n + 1].tolist(), G.indices[: G.indptr[n]].tolist(), G.data[: G.indptr[n]].tolist()

    @cached_property
    def _node_xyz(self) -> list | None:
        """3D position of every graph node (embedded meshes only)."""
        if not self.embedded:
            return None
        g = self._graph
        xyz = np.zeros((g["n_nodes"], 3))
        fb = g["face_bary"]
        pos = np.einsum("fnk,fkd->fnd", fb, self.V[self.F])
        xyz[g["face_nodes"].ravel()] = pos.reshape(-1, 3)
        return xyz.tolist()

    def _local_search(self, start: dict, end: dict, budget: int, goal=None):
        """Heap search from the attachment of p until q's nodes are settled.

        With ``goal`` (a 3D point) the chord to it guides the search; the
        chord never exceeds a graph distance, so the result is unchanged.
        Returns (cost, predecessor dict, best end node) or None when the
        search would exceed ``budget`` settled nodes.
        """
        indptr, indices, data = self._adj_lists
        xyz = self._node_xyz if goal is not None else None
        if xyz is not None:
            gx, gy, gz = goal

            def h(n):
                x, y, z = xyz[n]
                return math.sqrt((x - gx) ** 2 + (y - gy) ** 2 + (z - gz) ** 2)
        else:

            def h(n):
                return 0.0

        dist = dict(start)
        pred = {n: -1 for n in start}
        heap = [(d + h(n), d, n) for n, d in start.items()]
        heapq.heapify(heap)
        done = set()
        best, best_node = math.inf, None
        while heap:
            f, d, u = heapq.heappop(heap)
            if u in done:
                continue
            if f >= best:
                return best, pred, best_node
            done.add(u)
            if len(done) > budget:
                return None
            if u in end and d + end[u] < best:
                best, best_node = d + end[u], u
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                nd = d + data[k]
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    pred[v] = u
                    heapq.heappush(heap, (nd + h(v), nd, v))
        return (best, pred, best_node) if best_node is not None else None

    def _corridor(self, p: SurfacePoint, q: SurfacePoint, limit=None, budget: int = 1500) -> list[int] | None:
        end = self._attach(q)
        goal = self.xyz(q).tolist() if self.embedded else None
        local = self._local_search(self._attach(p), end, budget, goal) if budget else None
        if local is not None:
            cost, pred, node = local
            chain = []
            while node != -1:
                chain.append(int(node))
                node = pred[node]
            return self._faces_along(p, q, chain[::-1])
        dist, pred = self._search(p, limit)
        node, cost = min(end.items(), key=lambda kv: dist[kv[0]] + kv[1])
        if not math.isfinite(dist[node] + cost):
            return None
        chain = []
        src = self._graph["src"]
        while node != src and node >= 0:
            chain.append(int(node))
            node = pred[node]
        return self._faces_along(p, q, chain[::-1])

    def _faces_along(self, p: SurfacePoint, q: SurfacePoint, chain: list[int]) -> list[int]:
        sets = [self.faces_of(p)] + [self._node_faces(n) for n in chain] + [self.faces_of(q)]
        faces = []
        cur = None
        for a, b in zip(sets, sets[1:]):
            common = [f for f in a if f in b]
            f = cur if cur in common else common[0]
            faces.append(f)
            cur = f
        return faces

    def _strip(self, faces: list[int], p: SurfacePoint, q: SurfacePoint) -> _Strip:
        faces = self._connect(faces)
        F, adj, FL = self._F_list, self._adj_list, self._face_len_list
        f0 = faces[0]
        coords = [{int(v): (float(self.layout[f0, j, 0]), float(self.layout[f0, j, 1])) for j, v in enumerate(F[f0])}]
        portals = []
        for i in range(1, len(faces)):
            f, g = faces[i - 1], faces[i]
            prev = coords[-1]
            row = adj[f]
            j = 0 if row[0] == g else 1 if row[1] == g else 2
            fv = F[f]
            a, b, w = fv[j], fv[(j + 1) % 3], fv[(j + 2) % 3]
            (ax, ay), (bx, by), (wx, wy) = prev[a], prev[b], prev[w]
            gv = F[g]
            cc = 0 if gv[0] != a and gv[0] != b else 1 if gv[1] != a and gv[1] != b else 2
            c = gv[cc]
            lg = FL[g]
            lab = FL[f][j]
            # in g the edge leaving c goes to gv[cc+1], the edge entering c comes from gv[cc-1]
            if gv[(cc + 1) % 3] == a:
                lac, lbc = lg[cc], lg[(cc + 2) % 3]
            else:
                lac, lbc = lg[(cc + 2) % 3], lg[cc]
            ex, ey = (bx - ax) / lab, (by - ay) / lab
            nx, ny = -ey, ex
            x = (lac * lac - lbc * lbc + lab * lab) / (2 * lab)
            y = math.sqrt(max(lac * lac - x * x, 0.0))
            if (wx - ax) * nx + (wy - ay) * ny > 0:
                y = -y
            coords.append({a: (ax, ay), b: (bx, by), c: (ax + x * ex + y * nx, ay + x * ey + y * ny)})
            # travelling from w across ab: a is on the left when cross(w, mid, a) > 0
            mx, my = (ax + bx) / 2, (ay + by) / 2
            if (mx - wx) * (ay - wy) - (my - wy) * (ax - wx) > 0:
                portals.append((a, b))
            else:
                portals.append((b, a))
        start = self._face_xy(faces[0], p, coords[0])
        end = self._face_xy(faces[-1], q, coords[-1])
        return _Strip(faces, coords, portals, start, end)

    def _face_xy(self, f, p: SurfacePoint, coord) -> np.ndarray:
        b = self.bary_in(p, f)
        pts = [coord[int(self.F[f, j])] for j in range(3)]
        return (sum(b[j] * pts[j][0] for j in range(3)), sum(b[j] * pts[j][1] for j in range(3)))

    @cached_property
    def _F_list(self) -> list:
        return self.F.tolist()

    @cached_property
    def _adj_list(self) -> list:
        return self.face_adj.tolist()

    @cached_property
    def _face_len_list(self) -> list:
        return self.edge_len[self.face_edges].tolist()

    @cached_property
    def _edge_index(self) -> dict:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}

    def _edge_id(self, a: int, b: int) -> int:
        return self._edge_index[(a, b) if a < b else (b, a)]

    def _fan_walk(self, v: int, f: int, g: int, direction: int) -> list[int]:
        fan = self._fans[v]
        i = int(np.nonzero(fan == f)[0][0])
        j = int(np.nonzero(fan == g)[0][0])
        n = len(fan)
        steps = (j - i) % n if direction > 0 else (i - j) % n
        return [int(fan[(i + direction * s) % n]) for s in range(steps + 1)]

    def _connect(self, faces: list[int]) -> list[int]:
        """Make consecutive faces share an edge, walking around shared vertices."""
        adj, F = self._adj_list, self._F_list
        out = [faces[0]]
        for g in faces[1:]:
            f = out[-1]
            if g == f:
                continue
            if g in adj[f]:
                out.append(g)
                continue
            shared = [v for v in F[f] if v in F[g]]
            if not shared:
                raise MeshError(f"faces {f} and {g} are not neighbours")
            v = shared[0]
            fwd, back = self._fan_walk(v, f, g, 1), self._fan_walk(v, f, g, -1)
            out.extend((fwd if len(fwd) <= len(back) else back)[1:])
        # drop immediate back-and-forth pairs f, g, f
        clean: list[int] = []
        for f in out:
            if len(clean) >= 2 and clean[-2] == f:
                clean.pop()
                continue
            if clean and clean[-1] == f:
                continue
            clean.append(f)
        return clean

    def _funnel(self, strip: _Strip):
        """String-pull through the portals; returns (length, apexes).

        Each apex is ``(xy, vertex, portal_index)`` with vertex -1/-2 for the
        two endpoints.
        """
        pts = [(strip.start, strip.start, -1, -1)]
        for i, (lv, rv) in enumerate(strip.portals):
            c = strip.coords[i + 1]
            pts.append((c[lv], c[rv], lv, rv))
        pts.append((strip.end, strip.end, -2, -2))
        apex = left = right = strip.start
        apex_i = left_i = right_i = 0
        apex_v = left_v = right_v = -1
        path = [(strip.start, -1, 0)]
        i, n = 1, len(pts)
        while i < n:
            L, R, lv, rv = pts[i]
            if _cross(apex, right, R) >= 0:
                if (apex_i == right_i and apex_v == right_v) or _cross(apex, left, R) < 0:
                    right, right_i, right_v = R, i, rv
                else:
                    path.append((left, left_v, left_i))
                    apex, apex_i, apex_v = left, left_i, left_v
                    right, right_i, right_v = apex, apex_i, apex_v
                    i = apex_i + 1
                    continue
            if _cross(apex, left, L) <= 0:
                if (apex_i == left_i and apex_v == left_v) or _cross(apex, right, L) > 0:
                    left, left_i, left_v = L, i, lv
                else:
                    path.append((right, right_v, right_i))
                    apex, apex_i, apex_v = right, right_i, right_v
                    left, left_i, left_v = apex, apex_i, apex_v
                    i = apex_i + 1
                    continue
            i += 1
        path.append((strip.end, -2, n - 1))
        length = 0.0
        for (P, _, _), (Q, _, _) in zip(path, path[1:]):
            length += math.hypot(Q[0] - P[0], Q[1] - P[1])
        return length, path

    def _trace(self, strip: _Strip, path) -> Polyline:
        """Turn funnel apexes into per-face straight segments."""
        faces = strip.faces
        cross = []
        seg_idx = 0
        for k in range(1, len(faces)):
            while path[seg_idx + 1][2] < k:
                seg_idx += 1
            (P, pv, pi), (Q, qv, qi) = path[seg_idx], path[seg_idx + 1]
            lv, rv = strip.portals[k - 1]
            c = strip.coords[k]
            if pi == k and pv >= 0:
                cross.append(c[pv])
                continue
            if qi == k and qv >= 0:
                cross.append(c[qv])
                continue
            A, B = c[lv], c[rv]
            dx, dy = Q[0] - P[0], Q[1] - P[1]
            ex, ey = B[0] - A[0], B[1] - A[1]
            den = dx * ey - dy * ex
            t = 0.5 if abs(den) < 1e-300 else ((A[0] - P[0]) * dy - (A[1] - P[1]) * dx) / den
            t = min(max(t, 0.0), 1.0)
            cross.append((A[0] + t * ex, A[1] + t * ey))
        points = [strip.start] + cross + [strip.end]
        m = len(faces)
        b0s, b1s, seg = np.empty((m, 3)), np.empty((m, 3)), np.empty(m)
        for k, f in enumerate(faces):
            c = strip.coords[k]
            tri = [c[int(v)] for v in self.F[f]]
            P, Q = points[k], points[k + 1]
            b0s[k] = _bary2d(P, tri)
            b1s[k] = _bary2d(Q, tri)
            seg[k] = math.hypot(Q[0] - P[0], Q[1] - P[1])
        return Polyline(np.asarray(faces, dtype=np.int64), b0s, b1s, seg)

    def _escape(self, faces: list[int], p: SurfacePoint, q: SurfacePoint, max_rounds: int = 500) -> tuple[float, Polyline]:
        """Funnel, then reroute around pinned vertices while that shortens the path."""
        strip = self._strip(faces, p, q)
        length, path = self._funnel(strip)
        for _ in range(max_rounds):
            pinned = [(v, k) for (_, v, k) in path[1:-1] if v >= 0]
            if not pinned:
                break
            # try all reroutes at once (back to front so indices stay valid)
            cand_faces = strip.faces
            for v, k in sorted(pinned, key=lambda x: -x[1]):
                alt = self._reroute(cand_faces, v, k)
                if alt is not None:
                    cand_faces = alt
            improved = False
            if cand_faces is not strip.faces:
                cs = self._strip(cand_faces, p, q)
                cl, cp = self._funnel(cs)
                if cl < length * (1 - 1e-12):
                    strip, length, path, improved = cs, cl, cp, True
            if not improved:
                for v, k in pinned:
                    alt = self._reroute(strip.faces, v, k)
                    if alt is None:
                        continue
                    cs = self._strip(alt, p, q)
                    cl, cp = self._funnel(cs)
                    if cl < length * (1 - 1e-12):
                        strip, length, path, improved = cs, cl, cp, True
                        break
            if not improved:
                break
        return length, self._trace(strip, path)

    def _reroute(self, faces: list[int], v: int, k: int) -> list[int] | None:
        """Send the corridor around the other side of vertex ``v``."""
        if v < 0:
            return None
        a = min(max(k - 1, 0), len(faces) - 1)
        b = a
        if v not in self.F[faces[a]]:
            return None
        while a > 0 and v in self.F[faces[a - 1]]:
            a -= 1
        while b < len(faces) - 1 and v in self.F[faces[b + 1]]:
            b += 1
        run = faces[a : b + 1]
        fan = self._fans[v]
        if len(run) > len(fan):
            return None
        f, g = run[0], run[-1]
        fwd, back = self._fan_walk(v, f, g, 1), self._fan_walk(v, f, g, -1)
        if run == fwd:
            other = back
        elif run == back:
            other = fwd
        else:
            other = back if len(fwd) <= len(back) else fwd
        if f == g:
            # corridor touches v inside a single face: go all the way around
            other = [int(x) for x in np.roll(fan, -int(np.nonzero(fan == f)[0][0]))] + [f]
            if len(run) > 1:
                return None
        return faces[:a] + other + faces[b + 1 :]

    def geodesic(self, p: SurfacePoint, q: SurfacePoint, limit=None) -> Polyline:
        self.check_point(p)
        self.check_point(q)
        if p == q:
            return Polyline.point(p)
        shared = [f for f in self.faces_of(p) if f in self.faces_of(q)]
        if shared:
            f = shared[0]
            b0, b1 = self.bary_in(p, f), self.bary_in(q, f)
            d = float(np.linalg.norm(self.point2d(f, b0) - self.point2d(f, b1)))
            return Polyline(np.array([f]), b0[None, :], b1[None, :], np.array([d]))
        cached = self._geo_cache.get((p, q))
        if cached is not None:
            return cached
        rev = self._geo_cache.get((q, p))
        if rev is not None:
            return rev.reversed()
        if limit is None and self.embedded:
            # the chord is a lower bound; a generous multiple keeps short queries local
            limit = 2.0 * float(np.linalg.norm(self.xyz(p) - self.xyz(q))) + 4.0 * self.mean_edge_length
        faces = self._corridor(p, q, limit)
        if faces is None:
            faces = self._corridor(p, q, None)
        return self._remember(p, q, self._escape(self._trim(faces, p, q), p, q)[1])

    def _trim(self, faces: list[int], p: SurfacePoint, q: SurfacePoint) -> list[int]:
        """Drop corridor faces before the last one touching p and after the first one touching q.

        A shortest path never re-enters the star of its endpoints, and a
        corridor that wanders around a vertex endpoint pins the funnel there.
        """
        fp, fq = set(self.faces_of(p)), set(self.faces_of(q))
        i = max(k for k, f in enumerate(faces) if f in fp)
        j = min((k for k in range(i, len(faces)) if faces[k] in fq), default=len(faces) - 1)
        return faces[i : j + 1]

    def _remember(self, p: SurfacePoint, q: SurfacePoint, poly: Polyline) -> Polyline:
        cache = self._geo_cache
        if len(cache) >= _GEO_CACHE_SIZE:
            cache.clear()
        cache[(p, q)] = poly
        return poly

    @cached_property
    def _geo_cache(self) -> dict:
        return {}

    def geodesics_from(self, p: SurfacePoint, targets) -> list[Polyline]:
        """Minimizing geodesics from ``p`` to each target, sharing one graph search."""
        self.check_point(p)
        targets = list(targets)
        out: list[Polyline | None] = [None] * len(targets)
        todo = []
        for k, q in enumerate(targets):
            self.check_point(q)
            hit = self._geo_cache.get((p, q))
            if hit is None and (q, p) in self._geo_cache:
                hit = self._geo_cache[(q, p)].reversed()
            if hit is None and (q == p or any(f in self.faces_of(q) for f in self.faces_of(p))):
                hit = self.geodesic(p, q)
            if hit is None:
                todo.append(k)
            else:
                out[k] = hit
        if todo:
            dist, pred = self._search(p)
            src = self._graph["src"]
            done: dict = {}
            for k in todo:
                q = targets[k]
                if q in done:
                    out[k] = done[q]
                    continue
                end = self._attach(q)
                node = min(end, key=lambda n: dist[n] + end[n])
                chain = []
                while node != src and node >= 0:
                    chain.append(int(node))
                    node = pred[node]
                faces = self._faces_along(p, q, chain[::-1])
                out[k] = done[q] = self._remember(p, q, self._escape(self._trim(faces, p, q), p, q)[1])
        return out

    def distance(self, p: SurfacePoint, q: SurfacePoint, limit=None) -> float:
        if p == q:
            return 0.0
        return self.geodesic(p, q, limit).length

    def _carry(self, f: int, j: int, y, d):
        """Move a position and direction in face ``f``'s layout across its edge ``j``."""
        lay = self.layout
        g = int(self.face_adj[f, j])
        u, v = int(self.F[f, j]), int(self.F[f, (j + 1) % 3])
        tri = lay[f]
        A, B = tri[j], tri[(j + 1) % 3]
        ga, gb = lay[g][self.corner_of(g, u)], lay[g][self.corner_of(g, v)]
        e, eg = B - A, gb - ga
        c = (e[0] * eg[0] + e[1] * eg[1]) / (e @ e)
        s_ = (e[0] * eg[1] - e[1] * eg[0]) / (e @ e)
        rot = np.array([[c, -s_], [s_, c]])
        rot /= math.sqrt(abs(np.linalg.det(rot)))
        d = rot @ d
        return g, ga + rot @ (np.asarray(y) - A), d / np.linalg.norm(d)

    def shoot(self, p: SurfacePoint, angle: float, length: float) -> Polyline:
        """Walk straight from ``p`` for ``length``; the exponential map of the mesh.

        ``angle`` is measured in the planar layout of ``p.face`` (corner 0 at
        the origin, corner 1 on the positive x axis).  Walks that hit a vertex
        exactly continue into one of the faces beyond it.
        """
        self.check_point(p)
        if not length > 0:
            return Polyline.point(p)
        lay = self.layout
        f = p.face
        x = np.asarray(p.bary) @ lay[f]
        d = np.array([math.cos(angle), math.sin(angle)])
        probe_step = 1e-7 * self.mean_edge_length
        turns = 4 * max(len(fan) for fan in self._fans)
        left = float(length)
        faces, b0s, b1s, segs = [], [], [], []
        for _ in range(100 * self.n_faces):
            # on an edge or vertex the ray may point out of f: turn into the face it enters
            for _ in range(turns):
                probe = _bary2d_raw(x + probe_step * d, lay[f])
                k = int(np.argmin(probe))
                if probe[k] >= -1e-12:
                    break
                f, x, d = self._carry(f, (k + 1) % 3, x, d)
            tri = lay[f]
            best_t, best_j = math.inf, -1
            for j in range(3):
                A, B = tri[j], tri[(j + 1) % 3]
                e = B - A
                den = d[0] * e[1] - d[1] * e[0]
                if abs(den) < 1e-300:
                    continue
                w = A - x
                t = (w[0] * e[1] - w[1] * e[0]) / den
                u = (w[0] * d[1] - w[1] * d[0]) / den
                if t > 1e-12 and -1e-9 <= u <= 1 + 1e-9 and t < best_t:
                    best_t, best_j = t, j
            if best_j < 0 or best_t >= left:
                y = x + left * d
                faces.append(f)
                b0s.append(_bary2d(x, tri))
                b1s.append(_bary2d(y, tri))
                segs.append(left)
                break
            y = x + best_t * d
            faces.append(f)
            b0s.append(_bary2d(x, tri))
            b1s.append(_bary2d(y, tri))
            segs.append(best_t)
            left -= best_t
            f, x, d = self._carry(f, best_j, y, d)
        return Polyline(np.asarray(faces, dtype=np.int64), np.asarray(b0s), np.asarray(b1s), np.asarray(segs, dtype=float))

    def straighten(self, poly: Polyline) -> Polyline:
        """Shortest path in the corridor of ``poly`` (endpoints fixed), with vertex escapes."""
        p, q = poly.start, poly.end
        if len(poly.faces) == 0 or poly.length == 0.0:
            return poly
        faces = [int(f) for f in poly.faces]
        length, out = self._escape(faces, p, q)
        return out if length <= poly.length else poly


def _bary2d_raw(P, tri) -> tuple[float, float, float]:
    """Barycentric coordinates without clamping (negative outside the triangle)."""
    (ax, ay), (bx, by), (cx, cy) = tri
    v0x, v0y, v1x, v1y = bx - ax, by - ay, cx - ax, cy - ay
    v2x, v2y = P[0] - ax, P[1] - ay
    den = v0x * v1y - v1x * v0y
    l1 = (v2x * v1y - v1x * v2y) / den
    l2 = (v0x * v2y - v2x * v0y) / den
    return (1.0 - l1 - l2, l1, l2)


def _bary2d(P, tri) -> tuple[float, float, float]:
    (ax, ay), (bx, by), (cx, cy) = tri
    v0x, v0y, v1x, v1y = bx - ax, by - ay, cx - ax, cy - ay
    v2x, v2y = P[0] - ax, P[1] - ay
    den = v0x * v1y - v1x * v0y
    l1 = (v2x * v1y - v1x * v2y) / den
    l2 = (v0x * v2y - v2x * v0y) / den
    b = [1.0 - l1 - l2, l1, l2]
    b = [x if x > _SNAP else 0.0 for x in b]
    t = b[0] + b[1] + b[2]
    return (b[0] / t, b[1] / t, b[2] / t)


def _closest_on_triangle(p, a, b, c):
    """Closest point on a 3D triangle; returns (barycentric, distance)."""
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        bary = (1.0, 0.0, 0.0)
    else:
        bp = p - b
        d3, d4 = ab @ bp, ac @ bp
        cp = p - c
        d5, d6 = ab @ cp, ac @ cp
        vc = d1 * d4 - d3 * d2
        vb = d5 * d2 - d1 * d6
        va = d3 * d6 - d5 * d4
        if d3 >= 0 and d4 <= d3:
            bary = (0.0, 1.0, 0.0)
        elif d6 >= 0 and d5 <= d6:
            bary = (0.0, 0.0, 1.0)
        elif vc <= 0 and d1 >= 0 and d3 <= 0:
            t = d1 / (d1 - d3)
            bary = (1 - t, t, 0.0)
        elif vb <= 0 and d2 >= 0 and d6 <= 0:
            t = d2 / (d2 - d6)
            bary = (1 - t, 0.0, t)
        elif va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
            t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
            bary = (0.0, 1 - t, t)
        else:
            den = 1.0 / (va + vb + vc)
            bary = (va * den, vb * den, vc * den)
    x = bary[0] * a + bary[1] * b + bary[2] * c
    return np.asarray(bary), float(np.linalg.norm(p - x))


# ---------------------------------------------------------------- io helpers
def _read_off(path: Path):
    tokens = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError(f"{path}: not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos : pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    faces = []
    for _ in range(nf):
        k = int(tokens[pos])
        if k != 3:
            raise MeshError(f"{path}: only triangle faces are supported")
        faces.append([int(x) for x in tokens[pos + 1 : pos + 4]])
        pos += 1 + k
    return verts, np.array(faces)


def _read_obj(path: Path):
    verts, faces = [], []
    for line in path.read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(x.split("/")[0]) for x in parts[1:]]
            if len(idx) != 3:
                raise MeshError(f"{path}: only triangle faces are supported")
            faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    return np.array(verts), np.array(faces)


def write_off(path, vertices, faces) -> None:
    lines = ["OFF", f"{len(vertices)} {len(faces)} 0"]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in faces]
    Path(path).write_text("\n".join(lines) + "\n")


def load_surface(path, sidecar=None, **kw) -> Surface:
    """Read an OFF or OBJ triangle mesh, with an optional edge-length sidecar.

    If ``sidecar`` is None and ``<mesh>.json`` exists next to the mesh it is
    used.  The sidecar holds ``{"edge_lengths": [[i, j, length], ...]}``.
    """
    path = Path(path)
    if not path.is_file():
        raise MeshError(f"mesh file not found: {path}")
    try:
        if path.suffix.lower() == ".off":
            verts, faces = _read_off(path)
        elif path.suffix.lower() == ".obj":
            verts, faces = _read_obj(path)
        else:
            raise MeshError(f"{path}: unsupported mesh format (use .off or .obj)")
    except (ValueError, IndexError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"{path}: malformed mesh ({exc})") from None
    side = Path(sidecar) if sidecar else path.with_suffix(".json")
    lengths = None
    if side.is_file():
        try:
            data = json.loads(side.read_text())
            lengths = {(int(i), int(j)): float(x) for i, j, x in data["edge_lengths"]}
        except (ValueError, KeyError, TypeError) as exc:
            raise MeshError(f"{side}: malformed edge-length sidecar ({exc})") from None
    elif sidecar:
        raise MeshError(f"sidecar file not found: {side}")
    kw.setdefault("name", path.stem)
    return Surface(verts, faces, lengths, **kw)


# ----------------------------------------------------------- module-level API
def geodesic_distance(s: Surface, p: SurfacePoint, q: SurfacePoint) -> float:
    s.check_point(p)
    s.check_point(q)
    return s.distance(p, q)


def minimizing_geodesic(s: Surface, p: SurfacePoint, q: SurfacePoint):
    """Minimizing geodesic from ``p`` to ``q`` as a constant-speed Curve."""
    from .loopspace import Curve

    return Curve.from_polylines(s, [s.geodesic(p, q)], closed=False)


def invariants(s: Surface, sample_count: int = 32, seed: int = 0) -> SurfaceInvariants:
    """Diameter estimate, total area and the angle-defect curvature minimum."""
    if sample_count < 2:
        raise ValueError("sample_count must be at least 2")
    rng = np.random.default_rng(seed)
    # farthest-point sweeps on the graph metric pick candidate diametral pairs
    pairs = []
    v = 0
    for _ in range(4):
        d = s.vertex_distances(v)
        w = int(np.argmax(d))
        pairs.append((v, w))
        v = w
    verts = rng.choice(s.n_vertices, size=(sample_count, 2))
    pairs += [(int(a), int(b)) for a, b in verts if a != b]
    sampled = 0.0
    for a, b in pairs:
        sampled = max(sampled, s.distance(s.vertex_point(a), s.vertex_point(b)))
    incident = np.bincount(s.F.ravel(), weights=np.repeat(s.face_area, 3), minlength=s.n_vertices)
    curv = (2 * math.pi - s.angle_sum) / (incident / 3.0)
    return SurfaceInvariants(diameter_est=sampled, area=s.area, curv_lower_est=float(curv.min()), sampled_max=sampled)
