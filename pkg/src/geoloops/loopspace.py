"""Curves on a surface, the sup metric, and the loop-space net.

A :class:`Curve` is a chain of geodesic polylines between breakpoints.  By
default it is parameterized at constant speed over ``[0, 1]``; net elements
instead carry *knots*, so that their ``i``-th breakpoint sits at the same
parameter as the ``i``-th subdivision point of the curve they approximate.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .cover import Cover
from .surface import Polyline, Surface, SurfacePoint

__all__ = [
    "KindMismatch",
    "CurveTooLong",
    "Curve",
    "sup_distance",
    "NetElement",
    "Net",
    "project_to_net",
    "net_size_observed",
    "canonical_rotation",
]


class KindMismatch(ValueError):
    """Closed and open curves were compared."""


class CurveTooLong(ValueError):
    """A curve longer than the net's length bound was projected."""


class Curve:
    """Piecewise-geodesic curve with cached length."""

    def __init__(self, surface: Surface, breakpoints, segments, closed: bool, knots=None):
        self.surface = surface
        self.breakpoints = list(breakpoints)
        self.segments = list(segments)
        self.closed = bool(closed)
        if not self.segments:
            raise ValueError("a curve needs at least one segment")
        if knots is not None:
            knots = np.asarray(knots, dtype=float)
            if len(knots) != len(self.segments) + 1 or knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) < 0):
                raise ValueError("knots must rise from 0 to 1, one more than the segment count")
        self.knots = knots

    # construction ------------------------------------------------------
    @classmethod
    def from_breakpoints(cls, s: Surface, points, closed: bool = False, knots=None) -> "Curve":
        pts = list(points)
        pairs = list(zip(pts, pts[1:])) + ([(pts[-1], pts[0])] if closed else [])
        if not pairs:
            pairs = [(pts[0], pts[0])]
        segs = [s.geodesic(a, b) for a, b in pairs]
        return cls(s, pts, segs, closed, knots)

    @classmethod
    def from_polylines(cls, s: Surface, polys, closed: bool = False) -> "Curve":
        polys = list(polys)
        pts = [p.start for p in polys] + ([] if closed else [polys[-1].end])
        return cls(s, pts, polys, closed)

    @classmethod
    def point(cls, s: Surface, p: SurfacePoint, closed: bool = True) -> "Curve":
        return cls(s, [p] if closed else [p, p], [Polyline.point(p)], closed)

    # geometry ----------------------------------------------------------
    @cached_property
    def seg_lengths(self) -> np.ndarray:
        return np.array([p.length for p in self.segments])

    @property
    def length(self) -> float:
        return float(self.seg_lengths.sum())

    @cached_property
    def poly(self) -> Polyline:
        return Polyline.join(self.segments)

    @property
    def start(self) -> SurfacePoint:
        return self.segments[0].start

    @property
    def end(self) -> SurfacePoint:
        return self.segments[-1].end

    def is_point(self, tol: float = 1e-12) -> bool:
        return self.length <= tol

    def _arclength(self, t) -> np.ndarray:
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        if self.knots is None:
            return t * self.length
        cum = np.concatenate([[0.0], np.cumsum(self.seg_lengths)])
        k = self.knots
        i = np.clip(np.searchsorted(k, t, side="right") - 1, 0, len(self.segments) - 1)
        width = k[i + 1] - k[i]
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(width > 0, (t - k[i]) / width, 1.0)
        return cum[i] + np.clip(u, 0.0, 1.0) * self.seg_lengths[i]

    def piece(self, t0: float, t1: float) -> Polyline:
        """The polyline traced between parameters ``t0 <= t1``."""
        s0, s1 = self._arclength([t0, t1])
        return self.poly.sub(s0, s1)

    def eval_many(self, ts) -> tuple[np.ndarray, np.ndarray]:
        return self.poly.locate(self._arclength(np.atleast_1d(ts)))

    def eval(self, t: float) -> SurfacePoint:
        f, b = self.eval_many([t])
        return SurfacePoint.make(f[0], b[0])

    def points(self, ts) -> list[SurfacePoint]:
        f, b = self.eval_many(ts)
        return [SurfacePoint.make(fi, bi) for fi, bi in zip(f, b)]

    def xyz(self, n: int = 128) -> np.ndarray:
        f, b = self.eval_many(np.linspace(0.0, 1.0, n))
        return self.surface.xyz_many(f, b)

    # algebra -----------------------------------------------------------
    def reversed(self) -> "Curve":
        knots = None if self.knots is None else (1.0 - self.knots[::-1])
        bps = list(reversed(self.breakpoints))
        if self.closed:
            bps = [bps[-1]] + bps[:-1]
        return Curve(self.surface, bps, [p.reversed() for p in reversed(self.segments)], self.closed, knots)

    def then(self, other: "Curve", closed: bool | None = None) -> "Curve":
        """Concatenation ``self * other`` at constant speed."""
        bps = self.breakpoints[:-1] + other.breakpoints if not self.closed else self.breakpoints + other.breakpoints
        return Curve(self.surface, bps, self.segments + other.segments, self.closed if closed is None else closed)

    def as_closed(self) -> "Curve":
        """View a loop (start == end) as a closed curve."""
        return Curve(self.surface, self.breakpoints[:-1] or self.breakpoints, self.segments, True, self.knots)

    def as_open(self) -> "Curve":
        bps = self.breakpoints + [self.breakpoints[0]] if self.closed else self.breakpoints
        return Curve(self.surface, bps, self.segments, False, self.knots)

    def constant_speed(self) -> "Curve":
        return Curve(self.surface, self.breakpoints, self.segments, self.closed)

    def subdivided(self, pieces: int) -> "Curve":
        """Same image, with breakpoints at ``pieces`` equal parameter steps."""
        ts = np.linspace(0.0, 1.0, pieces + 1)
        pts = self.points(ts[:-1] if self.closed else ts)
        return Curve.from_breakpoints(self.surface, pts, self.closed)

    def to_json(self) -> dict:
        data = {
            "closed": self.closed,
            "length": self.length,
            "breakpoints": [p.to_json() for p in self.breakpoints],
        }
        if self.knots is not None:
            data["knots"] = [float(x) for x in self.knots]
        return data

    @classmethod
    def from_json(cls, s: Surface, data: dict) -> "Curve":
        pts = [SurfacePoint.from_json(p) for p in data["breakpoints"]]
        return cls.from_breakpoints(s, pts, bool(data.get("closed", False)), data.get("knots"))

    def __repr__(self) -> str:
        kind = "closed" if self.closed else "open"
        return f"Curve({kind}, length={self.length:.6g}, segments={len(self.segments)})"


def pointwise_distances(alpha: Curve, gamma: Curve, ts) -> np.ndarray:
    s = alpha.surface
    pa, pg = alpha.points(ts), gamma.points(ts)
    return np.array([s.distance(a, b) for a, b in zip(pa, pg)])


def sup_distance(alpha: Curve, gamma: Curve, samples: int = 64) -> float:
    """Largest pointwise distance at matched parameters (sampled)."""
    if alpha.closed != gamma.closed:
        raise KindMismatch("sup_distance needs two closed or two open curves")
    if samples < 16:
        raise ValueError("samples must be at least 16")
    return float(pointwise_distances(alpha, gamma, np.linspace(0.0, 1.0, samples + 1)).max())


def canonical_rotation(seq) -> tuple[int, tuple]:
    """Offset and value of the lexicographically smallest rotation."""
    seq = tuple(seq)
    n = len(seq)
    best = min(range(n), key=lambda r: seq[r:] + seq[:r])
    return best, seq[best:] + seq[:best]


@dataclass(eq=False)
class NetElement:
    key: tuple
    center_indices: tuple
    curve: Curve

    @property
    def segment_count(self) -> int:
        return len(self.center_indices)


@dataclass(eq=False)
class Net:
    cover: Cover
    L: float
    elements: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def eps(self) -> float:
        return self.cover.eps

    def element_curve(self, seq) -> Curve:
        """Broken geodesic through the centers ``seq`` with uniform knots."""
        seq = list(seq)
        segs = [self.cover.segment(a, b) for a, b in zip(seq, seq[1:] + seq[:1])]
        pts = [self.cover.center_point(i) for i in seq]
        knots = np.linspace(0.0, 1.0, len(seq) + 1)
        return Curve(self.cover.surface, pts, segs, True, knots)

    def insert(self, seq) -> NetElement:
        offset, key = canonical_rotation(seq)
        with self._lock:
            elem = self.elements.get(key)
            if elem is None:
                elem = NetElement(key, key, self.element_curve(key))
                self.elements[key] = elem
        return elem


def project_to_net(gamma: Curve, net: Net) -> NetElement:
    """Snap a closed curve to the net.

    The curve is cut into ``ceil(6 * length / eps)`` pieces of equal
    parameter length; each cut point moves to its nearest cover center and
    consecutive centers are joined by minimizing geodesics.  The canonical
    element is stored in the net; the returned element shares its key but
    keeps gamma's starting phase, so it can be compared with gamma directly.
    """
    if not gamma.closed:
        raise ValueError("project_to_net needs a closed curve")
    if gamma.length > net.L * (1 + 1e-12):
        raise CurveTooLong(f"curve length {gamma.length:.6g} exceeds the net bound L={net.L:.6g}")
    seq = _center_sequence(gamma, net.cover)
    if seq is None:
        k = max(1, math.ceil(6.0 * gamma.length / net.eps))
        ts = np.arange(k) / k
        seq = tuple(net.cover.nearest_center(x)[0] for x in gamma.points(ts))
    stored = net.insert(seq)
    return NetElement(stored.key, seq, net.element_curve(seq))


def _center_sequence(gamma: Curve, cover: Cover):
    """Centers visited by a curve that is already a broken geodesic through centers."""
    if gamma.knots is None:
        return None
    s = cover.surface
    lookup = {v: i for i, v in enumerate(cover.center_vertices)}
    seq = []
    for p in gamma.breakpoints:
        q = s.canonical(p)
        hot = [j for j in range(3) if q.bary[j] == 1.0]
        if not hot or int(s.F[q.face, hot[0]]) not in lookup:
            return None
        seq.append(lookup[int(s.F[q.face, hot[0]])])
    return tuple(seq)


def net_size_observed(net: Net) -> int:
    return len(net.elements)
