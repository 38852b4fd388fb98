"""Homotopies of curves as discrete level grids, and the constructions on them.

A :class:`Homotopy` is a list of curves (levels) indexed by a discrete time
``tau``.  Its width is the length of the longest trajectory ``tau -> H(t, tau)``
over a grid of ``t`` samples, measured with geodesic distances between
consecutive levels.

The constructions follow the shortening pipeline for loops (close-curve
homotopies, projection to a loop-space net, length reduction, conversion to
based loops) and for paths (digon filling, short families of paths, interval
extension).  Every construction works with constants measured on the mesh at
hand (see :func:`calibrate`), never with the theoretical ones.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .cover import build_cover
from .loopspace import Curve, KindMismatch, Net, project_to_net, sup_distance
from .surface import Polyline, Surface, SurfacePoint, invariants

__all__ = [
    "ConeFailure",
    "CurvesNotClose",
    "NotAContraction",
    "EndpointMismatch",
    "JumpDetectionFailure",
    "VariationTooLarge",
    "KINDS",
    "Homotopy",
    "BallContraction",
    "Calibration",
    "calibrate",
    "geodesic_circle",
    "contract_in_ball",
    "homotope_close_curves",
    "shorten_levels",
    "free_to_based",
    "contract_via_net",
    "contract_based_short",
    "path_homotopy",
    "digon_loop",
    "raw_contraction",
    "PathFamily",
    "short_path_family",
    "merged_schedule",
    "IntervalExtension",
    "extend_to_interval",
]

KINDS = ("free-closed", "based-loop", "fixed-endpoints")


class ConeFailure(ArithmeticError):
    """Geodesics to the cone point jump: the ball is too large to cone."""


class CurvesNotClose(ValueError):
    """Two curves are farther apart than the close-curve construction allows."""


class NotAContraction(ValueError):
    """The last level of a homotopy is not a point curve."""


class EndpointMismatch(ValueError):
    """Paths that should share endpoints do not."""


class JumpDetectionFailure(ArithmeticError):
    """Cut-locus jumps could not be told apart from discretization noise."""


class VariationTooLarge(ValueError):
    """A family moves more than the allowed amount between samples."""


def _polys_to_curve(s: Surface, polys, closed: bool, knots=None) -> Curve:
    polys = list(polys)
    pts = [p.start for p in polys] + ([] if closed else [polys[-1].end])
    return Curve(s, pts, polys, closed, knots)


def _breakpoint_params(c: Curve) -> np.ndarray:
    if c.knots is not None:
        return np.asarray(c.knots, dtype=float)
    if c.length <= 0:
        return np.array([0.0, 1.0])
    return np.concatenate([[0.0], np.cumsum(c.seg_lengths)]) / c.length


def _merge_params(*grids, min_gap: float = 1e-9) -> np.ndarray:
    ts = np.unique(np.clip(np.concatenate(grids), 0.0, 1.0))
    keep = [0]
    for i in range(1, len(ts)):
        if ts[i] - ts[keep[-1]] > min_gap:
            keep.append(i)
    ts = ts[keep]
    ts[0], ts[-1] = 0.0, 1.0
    return ts


def _points_snapped(c: Curve, ts) -> list[SurfacePoint]:
    """Points at parameters ``ts``; parameters on a breakpoint return that breakpoint itself.

    Curves that repeat breakpoints (several windings of one loop) then
    produce identical points, which keeps geodesic caches effective.
    """
    ts = np.asarray(ts, dtype=float)
    pts = c.points(ts)
    bp = _breakpoint_params(c)
    idx = np.clip(np.searchsorted(bp, ts), 0, len(bp) - 1)
    for k, t in enumerate(ts):
        for i in (idx[k] - 1, idx[k]):
            if 0 <= i < len(bp) and abs(bp[i] - t) <= 1e-12:
                pts[k] = c.breakpoints[i] if i < len(c.breakpoints) else c.breakpoints[0]
                break
    return pts


def _points(faces, bary) -> list[SurfacePoint]:
    return [SurfacePoint.make(f, b) for f, b in zip(faces, bary)]


@dataclass(eq=False)
class Homotopy:
    """A discrete homotopy: ``levels[k]`` is the curve at time ``k / (len - 1)``."""

    levels: list
    kind: str
    t_samples: int = 64
    continuity_budget: float = math.inf
    meta: dict = field(default_factory=dict)
    _widths: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.levels:
            raise ValueError("a homotopy needs at least one level")
        closed = self.kind != "fixed-endpoints"
        if any(c.closed != closed for c in self.levels):
            raise KindMismatch(f"{self.kind} homotopies need {'closed' if closed else 'open'} levels")

    @property
    def surface(self) -> Surface:
        return self.levels[0].surface

    @property
    def first(self) -> Curve:
        return self.levels[0]

    @property
    def last(self) -> Curve:
        return self.levels[-1]

    def __len__(self) -> int:
        return len(self.levels)

    def level_lengths(self) -> np.ndarray:
        return np.array([c.length for c in self.levels])

    @property
    def max_length(self) -> float:
        return float(self.level_lengths().max())

    def width(self, t_samples: int | None = None) -> float:
        """Longest trajectory ``tau -> H(t, tau)`` over ``t_samples + 1`` values of t."""
        T = int(t_samples or self.t_samples)
        if len(self.levels) < 2:
            raise ValueError("width needs at least two levels")
        if T not in self._widths:
            self._widths[T] = float(self.trajectory_lengths(T).max())
        return self._widths[T]

    def trajectory_lengths(self, t_samples: int | None = None) -> np.ndarray:
        T = int(t_samples or self.t_samples)
        s = self.surface
        ts = np.linspace(0.0, 1.0, T + 1)
        total = np.zeros(T + 1)
        pf, pb = self.levels[0].eval_many(ts)
        for c in self.levels[1:]:
            cf, cb = c.eval_many(ts)
            moved = (pf != cf) | np.any(np.abs(pb - cb) > 1e-15, axis=1)
            for i in np.nonzero(moved)[0]:
                total[i] += s.distance(SurfacePoint.make(pf[i], pb[i]), SurfacePoint.make(cf[i], cb[i]))
            pf, pb = cf, cb
        return total

    def trajectory(self, t: float) -> Polyline:
        """The path swept by parameter ``t``, joined level to level by geodesics."""
        s = self.surface
        pts = [c.eval(t) for c in self.levels]
        return Polyline.join([s.geodesic(a, b) for a, b in zip(pts, pts[1:])] or [Polyline.point(pts[0])])

    def continuity(self, samples: int = 16) -> float:
        """Largest sampled distance between consecutive levels."""
        if len(self.levels) < 2:
            return 0.0
        return max(sup_distance(a, b, samples) for a, b in zip(self.levels, self.levels[1:]))

    def check_kind(self, tol: float = 1e-9) -> bool:
        s = self.surface
        if self.kind == "based-loop":
            base = self.levels[0].start
            return all(s.same_point(c.start, base, tol) for c in self.levels)
        if self.kind == "fixed-endpoints":
            p, q = self.levels[0].start, self.levels[0].end
            return all(s.same_point(c.start, p, tol) and s.same_point(c.end, q, tol) for c in self.levels)
        return True

    def then(self, other: "Homotopy") -> "Homotopy":
        """Run ``self`` and then ``other`` (the shared level appears once)."""
        kind = self.kind if self.kind == other.kind else "free-closed"
        if self.levels[-1] is other.levels[0]:
            levels = self.levels + other.levels[1:]
        else:
            levels = self.levels + other.levels
        return Homotopy(levels, kind, max(self.t_samples, other.t_samples), max(self.continuity_budget, other.continuity_budget))

    def reversed(self) -> "Homotopy":
        return Homotopy(self.levels[::-1], self.kind, self.t_samples, self.continuity_budget)

    def to_json(self, with_levels: bool = True, width: bool = True) -> dict:
        data = {
            "kind": self.kind,
            "n_levels": len(self.levels),
            "t_samples": self.t_samples,
            "continuity_budget": None if math.isinf(self.continuity_budget) else self.continuity_budget,
            "max_length": self.max_length,
            "level_lengths": [float(x) for x in self.level_lengths()],
            "meta": self.meta,
        }
        if width and len(self.levels) > 1:
            data["width"] = self.width()
        if with_levels:
            data["levels"] = [c.to_json() for c in self.levels]
        return data

    def lengths_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "tau", "length"])
        n = len(self.levels)
        for k, x in enumerate(self.level_lengths()):
            w.writerow([k, f"{k / max(n - 1, 1):.6f}", f"{x:.9g}"])
        return buf.getvalue()


@dataclass(frozen=True)
class BallContraction:
    center: SurfacePoint
    radius: float
    measured_R: float
    containment: float
    width: float
    reach_min: float = 0.0

    def __post_init__(self):
        if self.measured_R < 1.0:
            raise ValueError("measured_R is at least 1 by definition")

    def to_json(self) -> dict:
        return {
            "center": self.center.to_json(),
            "radius": self.radius,
            "measured_R": self.measured_R,
            "containment": self.containment,
            "width": self.width,
            "reach_min": self.reach_min,
        }


def geodesic_circle(s: Surface, center: SurfacePoint, radius: float, n: int = 32, phase: float = 0.0) -> Curve:
    """Closed curve through the endpoints of ``n`` evenly spread geodesic rays."""
    pts = [s.shoot(center, phase + 2 * math.pi * k / n, radius).end for k in range(n)]
    return Curve.from_breakpoints(s, pts, closed=True)


def _level_from_points(s: Surface, pts, closed: bool, knots) -> Curve:
    if all(p == pts[0] for p in pts):
        return Curve.point(s, pts[0], closed)
    return Curve.from_breakpoints(s, pts, closed, knots)


def _sample_grid(c: Curve, spacing: float, lo: int = 16, hi: int = 512) -> np.ndarray:
    n = int(min(max(math.ceil(c.length / spacing) if spacing > 0 else lo, lo), hi))
    return _merge_params(np.linspace(0.0, 1.0, n + 1), _breakpoint_params(c))


def contract_in_ball(loop: Curve, center: SurfacePoint, radius: float, *, steps: int | None = None,
                     spacing: float | None = None, t_samples: int = 64,
                     measure: bool = True) -> tuple[Homotopy, BallContraction]:
    """Cone a closed curve to ``center`` along minimizing geodesics.

    Each sampled point of the loop slides to the center along its geodesic,
    so the trajectories are those geodesics.  Consecutive rays that end close
    together but separate in the middle reveal a cut locus inside the ball;
    that raises :class:`ConeFailure`.
    """
    s = loop.surface
    if not loop.closed:
        raise KindMismatch("contract_in_ball needs a closed curve")
    if not radius > 0:
        raise ValueError("radius must be positive")
    if loop.is_point() and s.same_point(loop.start, center):
        return Homotopy([loop, loop], "free-closed", t_samples, 0.0), BallContraction(center, radius, 1.0, 0.0, 0.0)
    h = s.mean_edge_length
    ts = _sample_grid(loop, spacing or max(2.0 * h, radius / 16.0))
    pts = loop.points(ts)
    rays = s.geodesics_from(center, pts)
    lens = np.array([r.length for r in rays])
    containment = float(lens.max())
    if containment > radius * (1 + s.tol_geo) + 1e-12:
        raise ValueError(f"loop leaves the ball: reaches {containment:.6g} > radius {radius:.6g}")
    fr = np.linspace(0.1, 0.9, 5)
    for i in range(len(rays) - 1):
        a, b = rays[i], rays[i + 1]
        gap = s.distance(pts[i], pts[i + 1])
        mids = [s.distance(a.point_at(u * a.length), b.point_at(u * b.length)) for u in fr]
        if max(mids) > 3.0 * gap + 2.0 * h + abs(a.length - b.length):
            raise ConeFailure(f"geodesics to the center jump between samples {i} and {i + 1}; ball too large")
    K = steps or int(min(max(math.ceil(containment / (2.0 * h)), 4), 24))
    levels = [loop]
    knots = ts
    for k in range(1, K):
        u = 1.0 - k / K
        level_pts = [r.point_at(u * r.length) for r in rays]
        levels.append(_level_from_points(s, level_pts[:-1], True, knots))
    levels.append(Curve.point(s, center, True))
    H = Homotopy(levels, "free-closed", t_samples, containment / K + 2.0 * h)
    # unmeasured: the sampled points slide along their rays, so report the ray length
    W = H.width() if measure else containment
    R = max(1.0, max(containment, W) / radius)
    return H, BallContraction(center, float(radius), float(R), containment, W, float(lens.min()))


def homotope_close_curves(alpha: Curve, gamma: Curve, a: float, r_emp: float, *, steps: int | None = None,
                          t_samples: int = 64) -> Homotopy:
    """Free homotopy between two close closed curves (or a fixed-endpoint one for paths).

    The parameter interval is subdivided at a grid containing both curves'
    breakpoints; the connectors ``sigma_i`` are minimizing geodesics from
    ``alpha(t_i)`` to ``gamma(t_i)``.  Each intermediate level runs through
    the points a fixed fraction along every connector, so every cell between
    consecutive connectors (a loop of length at most ``4 r/a``) is swept by
    straight coning inside its ball and each point travels along its own
    connector.
    """
    s = alpha.surface
    if a <= 2:
        raise ValueError("a must exceed 2")
    if alpha.closed != gamma.closed:
        raise KindMismatch("homotope_close_curves needs two closed or two open curves")
    kind = "free-closed"
    if not alpha.closed:
        if not (s.same_point(alpha.start, gamma.start) and s.same_point(alpha.end, gamma.end)):
            raise EndpointMismatch("open curves must share endpoints")
        kind = "fixed-endpoints"
    bound = r_emp / a
    h = s.mean_edge_length
    spacing = max(2.0 * h, min(bound / 2.0, 8.0 * h))
    ts = _merge_params(_sample_grid(alpha, spacing), _sample_grid(gamma, spacing), _breakpoint_params(alpha),
                       _breakpoint_params(gamma))
    pa, pg = alpha.points(ts), gamma.points(ts)
    if not alpha.closed:
        pa[0], pa[-1], pg[0], pg[-1] = alpha.start, alpha.end, alpha.start, alpha.end
    sig = [s.geodesic(x, y) for x, y in zip(pa, pg)]
    far = max(p.length for p in sig)
    if far >= bound:
        raise CurvesNotClose(f"curves are {far:.6g} apart; the construction needs < r/a = {bound:.6g}")
    K = steps or int(min(max(math.ceil(far / (2.0 * h)), 2), 12))
    levels = [alpha]
    for k in range(1, K):
        u = k / K
        pts = [p.point_at(u * p.length) for p in sig]
        levels.append(_level_from_points(s, pts[:-1] if alpha.closed else pts, alpha.closed, ts))
    levels.append(gamma)
    return Homotopy(levels, kind, t_samples, far / K + 2.0 * h)


# ---------------------------------------------------------------- calibration
@dataclass(eq=False)
class Calibration:
    """Contraction constants measured on one mesh.

    ``r_emp`` is the largest probed radius at which every probe ball could be
    coned to its center; ``R_emp`` is the worst containment/width ratio seen
    at that radius.  The loop-space net and ``W_emp`` are built on demand.
    """

    surface: Surface
    a: float
    c: float
    r_emp: float
    R_emp: float
    diameter: float
    probes: list
    seed: int
    lemma_eps: float
    _net: Net | None = field(default=None, repr=False)
    _W: float | None = field(default=None, repr=False)
    _W_runs: list = field(default_factory=list, repr=False)

    @property
    def eps_net(self) -> float:
        return self.r_emp / (4.0 * self.a)

    @property
    def close_bound(self) -> float:
        """Width law for close curves: ``(4 R + 2) r / a``."""
        return (4.0 * self.R_emp + 2.0) * self.r_emp / self.a

    @property
    def net(self) -> Net:
        if self._net is None:
            cover = build_cover(self.surface, self.eps_net)
            self._net = Net(cover, self.c * self.diameter)
        return self._net

    @property
    def W_emp(self) -> float:
        """Largest measured width of the net-based contraction over reference loops."""
        if self._W is None:
            s = self.surface
            center = self.probes[0]["center_point"]
            widths = []
            for rho in sorted({min(self.diameter / 2.0, self.r_emp), self.r_emp}):
                loop = geodesic_circle(s, center, rho)
                raw, _ = contract_in_ball(loop, center, rho * (1 + s.tol_geo))
                H = contract_via_net(loop, raw, self.net, self.a, self.r_emp)
                widths.append(H.width())
                self._W_runs.append({"radius": rho, "loop_length": loop.length, "width": H.width(), "levels": len(H)})
            self._W = float(max(widths))
        return self._W

    def to_json(self, with_W: bool = False) -> dict:
        data = {
            "a": self.a,
            "c": self.c,
            "seed": self.seed,
            "r_emp": self.r_emp,
            "R_emp": self.R_emp,
            "diameter_est": self.diameter,
            "eps_net": self.eps_net,
            "lemma_eps": self.lemma_eps,
            "close_bound": self.close_bound,
            "probes": [{k: v for k, v in p.items() if k != "center_point"} for p in self.probes],
        }
        if with_W:
            data["W_emp"] = self.W_emp
            data["W_runs"] = list(self._W_runs)
        return data


def _random_interior_point(s: Surface, rng: np.random.Generator) -> SurfacePoint:
    f = int(rng.integers(s.n_faces))
    b = rng.dirichlet([2.0, 2.0, 2.0])
    return SurfacePoint.make(f, 0.1 / 3 + 0.9 * b)


@lru_cache(maxsize=16)
def calibrate(s: Surface, a: float = 2.5, c: float = 3.0, seed: int = 0, n_centers: int = 20,
              fractions: tuple = (0.9, 0.6, 0.45, 0.3, 0.2, 0.12), n_rays: int = 16) -> Calibration:
    """Measure ``r_emp`` and ``R_emp`` with cone probes at ``n_centers`` random centers.

    For each radius in ``fractions * diameter_est`` (largest first), a
    geodesic circle of that radius is coned to its center at every probe
    center.  The first radius at which all probes succeed, with every ray
    reaching its nominal length, becomes ``r_emp``.
    """
    if a <= 2:
        raise ValueError("a must exceed 2")
    inv = invariants(s)
    diam = inv.diameter_est
    rng = np.random.default_rng(seed)
    centers = [_random_interior_point(s, rng) for _ in range(n_centers)]
    for frac in fractions:
        rho = frac * diam
        probes = []
        ok = True
        for i, center in enumerate(centers):
            loop = geodesic_circle(s, center, rho, n_rays, phase=0.1 * i)
            try:
                _, bc = contract_in_ball(loop, center, rho * (1 + s.tol_geo), steps=6, t_samples=24)
            except (ConeFailure, ValueError):
                ok = False
                break
            if bc.reach_min < rho * (1 - 2 * s.tol_geo):
                ok = False  # the circle wrapped past the cut locus
                break
            probes.append({"center": center.to_json(), "center_point": center, "radius": rho,
                           "measured_R": bc.measured_R, "width": bc.width, "containment": bc.containment})
        if ok:
            R = max(p["measured_R"] for p in probes)
            return Calibration(s, float(a), float(c), float(rho), float(R), float(diam), probes, seed, 1e-2 * diam)
    raise ConeFailure("no probed radius could be coned at every probe center")


# ------------------------------------------------------------ loop pipeline
def _require_contraction(H: Homotopy, tol: float = 1e-9) -> None:
    if not H.last.is_point(tol):
        raise NotAContraction(f"last level has length {H.last.length:.3g}; expected a point curve")


def _trajectory_pieces(H: Homotopy, t: float) -> list[Polyline]:
    s = H.surface
    pts = [c.eval(t) for c in H.levels]
    if t == 0.0 or t == 1.0:
        # closed levels: use the exact start so trajectories chain with level pieces
        pts = [c.start for c in H.levels]
    return [s.geodesic(a, b) for a, b in zip(pts, pts[1:])]


class _Path:
    """A trajectory with cheap prefix/suffix extraction by level index."""

    def __init__(self, pieces: list[Polyline], start: SurfacePoint):
        self.pieces = pieces
        self.start = start
        self._pre: dict = {}

    def upto(self, k: int) -> Polyline:
        """From level 0 to level k."""
        if k == 0:
            return Polyline.point(self.start)
        if k not in self._pre:
            self._pre[k] = Polyline.join(self.pieces[:k])
        return self._pre[k]

    def between(self, j: int, k: int) -> Polyline:
        """From level j to level k (j <= k)."""
        if j == k:
            return Polyline.point(self.pieces[j - 1].end if j > 0 else self.start)
        return Polyline.join(self.pieces[j:k])

    def point(self, k: int) -> SurfacePoint:
        return self.start if k == 0 else self.pieces[k - 1].end


def _param_at_arclength_gap(levels, t: float, eps: float, grid: np.ndarray, arcs: list[np.ndarray]) -> float:
    nxt = 1.0
    for A in arcs:
        a0 = np.interp(t, grid, A)
        nxt = min(nxt, float(np.interp(a0 + eps, A, grid)))
    return nxt


def _subdivide_by_length(levels, eps: float) -> np.ndarray:
    """Parameters ``t_i`` so that every level's arc on ``[t_{i-1}, t_i]`` is shorter than eps."""
    grid = np.linspace(0.0, 1.0, 2049)
    arcs = [c._arclength(grid) for c in levels]
    ts = [0.0]
    while ts[-1] < 1.0:
        t = ts[-1]
        nxt = _param_at_arclength_gap(levels, t, 0.999 * eps, grid, arcs)
        if nxt <= t + 1e-9:
            nxt = min(1.0, t + 1.0 / 2048)
        ts.append(1.0 if nxt > 1.0 - 1e-9 else nxt)
    return np.array(ts)


def shorten_levels(H: Homotopy, eps: float | None = None, *, eta_share: float = 0.25) -> Homotopy:
    """Contract the same curve through levels of length at most ``len(gamma) + 3 W + eps``.

    The curve is cut at parameters ``t_i`` where every level's arcs are
    shorter than ``eps``.  Arc ``i`` is then run through the whole original
    homotopy while the arcs before it already sit at the final point,
    joined to the rest of the curve by the trajectories of ``t_{i-1}`` and
    ``t_i``.  A last phase retracts the trajectory of ``t_0`` onto
    ``gamma(0)``.

    Each level is a chain of blocks with fixed parameter ranges: one block
    per trajectory and one per arc, so a parameter value stays inside the
    same block for the whole homotopy.  The first level is ``gamma`` with
    those knots.
    """
    _require_contraction(H)
    s = H.surface
    gamma = H.first
    if eps is None:
        eps = 1e-2 * invariants(s).diameter_est
    if not eps > 0:
        raise ValueError("eps must be positive")
    levels = H.levels
    K = len(levels) - 1
    ts = _subdivide_by_length(levels, eps)
    m = len(ts) - 1
    etas = [_Path(_trajectory_pieces(H, float(t)), levels[0].start if i in (0, m) else levels[0].eval(float(t)))
            for i, t in enumerate(ts)]
    etas[m] = etas[0]
    # t_i trajectories must start at the exact level points used by the arc pieces
    final = levels[-1].start

    seg_w = (1.0 - eta_share) * np.diff(ts)
    eta_w = eta_share / (m + 1)
    widths = [eta_w]
    for i in range(m):
        widths += [seg_w[i], eta_w]
    knots = np.concatenate([[0.0], np.cumsum(widths)])
    knots[-1] = 1.0

    def arc(k: int, i: int) -> Polyline:
        return levels[k].piece(float(ts[i - 1]), float(ts[i]))

    original = [arc(0, i) for i in range(1, m + 1)]
    pt = Polyline.point

    def assemble(blocks) -> Curve:
        return Curve(s, [b.start for b in blocks], blocks, True, knots)

    out = []
    for i in range(1, m + 1):
        for k in range(0 if i == 1 else 1, K + 1):
            blocks = []
            blocks.append(etas[0].upto(k) if i == 1 else etas[0].upto(K))
            for j in range(1, i):
                blocks.append(pt(final))
                blocks.append(pt(final) if j < i - 1 else etas[j].between(k, K).reversed())
            blocks.append(arc(k, i))
            blocks.append(etas[i].upto(k).reversed())
            for j in range(i + 1, m + 1):
                blocks.append(original[j - 1])
                blocks.append(pt(original[j - 1].end))
            out.append(assemble(blocks))
    # retract eta_0 * -eta_0 onto gamma(0)
    for k in range(K - 1, -1, -1):
        here = etas[0].point(k)
        blocks = [etas[0].upto(k)] + [pt(here)] * (2 * m - 1) + [etas[0].upto(k).reversed()]
        out.append(assemble(blocks))
    out[-1] = Curve.point(s, gamma.start, True)
    res = Homotopy(out, "free-closed", H.t_samples, H.continuity_budget)
    res.meta.update({"construction": "shorten_levels", "eps": float(eps), "pieces": m,
                     "gamma_length": gamma.length, "input_levels": len(levels)})
    return res


def free_to_based(H: Homotopy, L: float | None = None) -> Homotopy:
    """Conjugate a free contraction by the trajectory of ``gamma(0)``.

    First ``eta_0|[0,tau] * gamma_tau * -eta_0|[0,tau]``, then the
    back-and-forth ``eta_0 * -eta_0`` retracts onto ``gamma(0)``.  Every
    level is a loop based at ``gamma(0)``.
    """
    _require_contraction(H)
    s = H.surface
    if L is not None and H.max_length > L * (1 + 1e-9) + 1e-12:
        raise ValueError(f"levels reach {H.max_length:.6g} > L = {L:.6g}")
    gamma = H.first
    base = gamma.start
    if gamma.is_point():
        pt = Curve.point(s, base, True)
        return Homotopy([pt, pt], "based-loop", H.t_samples, 0.0, {"construction": "free_to_based"})
    eta = _Path(_trajectory_pieces(H, 0.0), base)
    K = len(H.levels) - 1
    knots = np.array([0.0, 0.25, 0.75, 1.0])

    def loop(k: int, middle: Polyline) -> Curve:
        e = eta.upto(k)
        blocks = [e, middle, e.reversed()]
        return Curve(s, [b.start for b in blocks], blocks, True, knots)

    out = [loop(k, H.levels[k].poly) for k in range(K + 1)]
    for k in range(K - 1, -1, -1):
        out.append(loop(k, Polyline.point(eta.point(k))))
    out[-1] = Curve.point(s, base, True)
    res = Homotopy(out, "based-loop", H.t_samples, H.continuity_budget)
    res.meta.update({"construction": "free_to_based", "basepoint": base.to_json(), "eta0_length": sum(p.length for p in eta.pieces)})
    return res


def _thin_levels(H: Homotopy, threshold: float, samples: int = 24) -> list[int]:
    """Indices of a subsequence whose consecutive levels stay within ``threshold``."""
    gaps = [sup_distance(a, b, samples) for a, b in zip(H.levels, H.levels[1:])]
    worst = max(gaps, default=0.0)
    if worst >= threshold:
        raise CurvesNotClose(f"consecutive raw levels are {worst:.6g} apart; need < {threshold:.6g}")
    keep, acc = [0], 0.0
    for k, g in enumerate(gaps, start=1):
        if acc + g >= threshold:
            keep.append(k - 1)
            acc = 0.0
        acc += g
    if keep[-1] != len(H.levels) - 1:
        keep.append(len(H.levels) - 1)
    return sorted(set(keep))


def contract_via_net(gamma: Curve, H_raw: Homotopy, net: Net, a: float, r_emp: float, *, t_samples: int = 64) -> Homotopy:
    """Replace a raw contraction by a chain of homotopies between net elements.

    Raw levels are thinned to steps below ``r/(2a)`` and snapped to the
    net.  Whenever an element (as a parameterized center sequence) comes back,
    everything since its first visit is discarded, so the chain visits each
    sequence once.  Consecutive elements, and the ends of the chain, are
    joined with :func:`homotope_close_curves`.
    """
    _require_contraction(H_raw)
    if not gamma.closed:
        raise KindMismatch("contract_via_net needs a closed curve")
    keep = _thin_levels(H_raw, r_emp / (2.0 * a))
    chain: list = []
    seen: dict = {}
    raw_steps = []
    for k in keep:
        elem = project_to_net(H_raw.levels[k], net)
        raw_steps.append(elem.key)
        seq = elem.center_indices
        if seq in seen:
            cut = seen[seq]
            for e in chain[cut + 1 :]:
                seen.pop(e.center_indices, None)
            chain = chain[: cut + 1]
            continue
        seen[seq] = len(chain)
        chain.append(elem)
    curves = [gamma] + [e.curve for e in chain] + [H_raw.last]
    H = None
    for x, y in zip(curves, curves[1:]):
        piece = homotope_close_curves(x, y, a, r_emp, t_samples=t_samples)
        H = piece if H is None else H.then(piece)
    H.meta.update({
        "construction": "contract_via_net",
        "chain_length": len(chain),
        "raw_levels_used": len(keep),
        "distinct_keys_seen": len(set(raw_steps)),
        "net_elements": len(net.elements),
    })
    return H


def contract_based_short(gamma: Curve, H_raw: Homotopy, net: Net, a: float, r_emp: float, eps: float | None = None,
                         *, t_samples: int = 64) -> Homotopy:
    """Net contraction, then level shortening, then conversion to based loops."""
    via = contract_via_net(gamma, H_raw, net, a, r_emp, t_samples=t_samples)
    W = via.width()
    short = shorten_levels(via, eps)
    based = free_to_based(short, short.max_length)
    based.meta.update({
        "construction": "contract_based_short",
        "W_measured": W,
        "via_levels": len(via),
        "via_max_length": via.max_length,
        "short_max_length": short.max_length,
        "eps": short.meta["eps"],
        "chain_length": via.meta["chain_length"],
    })
    return based


# ------------------------------------------------------------ path pipeline
def _open_curve(s: Surface, blocks, knots=None) -> Curve:
    blocks = list(blocks)
    return Curve(s, [b.start for b in blocks] + [blocks[-1].end], blocks, False, knots)


def path_homotopy(gamma1: Curve, gamma2: Curve, C: Homotopy, *, tol: float = 1e-9) -> Homotopy:
    """Fixed-endpoint homotopy from ``gamma1`` to ``gamma2`` built from a based
    contraction ``C`` of the loop ``gamma1 * -gamma2``.

    With ``A`` the shorter of the two paths and ``B`` the other one, the
    levels are ``Lambda_{1-tau} * A`` where ``Lambda`` contracts ``B * -A``,
    followed by cancelling the ``-A * A`` spur.  Levels are therefore at most
    ``max len(C) + min(len(gamma1), len(gamma2))`` long.  All levels run at
    constant speed, so the first and last ones are ``gamma1`` and ``gamma2``.
    """
    s = gamma1.surface
    if gamma1.closed or gamma2.closed:
        raise KindMismatch("path_homotopy needs open curves")
    p, q = gamma1.start, gamma1.end
    if not (s.same_point(p, gamma2.start, tol) and s.same_point(q, gamma2.end, tol)):
        raise EndpointMismatch("the two paths must share both endpoints")
    if C.kind != "based-loop":
        raise KindMismatch(f"need a based-loop contraction, got {C.kind}")
    if not s.same_point(C.first.start, p, tol):
        raise EndpointMismatch("the contraction must be based at the common start point")
    _require_contraction(C)
    l1, l2 = gamma1.length, gamma2.length
    if l1 <= l2:
        A, B, loops = gamma1, gamma2, [c.reversed() for c in C.levels]
    else:
        A, B, loops = gamma2, gamma1, list(C.levels)
    half = None
    a_poly, b_poly = A.poly, B.poly
    levels = [_open_curve(s, [lam.poly, a_poly], half) for lam in reversed(loops)]
    levels[0] = _open_curve(s, [Polyline.point(p), a_poly], half)
    la = a_poly.length
    n = int(min(max(math.ceil(la / (2.0 * s.mean_edge_length)), 2), 24))
    back = a_poly.reversed()
    for k in range(n + 1):
        u = la * k / n
        tail = a_poly.sub(u, la)
        levels.append(_open_curve(s, [Polyline.join([b_poly, back.sub(0.0, la - u)]), tail], half))
    if A is not gamma1:
        levels.reverse()
    H = Homotopy(levels, "fixed-endpoints", C.t_samples)
    H.meta.update({"construction": "path_homotopy", "len_gamma1": l1, "len_gamma2": l2,
                   "contraction_max_length": C.max_length, "bound": C.max_length + min(l1, l2)})
    return H


def digon_loop(gamma1: Curve, gamma2: Curve) -> Curve:
    """The closed loop ``gamma1 * -gamma2`` based at the common start."""
    s = gamma1.surface
    blocks = [gamma1.poly, gamma2.poly.reversed()]
    return Curve(s, [b.start for b in blocks], blocks, True)


def raw_contraction(loop: Curve, *, t_samples: int = 64, candidates: int = 5) -> Homotopy:
    """Cone a loop to a nearby center, trying a few centers from inside it.

    Candidates are midpoints between opposite points of the loop, tried in
    order of the radius they need.
    """
    s = loop.surface
    if loop.is_point():
        return Homotopy([loop, Curve.point(s, loop.start, True)], "free-closed", t_samples, 0.0)
    us = np.linspace(0.0, 0.5, candidates + 2)[1:-1]
    cands = []
    for u in us:
        g = s.geodesic(loop.eval(float(u)), loop.eval(float(u + 0.5)))
        cands.append(g.point_at(g.length / 2.0))
    probe = loop.points(np.linspace(0.0, 1.0, 33)[:-1])
    reach = [max(r.length for r in s.geodesics_from(c, probe)) for c in cands]
    last_err: Exception | None = None
    for i in sorted(range(len(cands)), key=lambda i: reach[i]):
        # the probe can miss the farthest point by up to half a probe spacing
        radius = (reach[i] + loop.length / 64.0) * (1 + s.tol_geo)
        try:
            H, _ = contract_in_ball(loop, cands[i], radius, t_samples=t_samples, measure=False)
            return H
        except ConeFailure as err:
            last_err = err
    raise ConeFailure(f"no candidate center cones this loop: {last_err}")


@dataclass(eq=False)
class PathFamily:
    """Paths from ``p`` with the parameters ``phi`` where they meet the curve."""

    curves: list
    phi: list
    meta: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.curves, self.phi))

    def __len__(self) -> int:
        return len(self.curves)

    @property
    def max_length(self) -> float:
        return max(c.length for c in self.curves)

    def lengths(self) -> np.ndarray:
        return np.array([c.length for c in self.curves])


def _fraction_gap(a: Polyline, b: Polyline, s: Surface, fr) -> float:
    return max(s.distance(a.point_at(u * a.length), b.point_at(u * b.length)) for u in fr)


def short_path_family(alpha: Curve, calib: "Calibration | None" = None, *, fill: str = "cone", ts=None,
                      jump_factor: float = 5.0, eps: float | None = None, t_samples: int = 64) -> PathFamily:
    """Minimizing geodesics from ``alpha(0)`` to ``alpha(t)``, with every
    cut-locus jump bridged by a homotopy.

    Consecutive geodesics whose midpoints separate by more than
    ``jump_factor`` times the median separation are a jump.  The digon
    between them is contracted, by a plain cone (``fill="cone"``) or by
    the full net pipeline (``fill="net"``, needs ``calib``), and turned into
    a path homotopy between the two sides.  ``phi`` holds where each member
    ends on ``alpha``; it never decreases.
    """
    if alpha.closed:
        raise KindMismatch("short_path_family needs an open curve")
    if fill not in ("cone", "net"):
        raise ValueError("fill must be 'cone' or 'net'")
    if fill == "net" and calib is None:
        raise ValueError("fill='net' needs a calibration")
    s = alpha.surface
    h = s.mean_edge_length
    p = alpha.start
    if ts is None:
        ts = _sample_grid(alpha, 2.0 * h, lo=16, hi=512)
    ts = np.asarray(ts, dtype=float)
    pts = _points_snapped(alpha, ts)
    geos = s.geodesics_from(p, pts)
    fr = (0.25, 0.5, 0.75)
    gap_memo: dict = {}
    gaps = np.zeros(len(pts) - 1)
    for j in range(len(pts) - 1):
        key = (pts[j], pts[j + 1])
        if key not in gap_memo:
            gap_memo[key] = _fraction_gap(geos[j], geos[j + 1], s, fr)
        gaps[j] = gap_memo[key]
    med = float(np.median(gaps)) if len(gaps) else 0.0
    threshold = max(jump_factor * med, 4.0 * h)
    jumps = [j for j in range(len(gaps)) if gaps[j] > threshold]
    if len(jumps) > max(4, len(gaps) // 4):
        raise JumpDetectionFailure(f"{len(jumps)} of {len(gaps)} steps exceed the jump threshold {threshold:.4g}")
    members = [_open_curve(s, [g]) for g in geos]
    # consecutive jump steps (samples right at the cut locus) form one digon
    runs: list[list[int]] = []
    for j in jumps:
        if runs and runs[-1][-1] == j - 1:
            runs[-1].append(j)
        else:
            runs.append([j])
    run_at = {r[0]: r for r in runs}
    curves, phi = [members[0]], [float(ts[0])]
    fills: dict = {}
    digons = []
    j = 0
    while j < len(pts) - 1:
        if j not in run_at:
            curves.append(members[j + 1])
            phi.append(float(ts[j + 1]))
            j += 1
            continue
        k = run_at[j][-1] + 1
        key = (pts[j], pts[k])
        back = alpha.piece(float(ts[j]), float(ts[k])).reversed()
        if key not in fills:
            g1 = members[j]
            g2 = _open_curve(s, [Polyline.join([geos[k], back])])
            loop = digon_loop(g1, g2)
            raw = raw_contraction(loop, t_samples=t_samples)
            if fill == "net":
                C = contract_based_short(loop, raw, calib.net, calib.a, calib.r_emp,
                                         eps if eps is not None else calib.lemma_eps, t_samples=t_samples)
            else:
                C = free_to_based(raw)
            fills[key] = (path_homotopy(g1, g2, C), C)
        P, C = fills[key]
        curves.extend(P.levels[1:])
        phi.extend([float(ts[j])] * (len(P.levels) - 1))
        # walk the far side back in: eta_k * -alpha|[t_i, t_k] for the skipped samples
        for i in range(j + 1, k):
            tail = alpha.piece(float(ts[i]), float(ts[k])).reversed()
            curves.append(_open_curve(s, [Polyline.join([geos[k], tail])]))
            phi.append(float(ts[i]))
        curves.append(members[k])
        phi.append(float(ts[k]))
        digons.append({"index": j, "t": float(ts[j]), "steps": k - j, "gap": float(gaps[j:k].max()),
                       "loop_length": C.first.length, "contraction_max_length": C.max_length,
                       "levels": len(P.levels)})
        j = k
    meta = {"median_gap": med, "threshold": threshold, "jumps": len(runs), "jump_steps": len(jumps),
            "digons": digons, "fill": fill, "samples": len(ts)}
    return PathFamily(curves, phi, meta)


# ------------------------------------------------------- interval extension
def _groups(phi) -> dict:
    out: dict = {}
    for i, t in enumerate(phi):
        out.setdefault(float(t), []).append(i)
    return out


def merged_schedule(phi_a, phi_b) -> list[tuple[int, int, float]]:
    """Walk two families with non-decreasing ``phi`` together.

    At each value of ``phi`` the first family runs through its members with
    that value while the second waits at its first one, then the second
    catches up.  Every step ``(i, j, t)`` pairs members that end at the same
    parameter ``t``.
    """
    ga, gb = _groups(phi_a), _groups(phi_b)
    if list(ga) != list(gb):
        raise ValueError("families must be sampled at the same parameters")
    out = []
    for t, ia in ga.items():
        jb = gb[t]
        out += [(i, jb[0], t) for i in ia]
        out += [(ia[-1], j, t) for j in jb[1:]]
    return out


class _Traces:
    """Paths ``t -> f_c(t), f_{c+1}(t), ..., f_x(t)`` across consecutive family members."""

    def __init__(self, members: list[Curve], ts: np.ndarray):
        self.s = members[0].surface
        self.ts = ts
        self.index = {float(t): k for k, t in enumerate(ts)}
        self.pts = [_points_snapped(m, ts) for m in members]
        pts = self.pts
        geo = self.s.geodesic
        # steps[i][k]: geodesic from member i to member i+1 at ts[k]
        self.steps = [[geo(a, b) for a, b in zip(pts[i], pts[i + 1])] for i in range(len(members) - 1)]
        self.step_len = np.array([[g.length for g in row] for row in self.steps]) if self.steps else np.zeros((0, len(ts)))

    def path(self, i0: int, i1: int, t: float) -> Polyline:
        """From member ``i0`` to member ``i1`` at parameter ``t``."""
        k = self.index[float(t)]
        if i0 == i1:
            return Polyline.point(self.pts[i0][k])
        if i0 < i1:
            return Polyline.join([self.steps[i][k] for i in range(i0, i1)])
        return Polyline.join([self.steps[i][k].reversed() for i in range(i0 - 1, i1 - 1, -1)])

    def length(self, i0: int, i1: int) -> np.ndarray:
        lo, hi = min(i0, i1), max(i0, i1)
        return self.step_len[lo:hi].sum(axis=0)


@dataclass(eq=False)
class IntervalExtension:
    """Final curves ``H(x, 1)`` along one arc, from its left vertex to its right one."""

    curves: list
    max_length: float
    bound: float
    sides: list
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"n_curves": len(self.curves), "max_length": self.max_length, "bound": self.bound,
                "sides": self.sides, **self.meta}


def _side(tr: _Traces, c: int, xb: int, alpha: PathFamily, bnd: PathFamily, delta: float, collar: int):
    s = tr.s
    sig_len = tr.length(c, xb)
    if sig_len.max() > delta * (1 + 1e-12):
        raise VariationTooLarge(f"members {c}..{xb} drift {sig_len.max():.6g} apart; delta is {delta:.6g}")
    sched = merged_schedule(alpha.phi, bnd.phi)
    La, Lb = alpha.lengths(), bnd.lengths()
    sig_at = {float(t): sig_len[k] for k, t in enumerate(tr.ts)}
    a_last = alpha.curves[-1].poly
    curves = [alpha.curves[-1]]
    # zone H2 at t = 1: H_b(t') * -sigma(t') * -alpha(t') * alpha(1)
    for i, j, t in sched[1:]:
        blocks = [bnd.curves[j].poly, tr.path(c, xb, t).reversed(), alpha.curves[i].poly.reversed(), a_last]
        curves.append(_open_curve(s, blocks))
    # collar: retract the -alpha(1) * alpha(1) spur
    la = a_last.length
    b_last = bnd.curves[-1].poly
    for k in range(1, collar + 1):
        v = la * k / collar
        spur = a_last.sub(v, la)
        curves.append(_open_curve(s, [b_last, spur.reversed(), spur]))
    curves[-1] = _open_curve(s, [b_last])
    # lengths of every H(x, t) from component lengths
    sig = np.array([sig_at[t] for _, _, t in sched])
    la_s = np.array([La[i] for i, _, _ in sched])
    lb_s = np.array([Lb[j] for _, j, _ in sched])
    h1 = float((La + np.array([sig_at[float(t)] for t in alpha.phi])).max())
    inner = np.maximum.accumulate(lb_s + sig + la_s)
    h2 = float((inner + la_s + sig).max())
    h3 = float((lb_s + 2 * sig + 2 * la_s).max())
    info = {"boundary_member": xb, "schedule_steps": len(sched), "sigma_max": float(sig_len.max()),
            "H1_max": h1, "H2_max": h2, "H3_max": h3, "boundary_max": float(Lb.max())}
    return curves, max(h1, h2, h3), info


def extend_to_interval(members: list[Curve], c: int, ts, alpha: PathFamily, left: PathFamily, right: PathFamily,
                       delta: float, *, W: float, diameter: float, collar: int = 8) -> IntervalExtension:
    """Fill the family over one arc ``f_0 .. f_n`` (center member ``c``).

    Around the center the paths are ``alpha_t`` followed by the trace
    ``sigma`` across members.  Moving outwards the boundary family takes
    over (zone H2, along the merged ``phi`` schedule), then the
    back-and-forth spur ``-alpha * alpha`` is retracted in a collar, which
    lands exactly on the boundary vertex's final path.  ``alpha``, ``left``
    and ``right`` are short path families of ``f_c``, ``f_0`` and ``f_n``
    sampled on the same grid ``ts``.  Only the final curves ``H(x, 1)`` are
    built; lengths of all ``H(x, t)`` are computed from their pieces.
    """
    n = len(members) - 1
    if not 0 < c < n:
        raise ValueError("the center must be an interior member")
    ts = np.asarray(ts, dtype=float)
    tr = _Traces(members, ts)
    lc, lmax, linfo = _side(tr, c, 0, alpha, left, delta, collar)
    rc, rmax, rinfo = _side(tr, c, n, alpha, right, delta, collar)
    curves = lc[::-1] + rc[1:]
    Lb = max(left.max_length, right.max_length)
    bound = Lb + 10.0 * W + 6.0 * diameter + 4.0 * delta
    return IntervalExtension(curves, max(lmax, rmax), bound, [linfo, rinfo],
                             {"members": n + 1, "center": c, "L_boundary": Lb, "W": W, "delta": delta})
