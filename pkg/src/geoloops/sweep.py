"""Birkhoff shortening, geodesics between two points, and family compression.

Sweepouts here are one-parameter loops of paths ``S^1 -> Omega_{p,q}``
stored as a list of open curves whose first and last entries coincide.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .homotopy import (
    Calibration,
    Homotopy,
    PathFamily,
    VariationTooLarge,
    _open_curve,
    _Traces,
    extend_to_interval,
    short_path_family,
)
from .loopspace import Curve, sup_distance
from .surface import Polyline, Surface, SurfacePoint, invariants

__all__ = [
    "InsufficientGeodesics",
    "Sweepout",
    "BirkhoffResult",
    "birkhoff_run",
    "birkhoff_shorten",
    "winding_skeleton",
    "find_geodesics",
    "spiral_sweepout",
    "Compression",
    "compress_family",
]


class InsufficientGeodesics(RuntimeError):
    """Fewer distinct critical curves than requested survived deduplication."""


@dataclass(eq=False)
class Sweepout:
    family: list
    degree: int = 1

    def __post_init__(self):
        if len(self.family) < 2:
            raise ValueError("a sweepout needs at least two members")
        s = self.surface
        p, q = self.family[0].start, self.family[0].end
        for c in self.family:
            if c.closed:
                raise ValueError("sweepout members are open paths")
            if not (s.same_point(c.start, p, 1e-9) and s.same_point(c.end, q, 1e-9)):
                raise ValueError("all members must run between the same two points")

    @property
    def surface(self) -> Surface:
        return self.family[0].surface

    @property
    def p(self) -> SurfacePoint:
        return self.family[0].start

    @property
    def q(self) -> SurfacePoint:
        return self.family[0].end

    def lengths(self) -> np.ndarray:
        return np.array([c.length for c in self.family])

    @property
    def max_length(self) -> float:
        return float(self.lengths().max())

    def is_closed_loop(self, tol: float = 1e-9) -> bool:
        return sup_distance(self.family[0], self.family[-1], 16) <= tol

    def to_json(self, with_curves: bool = True) -> dict:
        data = {"degree": self.degree, "members": len(self.family), "max_length": self.max_length,
                "lengths": [float(x) for x in self.lengths()]}
        if with_curves:
            data["family"] = [c.to_json() for c in self.family]
        return data

    @classmethod
    def from_json(cls, s: Surface, data: dict) -> "Sweepout":
        return cls([Curve.from_json(s, c) for c in data["family"]], int(data.get("degree", 1)))


# ---------------------------------------------------------------- shortening
@dataclass
class BirkhoffResult:
    curve: Curve
    lengths: list
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.lengths) - 1


def _default_step(s: Surface) -> float:
    return 24.0 * s.mean_edge_length


def birkhoff_run(gamma: Curve, max_iters: int = 60, tol: float = 1e-4, step: float | None = None) -> BirkhoffResult:
    """Shorten a path by straightening sub-arcs of length ``step``.

    The cut points shift by half a step on every other pass so that no
    kink stays on a cut point forever.  Each sub-arc is replaced by the
    shortest path in its own face corridor, which never lengthens it.
    Stops after two consecutive passes that gain less than ``tol`` relative
    length.
    """
    if gamma.closed:
        raise ValueError("birkhoff_run shortens open paths")
    s = gamma.surface
    step = step or _default_step(s)
    poly = gamma.poly
    lengths = [poly.length]
    quiet = 0
    for it in range(max_iters):
        L = poly.length
        if L == 0.0:
            return BirkhoffResult(gamma, lengths, True)
        offset = step / 2.0 if it % 2 else 0.0
        cuts = [0.0] + [x for x in np.arange(offset, L, step) if 0.0 < x < L] + [L]
        parts = [s.straighten(poly.sub(a, b)) for a, b in zip(cuts, cuts[1:]) if b > a]
        new = Polyline.join(parts)
        gain = L - new.length
        if new.length <= L:
            poly = new
        lengths.append(poly.length)
        quiet = quiet + 1 if gain < tol * L else 0
        if quiet >= 2:
            return BirkhoffResult(_open_curve(s, [poly]), lengths, True)
    return BirkhoffResult(_open_curve(s, [poly]), lengths, False)


def birkhoff_shorten(gamma: Curve, max_iters: int = 60, tol: float = 1e-4, step: float | None = None) -> Curve:
    """Shortened path; warns (and returns the best iterate) if it did not converge."""
    res = birkhoff_run(gamma, max_iters, tol, step)
    if not res.converged:
        warnings.warn(f"Birkhoff shortening did not converge in {max_iters} passes", RuntimeWarning, stacklevel=2)
    return res.curve


# ------------------------------------------------------------ geodesics p->q
def _far_point(s: Surface, p: SurfacePoint, q: SurfacePoint, diameter: float) -> SurfacePoint:
    """Keep going straight past ``q`` until roughly the far side of the surface."""
    g = s.geodesic(p, q)
    d = g.length
    k = int(np.nonzero(g.seg > 1e-12)[0][-1])
    f = int(g.faces[k])
    a, b = s.point2d(f, g.b0[k]), s.point2d(f, g.b1[k])
    angle = math.atan2(b[1] - a[1], b[0] - a[0])
    return s.shoot(SurfacePoint.make(f, g.b1[k]), angle, max(diameter - d / 2.0, d)).end


def winding_skeleton(j: int, p: SurfacePoint, q: SurfacePoint, w: SurfacePoint) -> list[SurfacePoint]:
    """Anchor points of the ``j``-th winding path.

    With ``g`` the short path ``p -> q`` and ``b`` the way back ``q -> w -> p``,
    even ``j = 2k`` gives ``g (b g)^k`` and odd ``j = 2k + 1`` gives
    ``b^-1 (g^-1 b^-1)^k``.
    """
    k, odd = divmod(j, 2)
    if not odd:
        return [p, q] + [w, p, q] * k
    return [p, w, q] + [p, w, q] * k


def _anchor_path(s: Surface, anchors) -> Curve:
    return _open_curve(s, [s.geodesic(a, b) for a, b in zip(anchors, anchors[1:])])


def _nudge(s: Surface, x: SurfacePoint, angle: float, rho: float) -> SurfacePoint:
    return s.shoot(x, angle, rho).end if rho > 0 else x


def _start_direction(s: Surface, poly: Polyline) -> tuple[SurfacePoint, float]:
    k = int(np.nonzero(poly.seg > 1e-12)[0][0])
    f = int(poly.faces[k])
    a, b = s.point2d(f, poly.b0[k]), s.point2d(f, poly.b1[k])
    return SurfacePoint.make(f, poly.b0[k]), math.atan2(b[1] - a[1], b[0] - a[0])


def _shoot_polish(s: Surface, c: Curve, q: SurfacePoint) -> Curve | None:
    """Solve ``exp_p(L, theta) = q`` near the start direction and length of ``c``.

    Returns the straight shot (plus its tiny closing geodesic) when it
    lands within a thousandth of an edge of ``q``, else ``None``.
    """
    x0, theta = _start_direction(s, c.poly)
    v0 = np.array([theta, c.length])
    # a wide first simplex lets the search leave the candidate's basin, which is often the wrong one
    simplex = [v0, v0 + [0.05, 0.0], v0 + [0.0, 0.1]]
    sol = minimize(lambda v: s.distance(s.shoot(x0, v[0], v[1]).end, q), v0, method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-12, "maxfev": 300, "initial_simplex": simplex})
    v = sol.x
    if not v[1] > 0:
        return None
    shot = s.shoot(x0, float(v[0]), float(v[1]))
    if s.distance(shot.end, q) > 1e-3 * s.mean_edge_length:
        return None
    return _open_curve(s, [shot, s.geodesic(shot.end, q)])


def _unshortenable(c: Curve, tol: float, passes: int = 3) -> bool:
    return birkhoff_run(c, max_iters=passes, tol=tol).curve.length >= c.length * (1.0 - 10.0 * tol)


def _settle(c: Curve, q: SurfacePoint, max_iters: int, tol: float) -> tuple[Curve, str]:
    """Turn a min-max candidate into a locally unshortenable path.

    Candidates that are already critical are kept.  Otherwise a shot with
    the same start direction is tried, and failing that the candidate is
    shortened to convergence (which may land on a shorter geodesic).
    """
    if _unshortenable(c, tol):
        return c, "critical"
    shot = _shoot_polish(c.surface, c, q)
    if shot is not None and _unshortenable(shot, tol):
        return shot, "shot"
    return birkhoff_run(c, max_iters=max_iters, tol=tol).curve, "shortened"


def find_geodesics(s: Surface, p: SurfacePoint, q: SurfacePoint, m: int, *, members: int = 4,
                   radii: tuple = (0.03,), max_iters: int = 60, member_iters: int = 8,
                   separation: float | None = None, extra: int = 2, report: dict | None = None) -> list[Curve]:
    """``m`` distinct locally shortest paths from ``p`` to ``q``, sorted by length.

    Degree ``j`` starts from the winding path of :func:`winding_skeleton`.
    Its family is the path itself plus ``members`` copies whose interior
    anchors are nudged by ``rho * diameter`` in evenly spread directions.
    Every member is shortened (the nudged ones for ``member_iters`` passes
    only, which is enough to undo the nudge kinks) and the longest result
    is the family's critical curve.  Over the radii in ``radii`` the
    shortest critical curve wins.  Curves within ``separation`` (default
    three mean edge lengths) of an earlier one are dropped, and up to
    ``extra`` further degrees are tried to make up for them.

    Away from the round sphere the critical member is usually not yet a
    geodesic (the nudged members are only partly shortened), so it is
    settled first: see :func:`_settle`.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    diam = invariants(s).diameter_est
    sep = separation if separation is not None else 3.0 * s.mean_edge_length
    w = _far_point(s, p, q, diam)
    found: list[tuple[float, int, Curve]] = []
    tried = []
    j = 0
    while len(found) < m and j < m + extra:
        anchors = winding_skeleton(j, p, q, w)
        base = birkhoff_run(_anchor_path(s, anchors), max_iters=max_iters)
        best = None
        for rho in radii:
            crit = base
            for i in range(members if rho > 0 else 0):
                theta = 2.0 * math.pi * i / members
                moved = [anchors[0]] + [_nudge(s, x, theta, rho * diam) for x in anchors[1:-1]] + [anchors[-1]]
                res = birkhoff_run(_anchor_path(s, moved), max_iters=member_iters)
                if res.curve.length > crit.curve.length:
                    crit = res
            if best is None or crit.curve.length < best.curve.length:
                best = crit
        curve, how = _settle(best.curve, q, max_iters, 1e-4)
        distinct = all(sup_distance(curve, other, 64) > sep for _, _, other in found)
        tried.append({"degree": j, "length": curve.length, "skeleton_length": base.curve.length,
                      "candidate_length": best.curve.length, "settled_by": how, "kept": distinct})
        if distinct:
            found.append((curve.length, j, curve))
        j += 1
    if report is not None:
        report.update({"far_point": w.to_json(), "separation": sep, "tried": tried})
    if len(found) < m:
        raise InsufficientGeodesics(f"only {len(found)} distinct geodesics after {j} winding degrees")
    found.sort(key=lambda x: (x[0], x[1]))
    return [c for _, _, c in found[:m]]


# ------------------------------------------------------------------ fixtures
def spiral_sweepout(s: Surface, p: SurfacePoint, q: SurfacePoint, windings: int, max_length: float | None = None,
                    members: int = 32, points: int = 48, rho: float | None = None) -> Sweepout:
    """Paths ``p -> q`` followed by ``windings`` turns of a circle through ``q``.

    The circle through ``q`` turns about ``q`` as the family parameter goes
    once around; its radius is chosen so that the longest member is about
    ``max_length`` on a unit sphere, unless ``rho`` gives it directly (to
    add windings to an existing fixture).  Only embedded (unit-sphere-like) meshes
    are supported, since the circles are built in space and projected.
    """
    if not s.embedded:
        raise ValueError("spiral_sweepout needs an embedded mesh")
    X, Q = s.xyz(p), s.xyz(q)
    Qn = Q / np.linalg.norm(Q)
    d = X - np.dot(X, Qn) * Qn
    t1 = d / np.linalg.norm(d)
    t2 = np.cross(Qn, t1)
    stem = s.geodesic(p, q)
    if rho is None:
        if max_length is None:
            raise ValueError("give max_length or rho")
        rho = math.asin(min((max_length - stem.length) / (2.0 * math.pi * windings), 1.0))
    fam = []
    for i in range(members):
        theta = 2.0 * math.pi * i / members
        e = math.cos(theta) * t1 + math.sin(theta) * t2
        axis = math.cos(rho) * Qn + math.sin(rho) * e
        pts = [q]
        for k in range(1, points):
            phi = 2.0 * math.pi * k / points
            v = (Qn * math.cos(phi) + np.cross(axis, Qn) * math.sin(phi)
                 + axis * np.dot(axis, Qn) * (1.0 - math.cos(phi)))
            pts.append(s.locate(v))
        loop = [s.geodesic(a, b) for a, b in zip(pts, pts[1:] + [q])]
        fam.append(_open_curve(s, [stem] + loop * windings))
    fam.append(fam[0])
    return Sweepout(fam, windings)


# ---------------------------------------------------------------- compression
@dataclass(eq=False)
class Compression:
    sweepout: Sweepout
    audit: list
    max_length: float
    bound: float
    meta: dict = field(default_factory=dict)

    def to_json(self, with_curves: bool = False) -> dict:
        return {
            "max_length": self.max_length,
            "bound": self.bound,
            "within_bound": self.max_length <= self.bound,
            "sweepout": self.sweepout.to_json(with_curves),
            "audit": [h.to_json(with_levels=with_curves, width=False) for h in self.audit],
            **self.meta,
        }


def _arcs(step_len: np.ndarray, delta: float) -> list[tuple[int, int, int]]:
    """Split members ``0..K`` into arcs ``(start, center, end)`` whose halves vary by less than delta."""
    K = step_len.shape[0]
    worst = step_len.max(axis=1)
    if np.any(worst >= delta):
        i = int(np.argmax(worst))
        raise VariationTooLarge(f"members {i} and {i + 1} are {worst[i]:.6g} apart; delta is {delta:.6g}")

    def reach(i0: int) -> int:
        acc = np.zeros(step_len.shape[1])
        i = i0
        while i < K:
            nxt = acc + step_len[i]
            if nxt.max() >= delta:
                break
            acc = nxt
            i += 1
        return i

    arcs = []
    v = 0
    while v < K:
        c = reach(v)
        if c >= K:
            c = v + max(1, (K - v) // 2)
        e = reach(c)
        if e == c:
            e = c + 1
        arcs.append((v, c, min(e, K)))
        v = min(e, K)
    if arcs[-1][1] == arcs[-1][2]:
        # a last arc with one step cannot have an interior center; fold it into the previous one
        v0, c0, _ = arcs.pop(-2)
        arcs[-1] = (v0, c0, K)
        if step_len[c0:K].sum(axis=0).max() >= delta:
            raise VariationTooLarge("family too coarse to close the last arc; sample more members")
    return arcs


def _audit_chain(f: Curve, fam: PathFamily) -> Homotopy:
    s = f.surface
    levels = [_open_curve(s, [c.poly, f.piece(ph, 1.0)]) for c, ph in zip(fam.curves, fam.phi)]
    levels[0] = f
    return Homotopy(levels, "fixed-endpoints", meta={"construction": "audit", "members": len(levels)})


def compress_family(f: Sweepout, calib: Calibration, delta: float, *, fill: str = "cone", ts=None,
                    W: float | None = None, collar: int = 8, jump_factor: float = 5.0) -> Compression:
    """Replace a sweepout by one whose curves have length independent of the input.

    The family circle is cut into arcs whose two halves each vary by less
    than ``delta``.  Arc ends and centers get short path families; each arc
    is filled by :func:`extend_to_interval`.  The audit list holds, for
    every arc end and center ``x``, the homotopy ``H_x(tau) * f_x|[phi, 1]``
    from ``f_x`` to its output curve.
    """
    if not f.is_closed_loop():
        raise ValueError("the sweepout's first and last members must coincide")
    s = f.surface
    members = f.family
    if ts is None:
        ts = _common_grid(members[0], s)
    ts = np.asarray(ts, dtype=float)
    traces = _Traces(members, ts)
    arcs = _arcs(traces.step_len, delta)
    K = len(members) - 1
    families: dict[int, PathFamily] = {}

    def family(i: int) -> PathFamily:
        i = 0 if i == K else i
        if i not in families:
            families[i] = short_path_family(members[i], calib, fill=fill, ts=ts, jump_factor=jump_factor)
        return families[i]

    if W is None:
        W = calib.W_emp
    out: list = []
    pieces = []
    for v0, c, v1 in arcs:
        ext = extend_to_interval(members[v0 : v1 + 1], c - v0, ts, family(c), family(v0), family(v1), delta,
                                 W=W, diameter=calib.diameter, collar=collar)
        out += ext.curves if not out else ext.curves[1:]
        pieces.append({"arc": [v0, c, v1], **ext.to_json()})
    audit = [_audit_chain(members[i], family(i)) for i in sorted({x for a in arcs for x in a} - {K})]
    diam = calib.diameter
    bound = 2.0 * (5.0 * W + 3.0 * diam) + diam + delta
    result = Sweepout(out, f.degree)
    meta = {
        "delta": delta,
        "W": W,
        "diameter": diam,
        "fill": fill,
        "input_max_length": f.max_length,
        "samples": len(ts),
        "arcs": pieces,
        "family_digons": {str(i): fam.meta["jumps"] for i, fam in sorted(families.items())},
        "interval_max_length": max(p["max_length"] for p in pieces),
    }
    return Compression(result, audit, result.max_length, bound, meta)


def _common_grid(c: Curve, s: Surface, hi: int = 2048) -> np.ndarray:
    from .homotopy import _breakpoint_params, _sample_grid

    bp = _breakpoint_params(c)
    if len(bp) <= hi:
        return _sample_grid(c, 2.0 * s.mean_edge_length, lo=16, hi=len(bp)) if len(bp) < 64 else bp
    return _sample_grid(c, 2.0 * s.mean_edge_length, lo=16, hi=512)
