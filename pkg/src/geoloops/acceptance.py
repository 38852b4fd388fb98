"""The acceptance suite behind ``geoloops verify-all``.

Each check returns ``(passed, details)`` where ``details`` holds only
values computed from the meshes and the seed, so two runs with the same
seed produce identical reports.  Wall-clock measurements go to a separate
``timing`` mapping that the CLI writes next to the report.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bounds import (
    GeometryParams,
    ball_count_bound,
    contractibility_params,
    length_bound,
    net_size_bound,
    width_bound,
)
from .cover import brute_force_nerve, build_cover, nerve
from .homotopy import (
    calibrate,
    contract_based_short,
    contract_in_ball,
    contract_via_net,
    digon_loop,
    free_to_based,
    homotope_close_curves,
    path_homotopy,
    raw_contraction,
    shorten_levels,
)
from .logscalar import PROMOTE_AT, LogScalar, Ordering
from .loopspace import Curve, net_size_observed, project_to_net, sup_distance
from .meshes import load_fixture
from .surface import Surface, SurfacePoint
from .sweep import Sweepout, compress_family, find_geodesics, spiral_sweepout

__all__ = ["CRITERIA", "CriterionResult", "SuiteContext", "run_suite"]

SLACK = 0.10
GEODESIC_TOL = 0.03
RUNTIME_BUDGET = 60.0
PIPELINE_EPS = 0.5


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed, "details": self.details}


@dataclass
class SuiteContext:
    seed: int = 0
    coarse_name: str = "sphere_coarse"
    fine_name: str = "sphere_fine"
    timing: dict = field(default_factory=dict)

    @cached_property
    def sphere(self) -> Surface:
        return load_fixture(self.coarse_name)

    @cached_property
    def sphere_fine(self) -> Surface:
        return load_fixture(self.fine_name)

    @cached_property
    def calib(self):
        return calibrate(self.sphere)

    def rng(self, k: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, k])


# ------------------------------------------------------------------ helpers
def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _on_equator(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle), 0.0])


def _latitude_circle(s: Surface, lat: float, n: int = 48, phase: float = 0.0) -> Curve:
    pts = [s.locate([math.cos(lat) * math.cos(phase + a), math.cos(lat) * math.sin(phase + a), math.sin(lat)])
           for a in np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)]
    return Curve.from_breakpoints(s, pts, closed=True)


def _random_loop(s: Surface, rng: np.random.Generator, rho_max: float = 0.3) -> Curve:
    """Star-shaped loop of 3 to 6 breakpoints around a random center of the unit sphere."""
    c = _unit(rng.normal(size=3))
    u = _unit(np.cross(c, [0.3, 0.5, 0.8]))
    v = np.cross(c, u)
    rho = rng.uniform(0.02, rho_max)
    k = int(rng.integers(3, 7))
    ang = np.sort(rng.uniform(0.0, 2.0 * math.pi, k))
    pts = [s.locate(c + rho * rng.uniform(0.5, 1.2) * (math.cos(a) * u + math.sin(a) * v)) for a in ang]
    return Curve.from_breakpoints(s, pts, closed=True)


def _nearby_loop(s: Surface, loop: Curve, rng: np.random.Generator, reach: float) -> Curve:
    """Move every breakpoint of ``loop`` by at most ``reach`` in a random direction."""
    pts = [s.shoot(x, rng.uniform(0.0, 2.0 * math.pi), rng.uniform(0.0, reach)).end for x in loop.breakpoints]
    return Curve.from_breakpoints(s, pts, closed=True)


def _random_point_pair(s: Surface, rng: np.random.Generator, lo: float, hi: float):
    p = s.locate(_unit(rng.normal(size=3)))
    x = s.xyz(p)
    e = _unit(np.cross(x, rng.normal(size=3)))
    d = rng.uniform(lo, hi)
    return p, s.locate(math.cos(d) * x + math.sin(d) * e)


def _digon(s: Surface, p: SurfacePoint, q: SurfacePoint, lift: float) -> tuple[Curve, Curve]:
    """The minimizing path ``p -> q`` and a detour through a point lifted off its middle."""
    g = s.geodesic(p, q)
    mid = s.xyz(g.point_at(g.length / 2.0))
    normal = _unit(np.cross(s.xyz(p), s.xyz(q)))
    top = s.locate(mid + lift * normal)
    return Curve.from_polylines(s, [g], closed=False), Curve.from_breakpoints(s, [p, top, q])


def _within(value: float, bound: float) -> bool:
    return value <= bound * (1.0 + SLACK)


# ----------------------------------------------------------------- criteria
def criterion_1(ctx: SuiteContext):
    s = ctx.sphere_fine
    p, q = s.locate(_on_equator(0.0)), s.locate(_on_equator(1.0))
    d = s.distance(p, q)
    t0 = time.perf_counter()
    gs = find_geodesics(s, p, q, 4)
    ctx.timing["criterion_1_seconds"] = time.perf_counter() - t0
    ctx.timing["criterion_1_runtime_ok"] = ctx.timing["criterion_1_seconds"] < RUNTIME_BUDGET
    targets = [1.0, 2 * math.pi - 1.0, 2 * math.pi + 1.0, 4 * math.pi - 1.0]
    lengths = [g.length for g in gs]
    errs = [abs(x - t) / t for x, t in zip(lengths, targets)]
    return max(errs) <= GEODESIC_TOL, {"faces": s.n_faces, "dist_pq": d, "lengths": lengths,
                                       "targets": targets, "rel_errors": errs, "tolerance": GEODESIC_TOL}


def criterion_2(ctx: SuiteContext):
    bc = ball_count_bound(1, 1, 2).to_float()
    r, R = contractibility_params(2, 1, 1, 1, 1)
    ns = net_size_bound(10, 0.37, 0.37)
    checks = {
        "ball_count": math.isclose(bc, 144 * math.e, rel_tol=1e-9),
        "r": math.isclose(r.to_float(), math.exp(-1), rel_tol=1e-12),
        "R": math.isclose(R.to_float(), math.e, rel_tol=1e-12),
        "net_size_log": math.isclose(ns.log_value(), 19 * math.log(10), rel_tol=1e-15),
    }
    return all(checks.values()), {"ball_count_bound": bc, "r": r.to_float(), "R": R.to_float(),
                                  "net_size_ln": ns.log_value(), "checks": checks}


def criterion_3(ctx: SuiteContext):
    ns, Ds, vs, cs = [2, 3, 4], [1, 5, 10], [0.1, 1, 10], [1, 10, 100]

    def evaluate(n, D, v, c, l=1):
        p = GeometryParams(n=n, D=D, v=v, c=c, l=l, delta=1e-3)
        wb = width_bound(p)
        return wb, length_bound(p, wb.W)

    table = {}
    failures = []
    for n, D, v, c, l in itertools.product(ns, Ds, vs, cs, (1, 2)):
        wb, L = evaluate(n, D, v, c, l)
        table[(n, D, v, c, l)] = (wb.W, L)
        finite = all(math.isfinite(x.lo) and math.isfinite(x.hi) for x in (wb.W, wb.envelope, L))
        if not finite:
            failures.append({"point": [n, D, v, c, l], "why": "not finite"})
        if wb.W.compare(wb.envelope) is Ordering.GREATER:
            failures.append({"point": [n, D, v, c, l], "why": "W above envelope"})

    def never(a, b) -> bool:
        return a.compare(b) is not Ordering.GREATER

    edges = 0
    for (n, D, v, c, l), (W, L) in table.items():
        steps = []
        for axis, values, k in (("D", Ds, 1), ("v", vs, 2), ("c", cs, 3)):
            i = values.index((n, D, v, c, l)[k])
            if i + 1 < len(values):
                key = list((n, D, v, c, l))
                key[k] = values[i + 1]
                steps.append((axis, tuple(key)))
        if l == 1:
            steps.append(("l", (n, D, v, c, 2)))
        for axis, key in steps:
            W2, L2 = table[key]
            edges += 1
            ok = (never(W2, W) and never(L2, L)) if axis == "v" else (never(W, W2) and never(L, L2))
            if not ok:
                failures.append({"point": [n, D, v, c, l], "axis": axis})
    return not failures, {"grid_points": len(table), "edges_checked": edges, "failures": failures}


def criterion_4(ctx: SuiteContext):
    s, net = ctx.sphere, ctx.calib.net
    rng = ctx.rng(4)
    worst_ratio, worst_len, done, bad = 0.0, 0.0, 0, 0
    while done < 100:
        g = _random_loop(s, rng, rho_max=1.0)
        if g.length > net.L:
            continue
        e = project_to_net(g, net)
        slack = (g.length + e.curve.length) / 64.0
        dist = sup_distance(g, e.curve)
        limit = 5.0 * net.eps / 6.0 + slack
        ok = dist < limit and e.curve.length <= 3.0 * net.L
        worst_ratio = max(worst_ratio, dist / limit)
        worst_len = max(worst_len, e.curve.length / (3.0 * net.L))
        bad += not ok
        done += 1
    observed = net_size_observed(net)
    count_ok = net_size_bound(len(net.cover), net.L, net.eps).compare(float(observed)) is not Ordering.LESS
    return bad == 0 and count_ok, {"curves": done, "passed": done - bad, "eps": net.eps, "L": net.L,
                                   "worst_distance_ratio": worst_ratio, "worst_length_ratio": worst_len,
                                   "elements": observed, "count_within_bound": count_ok}


def criterion_5(ctx: SuiteContext):
    s, cal = ctx.sphere, ctx.calib
    rng = ctx.rng(5)
    bound = cal.close_bound
    widths = []
    for _ in range(20):
        a = _random_loop(s, rng, rho_max=0.8)
        b = _nearby_loop(s, a, rng, 0.2 * cal.r_emp / cal.a)
        widths.append(homotope_close_curves(a, b, cal.a, cal.r_emp).width())
    ok = sum(_within(w, bound) for w in widths)
    return ok == 20, {"pairs": 20, "passed": ok, "bound": bound, "a": cal.a, "R_emp": cal.R_emp, "r_emp": cal.r_emp,
                      "max_width": max(widths)}


def _pipeline_checks(s: Surface, cal, loop: Curve, H_raw, digon) -> dict:
    net, a, r = cal.net, cal.a, cal.r_emp
    via = contract_via_net(loop, H_raw, net, a, r)
    S = shorten_levels(via, PIPELINE_EPS)
    F = free_to_based(H_raw, H_raw.max_length)
    C = contract_based_short(loop, H_raw, net, a, r, eps=PIPELINE_EPS)
    g1, g2 = digon
    D = free_to_based(raw_contraction(digon_loop(g1, g2)))
    P = path_homotopy(g1, g2, D)
    rows = {
        "shorten_levels": (S.max_length, loop.length + 3.0 * via.width() + PIPELINE_EPS),
        "free_to_based": (F.max_length, H_raw.max_length + 2.0 * H_raw.width()),
        "contract_based_short": (C.max_length, 2.0 * cal.diameter + 5.0 * C.meta["W_measured"] + PIPELINE_EPS),
        "path_homotopy": (P.max_length, D.max_length + min(g1.length, g2.length)),
    }
    return {k: {"max_length": v, "bound": b, "ok": _within(v, b)} for k, (v, b) in rows.items()}


def criterion_6(ctx: SuiteContext):
    s, cal = ctx.sphere, ctx.calib
    rng = ctx.rng(6)
    north = s.locate([0.0, 0.0, 1.0])
    equator = _latitude_circle(s, 0.0)
    H_eq, _ = contract_in_ball(equator, north, math.pi / 2 * 1.02)
    p, q = s.locate(_on_equator(0.0)), s.locate(_on_equator(1.0))
    fixtures = [("equator", _pipeline_checks(s, cal, equator, H_eq, _digon(s, p, q, 0.6)))]
    for i in range(10):
        loop = _random_loop(s, rng, rho_max=0.8)
        p, q = _random_point_pair(s, rng, 0.4, 1.5)
        fixtures.append((f"random_{i}", _pipeline_checks(s, cal, loop, raw_contraction(loop),
                                                         _digon(s, p, q, rng.uniform(0.1, 0.6)))))
    ok = all(row["ok"] for _, rows in fixtures for row in rows.values())
    return ok, {"fixtures": dict(fixtures), "slack": SLACK}


def criterion_7(ctx: SuiteContext):
    s, cal = ctx.sphere, ctx.calib
    p, q = s.locate(_on_equator(0.0)), s.locate(_on_equator(1.0))
    a = spiral_sweepout(s, p, q, 10, max_length=20 * math.pi)
    # one extra loop family on the same circles: twice the windings, twice the length
    rho = math.asin((20 * math.pi - s.distance(p, q)) / (20 * math.pi))
    b = spiral_sweepout(s, p, q, 20, rho=rho)
    delta = 1.0
    ra, rb = compress_family(a, cal, delta), compress_family(b, cal, delta)
    agree = abs(ra.max_length - rb.max_length) / max(ra.max_length, rb.max_length)
    bound = ra.bound
    ok = agree <= 0.05 and _within(ra.max_length, bound) and _within(rb.max_length, bound)
    return ok, {"input_max_lengths": [a.max_length, b.max_length],
                "output_max_lengths": [ra.max_length, rb.max_length], "relative_gap": agree,
                "bound": bound, "W_emp": cal.W_emp, "diameter": cal.diameter, "delta": delta}


def criterion_8(ctx: SuiteContext):
    s = ctx.sphere
    rows = {}
    for eps in (0.6, 1.2, 2.4):
        c = build_cover(s, eps)
        lower = s.area / (2.0 * math.pi * (1.0 - math.cos(c.cover_radius)))
        upper = ball_count_bound(eps, math.pi, 2)
        rows[str(eps)] = {"centers": len(c), "cap_lower": lower, "ball_upper": upper.to_float(),
                          "ok": lower <= len(c) and upper.compare(float(len(c))) is not Ordering.LESS}
    return all(r["ok"] for r in rows.values()), rows


def _rel_close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300)


def _logscalar_cross_check(seed: int, trials: int = 10_000) -> int:
    """Count disagreements between LogScalar and float arithmetic on in-range operands."""
    rng = random.Random(seed)
    bad = 0
    for _ in range(trials):
        op = rng.choice(["add", "mul", "pow", "exp", "cmp"])
        x, y = 10 ** rng.uniform(-5, 5), 10 ** rng.uniform(-5, 5)
        a, b = LogScalar.from_float(x), LogScalar.from_float(y)
        if op == "add":
            bad += not _rel_close((a + b).to_float(), x + y, 1e-9)
        elif op == "mul":
            bad += not _rel_close((a * b).to_float(), x * y, 1e-9)
        elif op == "pow":
            e = rng.uniform(0, 3)
            if x**e < PROMOTE_AT:
                bad += not _rel_close((a ** LogScalar.from_float(e)).to_float(), x**e, 1e-9)
        elif op == "exp":
            z = max(rng.uniform(-50, 600), 0.0)
            bad += not _rel_close(LogScalar.from_float(z).exp().to_float(), math.exp(z), 1e-9)
        else:
            want = Ordering.LESS if x < y else Ordering.GREATER if x > y else Ordering.INDISTINGUISHABLE
            bad += a.compare(b) is not want
    return bad


def criterion_9(ctx: SuiteContext):
    s = ctx.sphere
    oracle = s.with_steiner(4 * s.steiner)
    rng = ctx.rng(9)
    worst, geo_bad = 0.0, 0
    for _ in range(200):
        p = SurfacePoint.make(int(rng.integers(s.n_faces)), rng.dirichlet([1, 1, 1]))
        q = SurfacePoint.make(int(rng.integers(s.n_faces)), rng.dirichlet([1, 1, 1]))
        d, g = s.distance(p, q), oracle.graph_distance(p, q)
        err = abs(d - g) / max(g, 1e-12)
        worst = max(worst, err)
        geo_bad += err > 2.0 * s.tol_geo
    nerve_rows = {}
    for eps in (1.2, 2.4):
        c = build_cover(s, eps)
        nerve_rows[str(eps)] = [(i, j) for i, j, _ in nerve(c)] == brute_force_nerve(c)
    log_bad = _logscalar_cross_check(ctx.seed)
    ok = geo_bad == 0 and all(nerve_rows.values()) and log_bad == 0
    return ok, {"geodesic_pairs": 200, "geodesic_failures": geo_bad, "worst_relative_error": worst,
                "tolerance": 2.0 * s.tol_geo, "nerve_matches": nerve_rows, "logscalar_cases": 10_000,
                "logscalar_failures": log_bad}


CRITERIA = {
    1: ("round-sphere geodesic multiplicity", criterion_1),
    2: ("bound calculus exactness", criterion_2),
    3: ("nested-log safety and monotonicity", criterion_3),
    4: ("epsilon-net property", criterion_4),
    5: ("close-curves width law", criterion_5),
    6: ("pipeline length laws", criterion_6),
    7: ("compression forgets input length", criterion_7),
    8: ("cover and packing counts", criterion_8),
    9: ("oracle equivalences", criterion_9),
}


def run_suite(seed: int = 0, only=None, ctx: SuiteContext | None = None) -> list[CriterionResult]:
    """Run the selected criteria (all by default) in numeric order."""
    ctx = ctx or SuiteContext(seed=seed)
    wanted = sorted(only) if only else sorted(CRITERIA)
    results = []
    for k in wanted:
        if k not in CRITERIA:
            raise KeyError(f"no acceptance criterion {k}")
        title, fn = CRITERIA[k]
        t0 = time.perf_counter()
        passed, details = fn(ctx)
        ctx.timing[f"criterion_{k}_total_seconds"] = time.perf_counter() - t0
        results.append(CriterionResult(k, title, bool(passed), details))
    return results
