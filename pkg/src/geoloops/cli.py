"""Command-line entry point: ``geoloops <subcommand> [flags]``.

Every subcommand prints one JSON report on stdout.  With an output
directory (``--output-dir`` or ``GEOLOOPS_OUTPUT_DIR``) the report is also
written to ``<dir>/<subcommand>.json``, next to ``<subcommand>.meta.json``
with timestamps and timings, plus CSV plot data when ``--csv`` is given.
Reports never contain wall-clock data, so equal configs give equal bytes.

Exit codes: 0 ok, 2 configuration error, 3 mesh error, 4 numerical
failure, 5 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import GeometryParams, InvalidParameter, bound_report
from .cover import EpsTooSmall, build_cover
from .homotopy import (
    ConeFailure,
    CurvesNotClose,
    EndpointMismatch,
    JumpDetectionFailure,
    NotAContraction,
    VariationTooLarge,
    calibrate,
    contract_based_short,
    contract_in_ball,
    digon_loop,
    free_to_based,
    homotope_close_curves,
    path_homotopy,
    raw_contraction,
)
from .loopspace import Curve, CurveTooLong, KindMismatch, Net, project_to_net, sup_distance
from .meshes import FIXTURES, load_fixture
from .surface import InvalidPoint, MeshError, Surface, SurfacePoint, invariants, load_surface
from .sweep import InsufficientGeodesics, Sweepout, compress_family, find_geodesics, spiral_sweepout

EXIT_OK, EXIT_CONFIG, EXIT_MESH, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 2, 3, 4, 5
OUTPUT_ENV = "GEOLOOPS_OUTPUT_DIR"

NUMERIC_ERRORS = (ConeFailure, JumpDetectionFailure, InsufficientGeodesics, ArithmeticError, np.linalg.LinAlgError)
CONFIG_ERRORS = (InvalidParameter, CurvesNotClose, NotAContraction, EndpointMismatch, VariationTooLarge,
                 KindMismatch, CurveTooLong, EpsTooSmall, InvalidPoint)


class ConfigError(ValueError):
    """Bad flags, config file or input document."""


@dataclass
class RunConfig:
    mesh_path: str | None = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    tol_geo: float = 0.01
    samples: int = 64
    jump_factor: float = 5.0
    output_dir: str | None = None

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not isinstance(self.params, dict):
            raise ConfigError("params must be a mapping")
        if not self.tol_geo > 0:
            raise ConfigError(f"tol_geo must be positive, got {self.tol_geo}")
        if int(self.samples) < 2:
            raise ConfigError(f"samples must be at least 2, got {self.samples}")
        if not self.jump_factor > 1:
            raise ConfigError(f"jump_factor must exceed 1, got {self.jump_factor}")

    def to_json(self, with_output: bool = True) -> dict:
        data = asdict(self)
        if not with_output:
            data.pop("output_dir")
        return data


# ------------------------------------------------------------------ parsing
PARAM_FLAGS = {"n": int, "k": float, "v": float, "D": float, "d": float, "c": float, "a": float,
               "delta": float, "l": int}


def _add_common(p: argparse.ArgumentParser, mesh: bool = True) -> None:
    p.add_argument("--config", help="JSON file holding a serialized RunConfig")
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--csv", action="store_true", help="also write CSV plot data (needs an output directory)")
    if mesh:
        p.add_argument("--mesh", dest="mesh_path", help=f"OFF/OBJ file or a bundled fixture: {', '.join(FIXTURES)}")
        p.add_argument("--tol-geo", type=float)
        p.add_argument("--samples", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoloops", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"geoloops {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="evaluate the explicit bound functions")
    _add_common(p, mesh=False)
    for name, kind in PARAM_FLAGS.items():
        p.add_argument(f"--{name}", type=kind)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)

    p = sub.add_parser("surface-stats", help="diameter, area and curvature of a mesh")
    _add_common(p)

    p = sub.add_parser("cover", help="greedy eps-cover and its nerve")
    _add_common(p)
    p.add_argument("--eps", type=float, required=True)

    p = sub.add_parser("net-project", help="snap a closed curve to the loop-space net")
    _add_common(p)
    p.add_argument("--curve", required=True, help="curve JSON file")
    p.add_argument("--eps", type=float, help="cover scale (default: calibrated net scale)")
    p.add_argument("--L", type=float, help="net length bound (default: c times the diameter)")

    p = sub.add_parser("homotopy-cone", help="cone a loop to a center")
    _add_common(p)
    p.add_argument("--curve", required=True)
    p.add_argument("--center", help="point; default picks a center inside the loop")
    p.add_argument("--radius", type=float)
    p.add_argument("--levels", action="store_true", help="include every level curve in the report")

    p = sub.add_parser("homotopy-close", help="straight-line homotopy between two close curves")
    _add_common(p)
    p.add_argument("--curve", required=True)
    p.add_argument("--curve2", required=True)
    p.add_argument("--levels", action="store_true")

    p = sub.add_parser("homotopy-short", help="based contraction through short loops")
    _add_common(p)
    p.add_argument("--curve", required=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--levels", action="store_true")

    p = sub.add_parser("homotopy-paths", help="fixed-endpoint homotopy between two paths")
    _add_common(p)
    p.add_argument("--curve", required=True)
    p.add_argument("--curve2", required=True)
    p.add_argument("--levels", action="store_true")

    p = sub.add_parser("geodesics", help="m distinct geodesics between two points")
    _add_common(p)
    p.add_argument("--p", required=True, help="point as x,y,z or face:b0,b1,b2 or v:index")
    p.add_argument("--q", required=True)
    p.add_argument("-m", type=int, required=True)

    p = sub.add_parser("spiral", help="write a spiral sweepout between two points")
    _add_common(p)
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--windings", type=int, required=True)
    p.add_argument("--max-length", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--members", type=int, default=32)

    p = sub.add_parser("compress", help="compress a sweepout to bounded length")
    _add_common(p)
    p.add_argument("--family", required=True, help="sweepout JSON file")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--fill", choices=("cone", "net"), default="cone")
    p.add_argument("--curves", action="store_true", help="include the output curves in the report")

    p = sub.add_parser("verify-all", help="run the acceptance suite")
    _add_common(p, mesh=False)
    p.add_argument("--only", help="comma-separated criterion numbers")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
    cfg = RunConfig.from_json(data)
    for name in ("mesh_path", "seed", "tol_geo", "samples", "output_dir"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if args.command == "bounds":
        cfg.params = {**cfg.params, **{k: getattr(args, k) for k in PARAM_FLAGS if getattr(args, k) is not None}}
    env = os.environ.get(OUTPUT_ENV)
    if env:
        cfg.output_dir = env
    cfg.validate()
    return cfg


def load_mesh(cfg: RunConfig) -> Surface:
    if not cfg.mesh_path:
        raise ConfigError("this subcommand needs --mesh (a file or a bundled fixture name)")
    path = Path(cfg.mesh_path)
    # default tolerance: share the plain fixture cache (and its calibration cache)
    kw = {} if cfg.tol_geo == RunConfig.tol_geo else {"tol_geo": cfg.tol_geo}
    if not path.exists() and cfg.mesh_path in FIXTURES:
        return load_fixture(cfg.mesh_path, **kw)
    return load_surface(path, **kw)


def parse_point(s: Surface, text: str) -> SurfacePoint:
    try:
        if text.startswith("v:"):
            return s.vertex_point(int(text[2:]))
        if ":" in text:
            face, rest = text.split(":", 1)
            return SurfacePoint.make(int(face), [float(x) for x in rest.split(",")])
        xyz = [float(x) for x in text.split(",")]
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"cannot parse point {text!r} ({exc})") from None
    if len(xyz) != 3:
        raise ConfigError(f"point {text!r} needs three coordinates")
    if not s.embedded:
        raise ConfigError("x,y,z points need an embedded mesh; use face:b0,b1,b2")
    return s.locate(xyz)


def read_json(path_text: str) -> dict:
    path = Path(path_text)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"input file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def read_curve(s: Surface, path_text: str) -> Curve:
    data = read_json(path_text)
    try:
        return Curve.from_json(s, data)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path_text}: not a curve document ({exc})") from None


# ------------------------------------------------------------------ reports
def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_plain, allow_nan=True) + "\n"


def _curve_rows(c: Curve, label: str, n: int):
    s = c.surface
    ts = np.linspace(0.0, 1.0, n)
    for t, x in zip(ts, c.points(ts)):
        xyz = s.xyz(x) if s.embedded else (math.nan,) * 3
        yield [label, f"{t:.10g}", x.face, *(f"{v:.17g}" for v in xyz)]


CURVE_HEADER = ["curve", "t", "face", "x", "y", "z"]


def _level_rows(H):
    return [[k, f"{c.length:.17g}"] for k, c in enumerate(H.levels)]


@dataclass
class Outcome:
    report: dict
    code: int = EXIT_OK
    csv: dict = field(default_factory=dict)  # file name -> (header, rows)
    timing: dict = field(default_factory=dict)


# ------------------------------------------------------------- subcommands
def cmd_bounds(args, cfg: RunConfig) -> Outcome:
    try:
        params = GeometryParams(**{k: PARAM_FLAGS[k](v) for k, v in cfg.params.items()})
    except KeyError as exc:
        raise ConfigError(f"unknown geometry parameter {exc}") from None
    rep = bound_report(params, args.c1, args.c2)
    return Outcome(rep.to_json())


def cmd_surface_stats(args, cfg: RunConfig) -> Outcome:
    s = load_mesh(cfg)
    inv = invariants(s, seed=cfg.seed)
    mesh = {"name": s.name, "vertices": s.n_vertices, "faces": s.n_faces, "embedded": s.embedded,
            "mean_edge_length": s.mean_edge_length, "tol_geo": s.tol_geo}
    return Outcome({"mesh": mesh, "invariants": inv.to_json()})


def cmd_cover(args, cfg: RunConfig) -> Outcome:
    s = load_mesh(cfg)
    c = build_cover(s, args.eps)
    rows = [[i, v, *(f"{x:.17g}" for x in s.V[v])] for i, v in enumerate(c.center_vertices)]
    return Outcome({"centers_count": len(c), **c.to_json()}, csv={"centers.csv": (["center", "vertex", "x", "y", "z"], rows)})


def _calib(cfg: RunConfig, s: Surface):
    return calibrate(s, seed=cfg.seed)


def cmd_net_project(args, cfg: RunConfig) -> Outcome:
    s = load_mesh(cfg)
    gamma = read_curve(s, args.curve)
    if args.eps is None or args.L is None:
        cal = _calib(cfg, s)
    eps = args.eps if args.eps is not None else cal.eps_net
    L = args.L if args.L is not None else cal.c * cal.diameter
    net = Net(build_cover(s, eps), L)
    e = project_to_net(gamma, net)
    d = sup_distance(gamma, e.curve, cfg.samples)
    rows = list(_curve_rows(gamma, "curve", 4 * cfg.samples)) + list(_curve_rows(e.curve, "element", 4 * cfg.samples))
    return Outcome({"eps": eps, "L": L, "key": list(e.key), "center_indices": list(e.center_indices),
                    "curve_length": gamma.length, "element_length": e.curve.length, "sup_distance": d,
                    "distance_bound": 5.0 * eps / 6.0, "element": e.curve.to_json()},
                   csv={"projection.csv": (CURVE_HEADER, rows)})


def _homotopy_outcome(H, args, extra: dict) -> Outcome:
    report = {**extra, "homotopy": H.to_json(with_levels=args.levels)}
    return Outcome(report, csv={"levels.csv": (["level", "length"], _level_rows(H))})


def cmd_homotopy_cone(args, cfg: RunConfig) -> Outcome:
    s = load_mesh(cfg)
    loop = read_curve(s, args.curve)
    if args.center is None:
        H = raw_contraction(loop, t_samples=cfg.samples)
        return _homotopy_outcome(H, args, {"center": H.last.start.to_json()})
    center = parse_point(s, args.center)
    radius = args.radius if args.radius is not None else max(s.distance(center, x) for x in loop.points(
        np.linspace(0.0, 1.0, cfg.samples, endpoint=False))) * (1 + s.tol_geo)
    H, ball = contract_in_ball(loop, center, radius, t_samples=cfg.samples)
    return _homotopy_outcome(H, args, {"ball": ball.to_json()})


def cmd_homotopy_close(args, cfg: RunConfig) -> Outcome:
    s = load_mesh(cfg)
    a, b = read_curve(s, args.curve), read_curve(s, args.curve2)
    cal = _calib(cfg, s)
    H = homotope_close_curves(a, b, cal.a, cal.r_emp, t_samples=cfg.samples)
    return _homotopy_outcome(H, args, {"bound": cal.close_bound, "sup_distance": sup_distance(a, b, cfg.samples)})


def cmd_homotopy_short(args, cfg: RunConfig) -> Outcome:
    s = load_mesh(cfg)
    loop = read_curve(s, args.curve)
    cal = _calib(cfg, s)
    H_raw = raw_contraction(loop, t_samples=cfg.samples)
    C = contract_based_short(loop, H_raw, cal.net, cal.a, cal.r_emp, eps=args.eps)
    eps = C.meta.get("eps", args.eps)
    bound = 2.0 * cal.diameter + 5.0 * C.meta["W_measured"] + (eps or 0.0)
    return _homotopy_outcome(C, args, {"bound": bound, "diameter": cal.diameter})


def cmd_homotopy_paths(args, cfg: RunConfig) -> Outcome:
    s = load_mesh(cfg)
    g1, g2 = read_curve(s, args.curve), read_curve(s, args.curve2)
    C = free_to_based(raw_contraction(digon_loop(g1, g2), t_samples=cfg.samples))
    P = path_homotopy(g1, g2, C)
    return _homotopy_outcome(P, args, {"bound": C.max_length + min(g1.length, g2.length),
                                       "contraction_max_length": C.max_length})


def cmd_geodesics(args, cfg: RunConfig) -> Outcome:
    s = load_mesh(cfg)
    p, q = parse_point(s, args.p), parse_point(s, args.q)
    if args.m < 1:
        raise ConfigError("-m must be at least 1")
    trace: dict = {}
    t0 = time.perf_counter()
    gs = find_geodesics(s, p, q, args.m, report=trace)
    rows = [row for k, g in enumerate(gs) for row in _curve_rows(g, f"geodesic_{k}", 4 * cfg.samples)]
    return Outcome({"lengths": [g.length for g in gs], "curves": [g.to_json() for g in gs], "search": trace},
                   csv={"geodesics.csv": (CURVE_HEADER, rows)}, timing={"search_seconds": time.perf_counter() - t0})


def cmd_spiral(args, cfg: RunConfig) -> Outcome:
    s = load_mesh(cfg)
    p, q = parse_point(s, args.p), parse_point(s, args.q)
    f = spiral_sweepout(s, p, q, args.windings, args.max_length, members=args.members, rho=args.rho)
    return Outcome(f.to_json())


def cmd_compress(args, cfg: RunConfig) -> Outcome:
    s = load_mesh(cfg)
    data = read_json(args.family)
    if isinstance(data, dict) and "family" not in data and isinstance(data.get("result"), dict):
        data = data["result"]  # a saved `spiral` report
    try:
        f = Sweepout.from_json(s, data)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{args.family}: not a sweepout document ({exc})") from None
    cal = _calib(cfg, s)
    out = compress_family(f, cal, args.delta, fill=args.fill, jump_factor=cfg.jump_factor)
    rows = [[k, f"{a:.17g}", f"{b:.17g}"] for k, (a, b) in enumerate(zip(f.lengths(), out.sweepout.lengths()))
            ] if len(f.family) == len(out.sweepout.family) else []
    report = out.to_json(with_curves=args.curves)
    report["calibration"] = cal.to_json()
    return Outcome(report, csv={"lengths.csv": (["member", "input_length", "output_length"], rows)} if rows else {})


def cmd_verify_all(args, cfg: RunConfig) -> Outcome:
    from .acceptance import SuiteContext, run_suite

    try:
        only = [int(x) for x in args.only.split(",")] if args.only else None
    except ValueError:
        raise ConfigError(f"--only expects comma-separated integers, got {args.only!r}") from None
    ctx = SuiteContext(seed=cfg.seed)
    try:
        results = run_suite(cfg.seed, only, ctx)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    passed = all(r.passed for r in results)
    report = {"seed": cfg.seed, "passed": passed, "criteria": [r.to_json() for r in results]}
    return Outcome(report, EXIT_OK if passed else EXIT_ACCEPTANCE, timing=dict(ctx.timing))


COMMANDS = {
    "bounds": cmd_bounds,
    "surface-stats": cmd_surface_stats,
    "cover": cmd_cover,
    "net-project": cmd_net_project,
    "homotopy-cone": cmd_homotopy_cone,
    "homotopy-close": cmd_homotopy_close,
    "homotopy-short": cmd_homotopy_short,
    "homotopy-paths": cmd_homotopy_paths,
    "geodesics": cmd_geodesics,
    "spiral": cmd_spiral,
    "compress": cmd_compress,
    "verify-all": cmd_verify_all,
}


def _emit(args, cfg: RunConfig, out: Outcome, started: datetime, seconds: float, stdout) -> None:
    report = {"command": args.command, "config": cfg.to_json(with_output=False), "exit_code": out.code,
              "result": out.report}
    text = dumps(report)
    stdout.write(text)
    if not cfg.output_dir:
        if args.csv:
            print("note: --csv needs an output directory; no CSV written", file=sys.stderr)
        return
    root = Path(cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    (root / f"{args.command}.json").write_text(text)
    meta = {"started": started.isoformat(), "finished": datetime.now(timezone.utc).isoformat(),
            "seconds": seconds, "timing": out.timing, "version": __version__, "output_dir": str(root)}
    (root / f"{args.command}.meta.json").write_text(dumps(meta))
    if args.csv:
        for name, (header, rows) in out.csv.items():
            with open(root / name, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows(rows)


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(args)
        out = COMMANDS[args.command](args, cfg)
    except MeshError as exc:
        print(f"geoloops: mesh error: {exc}", file=sys.stderr)
        return EXIT_MESH
    except NUMERIC_ERRORS as exc:
        print(f"geoloops: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, *CONFIG_ERRORS, ValueError) as exc:
        # library ValueErrors all mean "these inputs do not satisfy the preconditions"
        print(f"geoloops: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(args, cfg, out, started, time.perf_counter() - t0, stdout)
    return out.code


if __name__ == "__main__":
    sys.exit(main())
