import csv
import io
import json
import math
from pathlib import Path

import pytest

from geoloops.cli import RunConfig, main
from geoloops.homotopy import geodesic_circle
from geoloops.loopspace import Curve

from conftest import circle_of_latitude, on_equator


def run(argv):
    buf = io.StringIO()
    rc = main(argv, stdout=buf)
    return rc, (json.loads(buf.getvalue()) if buf.getvalue() else None)


def write_curve(path: Path, curve: Curve) -> str:
    path.write_text(json.dumps(curve.to_json()))
    return str(path)


def test_bounds_example():
    rc, rep = run(["bounds", "--n", "2", "--v", "1", "--D", "1", "--c", "2", "--a", "4", "--c1", "1", "--c2", "1"])
    assert rc == 0
    r, R = rep["result"]["r"], rep["result"]["R"]
    assert r["lo"] <= math.exp(-1) <= r["hi"] and r["hi"] - r["lo"] < 1e-12
    assert R["lo"] <= math.e <= R["hi"]
    assert set(r) == {"level", "lo", "hi"}


def test_bounds_rejects_bad_params(capsys):
    rc, _ = run(["bounds", "--a", "1.5"])
    assert rc == 2
    assert "a must be > 2" in capsys.readouterr().err


def test_missing_mesh_names_the_path(capsys, tmp_path):
    missing = tmp_path / "nowhere.off"
    rc, rep = run(["surface-stats", "--mesh", str(missing)])
    assert rc == 3 and rep is None
    assert str(missing) in capsys.readouterr().err


def test_unknown_subcommand_and_flags():
    assert main(["frobnicate"]) == 2
    assert main(["cover", "--mesh", "sphere_coarse"]) == 2  # --eps is required


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"mesh_path": "torus", "seed": 3, "params": {}}))
    rc, rep = run(["surface-stats", "--config", str(cfg), "--seed", "4"])
    assert rc == 0
    assert rep["config"]["seed"] == 4 and rep["config"]["mesh_path"] == "torus"
    assert rep["result"]["mesh"]["faces"] == 512


@pytest.mark.parametrize("payload", [{"bogus": 1}, {"tol_geo": -1.0}, "[1, 2]"])
def test_bad_config_files(tmp_path, payload):
    cfg = tmp_path / "bad.json"
    cfg.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    assert main(["surface-stats", "--config", str(cfg)]) == 2
    assert main(["surface-stats", "--config", str(tmp_path / "absent.json")]) == 2


def test_config_round_trip():
    cfg = RunConfig(mesh_path="m.off", params={"n": 3}, seed=7)
    assert RunConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg


def test_reports_are_byte_identical(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["cover", "--mesh", "torus", "--eps", "1.0", "--output-dir", str(a), "--csv"], stdout=io.StringIO()) == 0
    monkeypatch.setenv("GEOLOOPS_OUTPUT_DIR", str(b))
    assert main(["cover", "--mesh", "torus", "--eps", "1.0", "--csv"], stdout=io.StringIO()) == 0
    assert (a / "cover.json").read_bytes() == (b / "cover.json").read_bytes()
    meta = json.loads((a / "cover.meta.json").read_text())
    assert {"started", "finished", "seconds"} <= set(meta)
    rows = list(csv.reader((a / "centers.csv").open()))
    assert rows[0] == ["center", "vertex", "x", "y", "z"]
    assert len(rows) - 1 == len(json.loads((a / "cover.json").read_text())["result"]["center_vertices"])


def test_geodesics_command(tmp_path):
    rc, rep = run(["geodesics", "--mesh", "sphere_coarse", "--p", "1,0,0", "--q", "0,1,0", "-m", "1"])
    assert rc == 0
    assert rep["result"]["lengths"][0] == pytest.approx(math.pi / 2, rel=0.01)
    assert len(rep["result"]["curves"]) == 1
    assert main(["geodesics", "--mesh", "sphere_coarse", "--p", "1,0", "--q", "0,1,0", "-m", "1"]) == 2
    assert main(["geodesics", "--mesh", "sphere_coarse", "--p", "v:0", "--q", "v:5", "-m", "0"]) == 2


def test_net_project_command(tmp_path, sphere):
    path = write_curve(tmp_path / "c.json", circle_of_latitude(sphere, 1.2, n=16))
    rc, rep = run(["net-project", "--mesh", "sphere_coarse", "--curve", path, "--eps", "0.6", "--L", "3.0"])
    assert rc == 0
    res = rep["result"]
    assert res["sup_distance"] < res["distance_bound"] + (res["curve_length"] + res["element_length"]) / 64
    assert main(["net-project", "--mesh", "sphere_coarse", "--curve", path, "--eps", "0.6", "--L", "0.1"]) == 2


def test_homotopy_cone_commands(tmp_path, sphere):
    path = write_curve(tmp_path / "c.json", circle_of_latitude(sphere, 1.0, n=16))
    rc, rep = run(["homotopy-cone", "--mesh", "sphere_coarse", "--curve", path, "--center", "0,0,1"])
    assert rc == 0
    h = rep["result"]["homotopy"]
    assert h["kind"] == "free-closed" and h["width"] <= rep["result"]["ball"]["radius"] * 1.05
    rc, rep = run(["homotopy-cone", "--mesh", "sphere_coarse", "--curve", path, "--levels"])
    assert rc == 0 and rep["result"]["homotopy"]["levels"]
    # too small a ball is an input error
    assert main(["homotopy-cone", "--mesh", "sphere_coarse", "--curve", path, "--center", "0,0,1",
                 "--radius", "0.1"], stdout=io.StringIO()) == 2


def test_cone_failure_is_numerical(tmp_path, sphere):
    s = sphere
    center = s.locate([math.sin(0.5), 0.0, -math.cos(0.5)])
    path = write_curve(tmp_path / "c.json", geodesic_circle(s, center, 0.5, n=48))
    rc = main(["homotopy-cone", "--mesh", "sphere_coarse", "--curve", path, "--center", "0,0,1",
               "--radius", str(math.pi * 1.02)], stdout=io.StringIO())
    assert rc == 4


def test_homotopy_paths_command(tmp_path, sphere):
    s = sphere
    p, q = s.locate(on_equator(0.0)), s.locate(on_equator(1.0))
    top = s.locate([math.cos(0.5), math.sin(0.5), 0.5])
    a = write_curve(tmp_path / "a.json", Curve.from_breakpoints(s, [p, q]))
    b = write_curve(tmp_path / "b.json", Curve.from_breakpoints(s, [p, top, q]))
    rc, rep = run(["homotopy-paths", "--mesh", "sphere_coarse", "--curve", a, "--curve2", b])
    assert rc == 0
    h = rep["result"]["homotopy"]
    assert h["kind"] == "fixed-endpoints"
    assert h["max_length"] <= rep["result"]["bound"] * (1 + 1e-9)


def test_spiral_then_compress_rejects_coarse_family(tmp_path):
    fam = tmp_path / "f.json"
    buf = io.StringIO()
    rc = main(["spiral", "--mesh", "sphere_coarse", "--p", "1,0,0", "--q", "0.5403,0.8415,0", "--windings", "1",
               "--max-length", "8", "--members", "4"], stdout=buf)
    assert rc == 0
    fam.write_text(buf.getvalue())  # the whole report is accepted
    # four members around a circle of radius ~1 vary far more than delta
    assert main(["compress", "--mesh", "sphere_coarse", "--family", str(fam), "--delta", "0.01"],
                stdout=io.StringIO()) == 2


def test_verify_all_subset(tmp_path):
    rc, rep = run(["verify-all", "--only", "2,3", "--output-dir", str(tmp_path)])
    assert rc == 0
    assert rep["result"]["passed"] and [c["criterion"] for c in rep["result"]["criteria"]] == [2, 3]
    assert main(["verify-all", "--only", "42"]) == 2
    assert main(["verify-all", "--only", "two"]) == 2


def test_verify_all_failure_exit_code(monkeypatch):
    from geoloops import acceptance

    monkeypatch.setitem(acceptance.CRITERIA, 2, ("forced", lambda ctx: (False, {})))
    rc, rep = run(["verify-all", "--only", "2"])
    assert rc == 5 and rep["exit_code"] == 5 and not rep["result"]["passed"]
