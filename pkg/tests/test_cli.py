import json
import os

import numpy as np
import pytest

from shapeopt.cli import main, parse_config, ConfigError, RunConfig, verify


def test_parse_named_case():
    cfg = parse_config("example2")
    assert cfg.case == "example2"


def test_parse_unknown_case():
    with pytest.raises(ConfigError, match="unknown case"):
        parse_config("example99")


def test_parse_config_file(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("""
[case]
name = example1

[mesh]
vertices = ~260

[solver]
tol = 1e-8
max_iter = 40

[problem]
alpha_lower = -1.0
alpha_upper = 1.0

[output]
directory = {}
""".format(tmp_path / "out"))
    cfg = parse_config(str(p))
    assert cfg.case == "example1"
    assert cfg.mesh_vertices == 260
    assert cfg.max_iter == 40
    assert cfg.alpha_upper == 1.0


def test_malformed_key_names_key(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[solver]\nbogus_key = 3\n")
    rc = main(["run", str(p)])
    captured = capsys.readouterr()
    assert rc == 2
    assert "solver.bogus_key" in captured.err


def test_bad_value_names_key(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[solver]\ntol = not-a-number\n")
    rc = main(["run", str(p)])
    captured = capsys.readouterr()
    assert rc == 2
    assert "solver.tol" in captured.err


def test_mesh_subcommand_roundtrip(tmp_path):
    rc = main(["mesh", "example1", "--mesh-vertices", "60",
               "--out", str(tmp_path)])
    assert rc == 0
    from shapeopt.mesh import load_mesh
    text = (tmp_path / "mesh.txt").read_text()
    mesh = load_mesh(text)
    assert mesh.num_vertices >= 40


def test_run_small_artifacts(tmp_path):
    out = tmp_path / "out"
    rc = main(["run", "example1", "--mesh-vertices", "80",
               "--alpha-bound", "1.0", "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "optimal"
    assert report["delta"] <= 1e-5
    assert report["case"] == "example1"
    assert (out / "wss.csv").exists()
    assert (out / "alpha.csv").exists()
    assert (out / "shape.svg").exists()
    assert (out / "solver.log").exists()
    header = (out / "wss.csv").read_text().splitlines()[0]
    assert header.split(",") == ["component", "arclength", "sigma_ref",
                                 "sigma_target", "sigma_opt", "band_lower",
                                 "band_upper"]
    svg = (out / "shape.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg


def test_run_report_delta_consistency(tmp_path):
    out = tmp_path / "out"
    rc = main(["run", "example1", "--mesh-vertices", "80",
               "--alpha-bound", "1.0", "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert abs(report["delta"] - report["achieved_sup_misfit"]) <= 1e-6 + 1e-6 * report["delta"]


def test_run_deterministic_reports(tmp_path):
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        rc = main(["run", "example1", "--mesh-vertices", "80",
                   "--alpha-bound", "1.0", "--out", str(out)])
        assert rc == 0
        rep = json.loads((out / "report.json").read_text())
        rep.pop("wall_time_s")
        outs.append(json.dumps(rep, sort_keys=True))
    assert outs[0] == outs[1]


def test_verify_passes(capsys):
    cfg = RunConfig(case="example3", mesh_vertices=150)
    rc = verify(cfg)
    captured = capsys.readouterr()
    assert rc == 0
    assert "FAIL" not in captured.out
