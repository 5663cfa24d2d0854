import json

import numpy as np
import pytest

from epr_losr.assemblages import Assemblage, family_S
from epr_losr.cli import run


def build(tmp_path, name, *args):
    path = tmp_path / name
    assert run(["build-family", *args, "--out", str(path)]) == 0
    return str(path)


def test_build_then_validate(tmp_path, capsys):
    path = build(tmp_path, "a.json", "S", "--theta", "0.5236", "--p", "0.9")
    a = Assemblage.from_json(json.loads(open(path).read()))
    assert np.abs(a.elements - family_S(0.5236, 0.9).elements).max() == 0
    assert run(["validate", path]) == 0


def test_validate_flags_defect(tmp_path):
    obj = family_S(0.4, 1).to_json()
    obj["elements"][0]["matrix"]["re"][0][0] *= 1.1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(obj))
    assert run(["validate", str(path)]) == 1


def test_convert_reflexive(tmp_path, capsys):
    path = build(tmp_path, "s.json", "S", "--theta", "0.7", "--p", "1")
    cert = tmp_path / "cert.json"
    assert run(["convert", "--src", path, "--dst", path, "--certificate", str(cert)]) == 0
    assert "feasible" in capsys.readouterr().out
    assert len(json.loads(cert.read_text())["combs"]) == 64


def test_convert_negative(tmp_path):
    src = build(tmp_path, "src.json", "S", "--theta", "0.2617993877991494", "--p", "1")
    dst = build(tmp_path, "dst.json", "S", "--theta", "0.7853981633974483", "--p", "0.9")
    assert run(["convert", "--src", src, "--dst", dst]) == 1


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"scenario": {\n  "n_inputs": [2,,]}}')
    assert run(["validate", str(path)]) == 64
    assert f"{path}:2:" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert run(["no-such-command"]) == 64
    assert run(["build-family", "S", "--theta", "3.0"]) == 64
    path = build(tmp_path, "s.json", "S", "--theta", "0.5")
    assert run(["convert", "--src", path, "--dst", path, "--eps-feasible", "1e-3", "--eps-infeasible", "1e-5"]) == 64
    cfg = tmp_path / "cfg"
    cfg.write_text("bogus = 1\n")
    assert run(["check-free", "--input", path, "--config", str(cfg)]) == 64


def test_config_file(tmp_path, capsys):
    path = build(tmp_path, "s.json", "S", "--theta", "0.2617993877991494", "--p", "0.8")
    cfg = tmp_path / "cfg"
    cfg.write_text("# thresholds\neps-feasible = 1e-6\neps_infeasible = 1e-4\nworkers = 2\n")
    assert run(["check-free", "--input", path, "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.startswith("free")


def test_check_free_models(tmp_path):
    s = build(tmp_path, "s.json", "S", "--theta", "0.7853981633974483")
    assert run(["check-free", "--input", s]) == 1
    g = build(tmp_path, "g.json", "GHZ", "--theta", "0.7853981633974483", "--n-parties", "3")
    for model in ("losr", "general", "tolhs"):
        assert run(["check-free", "--model", model, "--input", g]) == 1
    assert run(["check-free", "--model", "lhs", "--input", g]) == 64


def test_functional_output(tmp_path, capsys):
    path = build(tmp_path, "s.json", "S", "--theta", "0.5235987755982988")
    assert run(["functional", "--eta", "0.5235987755982988", "--eval", path]) == 0
    lines = dict(line.split() for line in capsys.readouterr().out.splitlines())
    assert abs(float(lines["value"]) - 3.0237157840738) < 1e-9
    assert abs(float(lines["value"]) - float(lines["quantum_max"])) < 1e-9
    assert run(["functional", "--eta", "0.5", "--n-parties", "3"]) == 0
    assert "quantum_max 5.65685424949" in capsys.readouterr().out


def test_monotone_commands(tmp_path, capsys):
    path = build(tmp_path, "s.json", "S", "--theta", "0.7853981633974483")
    assert run(["monotone", "--kind", "weight", "--input", path]) == 0
    assert abs(float(capsys.readouterr().out.split()[1]) - 1) < 1e-6
    assert run(["monotone", "--kind", "yield", "--eta", "0.7853981633974483", "--input", path]) == 0
    assert abs(float(capsys.readouterr().out.split()[1]) - 2 * np.sqrt(2)) < 1e-6
    assert run(["monotone", "--kind", "yield", "--input", path]) == 64


def test_locc_apply(tmp_path, capsys):
    src = build(tmp_path, "s.json", "S", "--theta", "0.7853981633974483")
    out = tmp_path / "out.json"
    assert run(["locc-apply", "--map", "appendixF-stoch", "--theta", "0.5235987755982988",
                "--input", src, "--out", str(out)]) == 0
    assert "success_probability 0.5" in capsys.readouterr().out
    a = Assemblage.from_json(json.loads(out.read_text()))
    assert np.abs(a.elements - family_S(0.5235987755982988, 1).elements).max() < 1e-10


def test_preorder_directory(tmp_path, capsys):
    fam = tmp_path / "fam"
    fam.mkdir()
    build(fam, "a_strong.json", "S", "--theta", "0.7853981633974483", "--p", "1")
    build(fam, "b_weak.json", "S", "--theta", "0.7853981633974483", "--p", "0.5")
    gj = tmp_path / "g.json"
    assert run(["preorder", "--family", str(fam), "--out-json", str(gj)]) == 0
    graph = json.loads(gj.read_text())
    assert [(e["src"], e["dst"]) for e in graph["edges"]] == [("a_strong", "b_weak")]
    assert '"a_strong" -> "b_weak";' in capsys.readouterr().out
    assert run(["preorder", "--family", str(tmp_path / "missing")]) == 64


@pytest.mark.slow
def test_reproduce_fig3(tmp_path, capsys):
    dot, gj = tmp_path / "fig3.dot", tmp_path / "fig3.json"
    assert run(["reproduce-fig3", "--out", str(dot), "--out-json", str(gj), "--workers", "4"]) == 0
    assert '"S(pi/12;0.8)" [label="S(pi/12;0.8)" style=filled fillcolor=grey]' in dot.read_text()
    graph = json.loads(gj.read_text())
    assert [n["name"] for n in graph["nodes"] if n["free"]] == ["S(pi/12;0.8)"]
    assert graph["indeterminate"] == []
