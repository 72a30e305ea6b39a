import json

import pytest

from app.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_analyze_bundled_file(capsys, data_dir):
    code, out = run(capsys, "analyze", str(data_dir / "inequalities" / "antihole7.ineq"))
    assert code == 0
    envelope = json.loads(out)
    assert envelope["report"]["alpha"] == "2"
    assert envelope["report"]["alpha_hat"] == "2"
    assert envelope["digest"].startswith("sha256:")
    assert envelope["timings"] is None


def test_analyze_with_timings_and_dot(capsys):
    code, out = run(capsys, "analyze", "--generate", "h1", "--timings", "--dot")
    assert code == 0
    body, _, dot = out.partition("\ngraph ")
    assert json.loads(body)["timings"]
    assert "[color=" in dot


def test_empty_inequality_is_an_input_error(capsys, tmp_path, data_dir):
    path = tmp_path / "empty.ineq"
    path.write_text("# nothing here\n")
    code, _ = run(capsys, "analyze", str(path), "--scenario", str(data_dir / "scenarios" / "broadcast_3_2_2.json"))
    assert code == 2


def test_analyze_needs_a_source(capsys):
    assert run(capsys, "analyze")[0] == 2
    # Abstract graphs have no scenario to digest against.
    assert run(capsys, "analyze", "--generate", "cycle:5")[0] == 2


def test_verify_polytope_fixture(capsys):
    code, out = run(capsys, "verify-paper", "--only", "polytope")
    assert code == 0
    assert "c5.qstab_vertices" in out
    assert "1/1 fixtures passed" in out


def test_verify_reports_failure_for_changed_weights(capsys):
    code, out = run(capsys, "verify-paper", "--only", "alpha_hat", "--h1-weight", "11/10")
    assert code == 1
    assert "FAIL" in out


def test_search_rejects_small_sizes(capsys):
    assert run(capsys, "search", "--max-size", "4")[0] == 2
    assert run(capsys, "search", "--palette", "1,-2")[0] == 2


def test_vertices_of_c5_qstab(capsys):
    code, out = run(capsys, "vertices", "--generate", "cycle:5", "--kind", "qstab")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 12
    assert "1/2 1/2 1/2 1/2 1/2" in lines


def test_graph_export(capsys, tmp_path):
    png = tmp_path / "m8.png"
    code, out = run(capsys, "graph", "--generate", "mobius:4", "--png", str(png))
    assert code == 0
    assert out.startswith("graph mobius_8 {")
    assert "color=red" in out and "color=blue" in out
    assert png.stat().st_size > 0


def test_quantum_builtin(capsys):
    code, out = run(capsys, "quantum", "--generate", "h1", "--builtin", "ghz")
    assert code == 0
    result = json.loads(out)
    assert result["value"] == pytest.approx(2.042, abs=5e-3)
    assert result["no_signaling"]


def test_quantum_needs_a_strategy(capsys):
    assert run(capsys, "quantum", "--generate", "h1")[0] == 2


def test_unknown_generator_kind(capsys):
    assert run(capsys, "graph", "--generate", "petersen:10")[0] == 2
    assert run(capsys, "graph", "--generate", "cycle")[0] == 2
