from __future__ import annotations

import json
import subprocess
import sys

import pytest

from lrpo.cli import main
from lrpo.graph import Graph
from lrpo.randomness import SeedBundle


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "g.txt"
    assert main(["generate", "--generator", "grid", "--n", "64", "--shuffle", "--out", str(path)]) == 0
    return path


def test_generate_stdout(capsys):
    assert main(["generate", "--generator", "cycle", "--n", "5"]) == 0
    g = Graph.loads(capsys.readouterr().out)
    assert g.n == 5 and g.num_edges() == 5


def test_partition_and_oracle_agree(graph_file, capsys):
    assert main(["partition", "--graph", str(graph_file), "--rng-seed", "3", "--json"]) == 0
    part = json.loads(capsys.readouterr().out)
    assert part["problems"] == []
    seed_hex = part["seed_hex"]
    assert SeedBundle.from_hex(None, 0, 0, seed_hex).digest() == part["seed_digest"]
    comp_of = {v: c for c in part["components"] for v in c}
    for v in list(comp_of)[:6]:
        assert main(["oracle", "--graph", str(graph_file), "--seed-hex", seed_hex, "--vertex", str(v), "--json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["component"] == comp_of[v]
        assert out["queries"]["neighbor_queries"] >= 0


def test_partition_text_and_params_file(graph_file, tmp_path, capsys):
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"epsilon": 0.5, "d": 4, "rho": 0.01, "ell": 10, "delta": 0.1, "b": 8,
                                  "hbar": 20, "phi": 0.4, "beta": 0.4, "sample_budget": 16}))
    out = tmp_path / "res.txt"
    assert main(["partition", "--graph", str(graph_file), "--params-file", str(params), "--out", str(out)]) == 0
    assert "valid=True" in out.read_text()


def test_usage_errors(graph_file, tmp_path, capsys):
    assert main(["nope"]) == 2
    assert main(["oracle", "--graph", str(graph_file), "--vertex", "9999"]) == 2
    assert main(["partition"]) == 2
    assert main(["partition", "--graph", str(tmp_path / "missing.txt")]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2 5\n1 1 2\n")
    assert main(["partition", "--graph", str(bad)]) == 2
    assert main(["partition", "--graph", str(graph_file), "--seed-hex", "zz"]) == 2
    assert main(["lowerbound", "--family", str(tmp_path / "none.json")]) == 2
    capsys.readouterr()


def test_lowerbound(capsys):
    from pathlib import Path

    fam = Path(__file__).parent / "data" / "family_r1_q3.json"
    assert main(["lowerbound", "--family", str(fam), "--n", "10000", "--q", "3", "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["ok"] and rep["all_uniform"] and rep["implied_cut_fraction"] >= 1 - 1 / 9
    assert main(["lowerbound", "--family", str(fam), "--q", "2"]) == 2
    assert main(["lowerbound", "--n", "2000", "--q", "2", "--r", "1"]) in (0, 1)
    assert "implied_cut_fraction" in capsys.readouterr().out


def test_calibrate_and_report(tmp_path, capsys):
    assert main(["calibrate", "--generator", "cycle", "--n", "64", "--target", "0.3", "--seeds", "2", "--json"]) == 0
    cal = json.loads(capsys.readouterr().out)
    assert cal["ok"]
    pfile = tmp_path / "p.json"
    pfile.write_text(json.dumps(cal["params"]))
    base = tmp_path / "rep"
    argv = ["report", "--generator", "cycle", "--n", "64", "--seeds", "3", "--params-file", str(pfile), "--out", str(base)]
    assert main(argv) == 0
    first = (tmp_path / "rep.jsonl").read_text()
    assert main(argv) == 0
    assert (tmp_path / "rep.jsonl").read_text() == first
    assert (tmp_path / "rep.csv").read_text().count("\n") == 4
    assert main(["calibrate", "--generator", "cycle", "--n", "16", "--target", "0.0001", "--seeds", "1"]) == 1
    capsys.readouterr()


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "lrpo.cli", "generate", "--generator", "path", "--n", "3"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.startswith("3 ")
