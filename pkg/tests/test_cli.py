import json

import numpy as np
import pytest

from sss.cli import METHOD_CHOICES, main
from sss.graph import load_graph


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "g.txt"
    assert main(["gen-graph", "--family", "er", "--n", "40", "--seed", "2", "--param", "p=0.2", "--out", str(path)]) == 0
    return path


def test_gen_graph(graph_file):
    g = load_graph(graph_file)
    assert g.n == 40 and g.is_connected()


@pytest.mark.parametrize("method", METHOD_CHOICES)
def test_select_writes_sample_set(graph_file, tmp_path, method):
    out = tmp_path / "s.json"
    assert main(["select", "--method", method, "--graph", str(graph_file), "--budget", "6", "--band", "5", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["n"] == 40 and len(doc["selected"]) == 6 and len(set(doc["selected"])) == 6


@pytest.mark.parametrize("scheme", ["bandlimited", "localized", "locop", "regularized"])
@pytest.mark.parametrize("full", [True, False])
def test_reconstruct(graph_file, tmp_path, scheme, full):
    samples = tmp_path / "s.json"
    main(["select", "--method", "maxfrob", "--graph", str(graph_file), "--budget", "10", "--band", "5", "--out", str(samples)])
    sel = json.loads(samples.read_text())["selected"]
    values = np.arange(40, dtype=float) / 40
    signal = tmp_path / "f.csv"
    np.savetxt(signal, values if full else values[sel])
    out = tmp_path / "fhat.csv"
    args = ["reconstruct", "--scheme", scheme, "--graph", str(graph_file), "--samples", str(samples)]
    assert main(args + ["--signal", str(signal), "--band", "5", "--k", "2", "--out", str(out)]) == 0
    assert np.loadtxt(out).shape == (40,)


def test_reconstruct_length_mismatch(graph_file, tmp_path, capsys):
    samples = tmp_path / "s.json"
    samples.write_text(json.dumps({"n": 40, "selected": [0, 1, 2]}))
    signal = tmp_path / "f.csv"
    np.savetxt(signal, np.ones(7))
    code = main(["reconstruct", "--scheme", "bandlimited", "--graph", str(graph_file), "--samples", str(samples), "--signal", str(signal)])
    assert code == 2 and "expected n=40" in capsys.readouterr().err


def test_bad_graph_file(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("n 2\n0 0 1\n")
    assert main(["select", "--method", "maxfrob", "--graph", str(bad), "--budget", "1"]) == 2
    assert "line 2" in capsys.readouterr().err


def test_validate_identities(capsys):
    assert main(["validate-identities", "--n", "10", "--trials", "3"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 8 and "FAIL" not in out


def test_experiment_command(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("family = erdos_renyi\nn = 40\ngraph.p = 0.2\nmethods = proposed, maxfrob\nsample_sizes = 10\nband_size = 8\ntrials = 1\n")
    assert main(["experiment", "--config", str(cfg), "--out-dir", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "results.csv").exists()
    assert (tmp_path / "out" / "mse_erdos_renyi.svg").exists()
