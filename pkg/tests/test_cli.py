import csv
import io as _io
import json

import pytest

from hamsparse import io
from hamsparse.cli import EXIT_ERROR, EXIT_FAIL, EXIT_USAGE, main
from hamsparse.instances import InstanceSpec, generate_instance
from hamsparse.runner import BENCH_COLUMNS, ConfigError, ExperimentConfig, run


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_gen_and_partition(tmp_path, capsys):
    path = tmp_path / "h.json"
    assert main(["gen", "--family", "pauli", "--n", "6", "--m", "20", "--seed", "3", "--out", str(path)]) == 0
    data = io.read_json(path)
    assert data["n"] == 6 and len(data["terms"]) == 20
    assert main(["partition", "--input", str(path)]) == 0
    rep = _json(capsys)
    assert sum(len(p["indices"]) for p in rep["pieces"]) == 20


def test_gen_requires_seed(capsys):
    assert main(["gen", "--family", "pauli", "--n", "4", "--m", "3"]) == EXIT_USAGE
    assert "seed" in capsys.readouterr().err


def test_sparsify_pauli_report_and_determinism(tmp_path):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "rows.csv"
    args = ["sparsify", "pauli", "--n", "8", "--m", "60", "--seed", "1", "--eps", "0.25", "--weights", "random"]
    assert main(args + ["--out", str(a), "--csv", str(c)]) == 0
    assert main(args + ["--out", str(b), "--csv", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = io.read_json(a)
    ver = rep["verification"]
    assert ver["pass"] and "lambda_min_slack" in ver and "lambda_max_slack" in ver
    rows = list(csv.DictReader(_io.StringIO(c.read_text())))
    assert len(rows) == 2 and tuple(rows[0]) == BENCH_COLUMNS


def test_sparsify_rejects_bad_eps(capsys):
    assert main(["sparsify", "pauli", "--n", "4", "--m", "5", "--seed", "0", "--eps", "1.5"]) == EXIT_USAGE
    assert "eps" in capsys.readouterr().err


def test_config_validation():
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_json({"pipeline": "pauli", "eps": 0.3, "instance": {"family": "pauli", "n": 4, "m": 4}})
    with pytest.raises(ConfigError, match="unknown config keys"):
        ExperimentConfig.from_json({"pipeline": "pauli", "eps": 0.3, "seed": 0, "bogus": 1, "input": "x"})
    with pytest.raises(ConfigError, match="cap"):
        ExperimentConfig.from_json({"pipeline": "pauli", "eps": 0.3, "seed": 0, "instance": {"family": "pauli", "n": 15, "m": 4}})
    with pytest.raises(ConfigError):
        ExperimentConfig("pauli", 0.3, 0)


def test_run_report_from_config(tmp_path):
    cfg = ExperimentConfig.from_json({"pipeline": "nullity1", "eps": 0.4, "seed": 0, "instance": {"family": "nullity1", "n": 5, "m": 12}})
    r1, r2 = run(cfg), run(cfg)
    assert r1.passed and r1.text() == r2.text()
    assert "millis" not in r1.text()


def test_verify_command(tmp_path, capsys):
    H = generate_instance(InstanceSpec("classical", 5, 10, seed=0, relation=("11",)))
    hp, wp, bad = tmp_path / "h.json", tmp_path / "w.json", tmp_path / "bad.json"
    io.write_json(io.hamiltonian_to_json(H), hp)
    io.write_json({str(i): 1.0 for i in range(10)}, wp)
    io.write_json({"0": 1.0}, bad)
    assert main(["verify", "--input", str(hp), "--weights", str(wp), "--eps", "0.2", "--classical"]) == 0
    rep = _json(capsys)
    assert rep["pass"] and rep["classical_pass"]
    assert main(["verify", "--input", str(hp), "--weights", str(bad), "--eps", "0.2", "--classical"]) == EXIT_FAIL
    capsys.readouterr()
    assert main(["verify", "--input", str(hp), "--weights", str(wp)]) == EXIT_USAGE


def test_xor_pipeline_from_file(tmp_path, capsys):
    p = tmp_path / "x.json"
    io.write_json({"n": 4, "constraints": [{"vars": [0, 1], "parity": 0, "weight": 1.0}, {"vars": [2, 3], "parity": 1}]}, p)
    assert main(["sparsify", "xor", "--input", str(p), "--seed", "0", "--eps", "0.3"]) == 0
    rep = _json(capsys)
    assert rep["support"] == 2 and rep["verification"]["mode"] == "exhaustive"


def test_maxcut_pipeline(capsys):
    assert main(["sparsify", "maxcut", "--n", "6", "--m", "20", "--seed", "2", "--eps", "0.3"]) == 0
    ver = _json(capsys)["verification"]
    assert ver["pass"] and ver["mode"] == "shifted-sandwich+transfer"


def test_pipeline_error_provenance(tmp_path, capsys):
    p = tmp_path / "h.json"
    io.write_json({"n": 2, "terms": [{"tuple": [0, 1], "predicate": {"dim": 4, "entries": [[0, 0]] * 15 + [[1, 0]]}}]}, p)
    assert main(["sparsify", "pauli", "--input", str(p), "--seed", "0", "--eps", "0.3"]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert err.startswith("error [hamsparse.pauli] PauliRecognitionError")


def test_stream_command(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", _io.StringIO("# edges\n0 1 2.0\n1 2\n2 3 1.5\n"))
    assert main(["stream-sparsify", "--n", "4", "--eps", "0.3"]) == 0
    G = _json(capsys)
    assert G["n"] == 4 and sum(e[2] for e in G["edges"]) == pytest.approx(4.5)


def test_nrd_commands(capsys):
    assert main(["nrd", "construct-tensor"]) == 0
    rep = _json(capsys)
    assert rep["terms"] == rep["expected"] == 9 and rep["certificate"]["non_redundant"]
    assert main(["nrd", "classify-2qubit", "--predicate", "and2"]) == 0
    assert _json(capsys)["class"] == "tensor-(1,1)"
    assert main(["nrd", "classify-2qubit", "--predicate", "maxcut"]) == 0
    assert _json(capsys)["class"] == "nonsingular"
    assert main(["nrd", "project", "--literals", "x0,~x0,x1"]) == 0
    assert _json(capsys)["projection"] == ["11"]
    assert main(["nrd", "project", "--trials", "10", "--c", "1", "2"]) == 0
    assert len(_json(capsys)["rates"]) == 2
    assert main(["nrd", "audit-generic", "--seeds", "5"]) == 0
    assert _json(capsys)["holds"] == 5


def test_nrd_certify(tmp_path, capsys):
    p = tmp_path / "h.json"
    io.write_json({"n": 2, "terms": [{"tuple": [0, 1], "predicate": {"pauli": "ZZ"}}] * 2}, p)
    assert main(["nrd", "certify", "--input", str(p)]) == 0
    assert _json(capsys)["redundant_term"] == 0


def test_bench_default_sweep(tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--out", str(out)]) == 0
    rows = list(csv.DictReader(_io.StringIO(out.read_text())))
    assert [r["family"] for r in rows] == ["pauli", "generic", "nullity1"]
    assert all(r["pass"] == "1" for r in rows)
