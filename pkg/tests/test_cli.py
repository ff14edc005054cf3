from __future__ import annotations

import json
import subprocess
import sys

import pytest

from linlab.cli import main
from linlab.core import history_from_jsonl


def cli(capsys, *args):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_game_json(capsys):
    code, out, _ = cli(capsys, "simulate-game", "--n", 3, "--seed", 7)
    doc = json.loads(out)
    assert code == 0
    assert doc["outcome"] == "all_returned" and doc["termination_round"] == 1 and doc["steps"] == 13


def test_simulate_game_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    args = ["simulate-game", "--n", 4, "--seed", 3, "--registers", "wsl-adv", "--adversary", "theorem1-wsl"]
    _, out1, _ = cli(capsys, *args, "--trace-out", a)
    _, out2, _ = cli(capsys, *args, "--trace-out", b)
    assert out1 == out2 and a.read_bytes() == b.read_bytes()
    history_from_jsonl(a.read_text()).validate()


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("LINLAB_SEED", "7")
    _, env_out, _ = cli(capsys, "simulate-game", "--n", 3)
    _, flag_out, _ = cli(capsys, "simulate-game", "--n", 3, "--seed", 7)
    assert env_out == flag_out
    monkeypatch.setenv("LINLAB_SEED", "abc")
    assert cli(capsys, "simulate-game", "--n", 3)[0] == 2


def test_usage_errors(capsys):
    assert cli(capsys, "simulate-game", "--n", 2)[0] == 2
    assert cli(capsys, "simulate-game", "--adversary", "theorem1", "--registers", "atomic")[0] == 2
    assert cli(capsys, "linearize", "--algo", "oracle", "/nonexistent")[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["simulate-game", "--registers", "bogus"])
    assert e.value.code == 2


def test_experiment_csv(capsys, tmp_path):
    csv = tmp_path / "t.csv"
    code, out, _ = cli(capsys, "experiment", "--n", 3, "--trials", 5, "--seed", 0,
                       "--registers", "wsl-adv", "--adversary", "theorem1-wsl", "--csv-out", csv)
    assert code == 0 and out.startswith("trials=5 terminated=5")
    rows = csv.read_text().splitlines()
    assert rows[0] == "seed,termination_round,steps" and len(rows) == 6


def test_counterexample_linearize_check_refute(capsys, tmp_path):
    assert cli(capsys, "counterexample-lamport", "--out-dir", tmp_path)[0] == 0
    g, h1, h2 = (tmp_path / f"{k}.jsonl" for k in ("G", "H_case1", "H_case2"))
    code, out, _ = cli(capsys, "refute-wsl", g, h1, h2)
    assert code == 0 and json.loads(out)["refuted"] is True
    assert cli(capsys, "refute-wsl", g, h1)[0] == 1

    lin = tmp_path / "lin.jsonl"
    assert cli(capsys, "linearize", "--algo", "oracle", h1, "--out", lin)[0] == 0
    assert cli(capsys, "check", "--mode", "lin", h1, lin)[0] == 0
    bad = tmp_path / "bad.jsonl"
    bad.write_text("".join(reversed(lin.read_text().splitlines(keepends=True))))
    code, out, _ = cli(capsys, "check", "--mode", "lin", h1, bad)
    assert code == 1 and "violation" in out


def test_f_vector_wsl_prefix_check(capsys, tmp_path):
    from linlab.core import history_to_jsonl
    from linlab.impl_vector import three_writer_script

    trace = tmp_path / "t.jsonl"
    trace.write_text(history_to_jsonl(three_writer_script()))
    lin = tmp_path / "lin.jsonl"
    assert cli(capsys, "linearize", "--algo", "f-vector", trace, "--out", lin)[0] == 0
    code, out, _ = cli(capsys, "check", "--mode", "wsl-prefix", trace, lin)
    assert code == 0 and out.strip() == "ok"


def test_goldens_match_fixtures(capsys):
    code, out, _ = cli(capsys, "goldens")
    assert code == 0
    assert all(line.endswith(": identical") for line in out.splitlines())


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "linlab", "simulate-game", "--seed", "7"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["steps"] == 13
