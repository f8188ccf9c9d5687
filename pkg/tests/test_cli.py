import json

import pytest

from ugjohnson.cli import main


def test_generate_solve_round(tmp_path):
    inst = tmp_path / "inst.json"
    assert main(["generate", "--n", "5", "--l", "2", "--alpha", "0.5",
                 "--q", "2", "--eps", "0.0", "--seed", "3",
                 "--out", str(inst)]) == 0
    rep = tmp_path / "solve.json"
    pe = tmp_path / "pe.json"
    assert main(["solve", "--instance", str(inst), "--degree", "4",
                 "--out", str(pe), "--report", str(rep)]) == 0
    solve_rep = json.loads(rep.read_text())
    assert solve_rep["ok"]
    assert solve_rep["objective"] == pytest.approx(1.0, abs=1e-6)
    trace = tmp_path / "trace.json"
    rrep = tmp_path / "round.json"
    assert main(["round", "--instance", str(inst), "--eps", "0.0",
                 "--degree", "4", "--out", str(trace), "--report", str(rrep)]) == 0
    round_rep = json.loads(rrep.read_text())
    assert round_rep["achieved_value"] >= 0.9
    assert round_rep["brute_force_opt"] == pytest.approx(1.0)
    assert "input_hash" in round_rep["config"]


def test_generate_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        main(["generate", "--n", "6", "--l", "2", "--alpha", "0.5", "--q", "3",
              "--eps", "0.2", "--seed", "11", "--out", str(out)])
    assert a.read_text() == b.read_text()


def test_generate_realized_value_recorded(tmp_path):
    out = tmp_path / "i.json"
    main(["generate", "--n", "6", "--l", "2", "--alpha", "0.5", "--q", "2",
          "--eps", "0.2", "--seed", "4", "--out", str(out)])
    d = json.loads(out.read_text())
    assert 0.0 <= d["metadata"]["planted"]["realized_value"] <= 1.0


def test_spectra_command():
    assert main(["spectra", "--n", "3", "--l", "2", "--alpha", "0.5"]) == 0


def test_verify_suites_exit_codes():
    assert main(["verify", "--suite", "steppoly"]) == 0
    assert main(["verify", "--suite", "nonsense"]) == 2


def test_verify_pe_fault_injection(tmp_path):
    inst = tmp_path / "inst.json"
    main(["generate", "--n", "5", "--l", "2", "--alpha", "0.5", "--q", "2",
          "--eps", "0.3", "--seed", "5", "--out", str(inst)])
    pe = tmp_path / "pe.json"
    main(["solve", "--instance", str(inst), "--degree", "4", "--out", str(pe)])
    assert main(["verify", "--suite", "pe", "--pe-file", str(pe)]) == 0
    d = json.loads(pe.read_text())
    key = next(k for k in d["table"] if k != "1" and "|" not in k)
    d["table"][key] += 1.0
    bad = tmp_path / "pe_bad.json"
    bad.write_text(json.dumps(d))
    rep = tmp_path / "bad_rep.json"
    assert main(["verify", "--suite", "pe", "--pe-file", str(bad),
                 "--report", str(rep)]) == 1
    report = json.loads(rep.read_text())
    assert report["failed_invariants"]


def test_config_file_overrides(tmp_path):
    cfgfile = tmp_path / "run.ini"
    cfgfile.write_text("[DEFAULT]\nq = 3\neps = 0.1\n")
    out = tmp_path / "i.json"
    assert main(["generate", "--n", "5", "--l", "2", "--alpha", "0.5",
                 "--seed", "0", "--out", str(out), "--config", str(cfgfile)]) == 0
    d = json.loads(out.read_text())
    assert d["q"] == 3
    assert d["metadata"]["planted"]["epsilon"] == 0.1
