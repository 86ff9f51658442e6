import csv
import json

import pytest

from selftrig.cli import main
from selftrig.config import execute, load_config


def _write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


ORACLE = """
graph: {kind: path, n: 2}
protocol: A
eps: 0.02
x0: [1, -1]
"""


def test_run_oracle(tmp_path):
    cfg = _write(tmp_path, ORACLE)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["T_freeze"] == 0.9921875
    assert summary["C"] == 6
    assert summary["monitors"]["all_passed"]
    rows = list(csv.DictReader(open(tmp_path / "o" / "events.csv")))
    assert rows[0] == {"t": "0.0", "kind": "poll", "target": "0", "value": "-2.0",
                       "control": "-1", "duration": "0.5", "messages": "1"}
    trace = list(csv.reader(open(tmp_path / "o" / "trace.csv")))
    assert trace[0] == ["t", "x_0", "x_1", "u_0", "u_1"]


def test_summary_round_trip(tmp_path):
    cfg = _write(tmp_path, """
graph: {kind: ring, n: 5}
protocol: C
eps: 0.02
x0: {kind: uniform, lo: -1, hi: 1, seed: 4}
""")
    main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"])
    on_disk = json.loads((tmp_path / "o" / "summary.json").read_text())
    _, s = execute(load_config(cfg))
    assert on_disk == json.loads(json.dumps(s.to_dict()))
    rows = list(csv.DictReader(open(tmp_path / "o" / "events.csv")))
    assert rows[0]["target"] == "0-1"


def test_run_constant_x0(tmp_path):
    cfg = _write(tmp_path, ORACLE.replace("[1, -1]", "[0.5, 0.5]"))
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "o" / "events.csv")))
    assert {r["t"] for r in rows} == {"0.0"}


def test_out_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SELFTRIG_OUT", str(tmp_path / "env"))
    assert main(["run", "--config", _write(tmp_path, ORACLE), "--quiet"]) == 0
    assert (tmp_path / "env" / "summary.json").exists()


def test_missing_eps(tmp_path, capsys):
    cfg = _write(tmp_path, ORACLE.replace("eps: 0.02\n", ""))
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "eps" in capsys.readouterr().err


def test_malformed_yaml_reports_line(tmp_path, capsys):
    cfg = _write(tmp_path, "graph: {kind: path, n: 2}\nprotocol: A\neps: [0.02\n")
    assert main(["run", "--config", cfg]) == 1
    assert "line" in capsys.readouterr().err


def test_bad_field_named(tmp_path, capsys):
    cfg = _write(tmp_path, ORACLE.replace("eps: 0.02", "eps: -1"))
    assert main(["check", "--config", cfg]) == 1
    assert "'eps'" in capsys.readouterr().err
    cfg = _write(tmp_path, ORACLE + "alpha: 0.3\n")
    assert main(["check", "--config", cfg]) == 1


SWEEP = """
graph: {kind: ring, n: 6}
protocol: A
eps: 0.05
x0: {kind: uniform, lo: -1, hi: 1, seed: 0}
sweep: {eps: %s, seeds: [2, 1], workers: %d}
"""


@pytest.mark.parametrize("workers", [1, 2])
def test_sweep_sorted(tmp_path, workers):
    cfg = _write(tmp_path, SWEEP % ("[0.05, 0.01]", workers))
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "o" / "sweep.csv")))
    assert [(r["eps"], r["seed"]) for r in rows] == [("0.01", "1"), ("0.01", "2"),
                                                    ("0.05", "1"), ("0.05", "2")]
    assert all(r["converged"] == "True" for r in rows)


def test_sweep_parallel_matches_serial(tmp_path):
    outs = []
    for w in (1, 2):
        cfg = _write(tmp_path, SWEEP % ("[0.05]", w), f"c{w}.yaml")
        main(["sweep", "--config", cfg, "--out", str(tmp_path / f"o{w}"), "--quiet"])
        outs.append((tmp_path / f"o{w}" / "sweep.csv").read_bytes())
    assert outs[0] == outs[1]


def test_sweep_single_and_empty(tmp_path):
    cfg = _write(tmp_path, SWEEP.replace("seeds: [2, 1]", "seeds: [3]") % ("[0.05]", 1))
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 0
    assert len(list(csv.DictReader(open(tmp_path / "o" / "sweep.csv")))) == 1
    cfg = _write(tmp_path, SWEEP % ("[]", 1))
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


DELAY = """
graph: {kind: path, n: 2}
protocol: A-delay
eps: 0.02
alpha: 0.3
delay_model: {kind: constant, tau: %s}
x0: [1, -1]
"""


def test_check_feasible(tmp_path, capsys):
    assert main(["check", "--config", _write(tmp_path, DELAY % "0.001")]) == 0
    out = capsys.readouterr().out
    assert "eps > 4 d_max tau_max" in out and "0.004" in out


def test_check_strict_boundary(tmp_path, capsys):
    assert main(["check", "--config", _write(tmp_path, DELAY % "0.005")]) == 3
    assert "VIOLATED eps > 4 d_max tau_max" in capsys.readouterr().err


def test_check_zeno(tmp_path, capsys):
    cfg = _write(tmp_path, """
graph: {kind: ring, n: 5}
protocol: B
eps_sched: {kind: hyperbolic, a: 0.05, p: 2}
gamma_sched: {kind: hyperbolic, a: 0.25, p: 1}
x0: [0, 0, 0, 0, 1]
""")
    assert main(["check", "--config", cfg]) == 3
    assert "no-Zeno" in capsys.readouterr().err


def test_monitor_violation_exit_code(tmp_path, monkeypatch):
    import selftrig.cli as cli
    from selftrig.analysis import MonitorReport, MonitorResult

    real = cli.execute

    def broken(cfg):
        trace, s = real(cfg)
        s.monitors = MonitorReport({"x": MonitorResult("x", False, 1, 0.5, "fault")}).to_dict()
        return trace, s

    monkeypatch.setattr(cli, "execute", broken)
    assert main(["run", "--config", _write(tmp_path, ORACLE), "--out", str(tmp_path / "o"),
                 "--quiet"]) == 2
