"""Command line: ``selftrig {run,sweep,check} --config FILE [--out DIR] [--quiet]``.

Exit codes: run 0 (frozen or horizon), 1 (config error), 2 (monitor violation);
sweep 0/1/2 likewise; check 0 (conditions hold), 1 (config error), 3 (violated).
The default output directory is ``$SELFTRIG_OUT`` or ``./out``.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .analysis import EDGE_PROTOCOLS
from .config import ConfigError, RunConfig, check_conditions, dump_json, execute, load_config
from .engine import KIND_NAMES, POLL_EDGE, SimulationError
from .schedules import ScheduleError

OUT_ENV = "SELFTRIG_OUT"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace_csv(path, trace, g, protocol):
    edge = protocol in EDGE_PROTOCOLS
    header = ["t"] + [f"x_{i}" for i in range(trace.n)] + [f"u_{i}" for i in range(trace.n)]
    if edge:
        header += [f"u_{i}-{j}" for i, j in g.edges]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        X, U = trace.x.tolist(), trace.u.tolist()
        UE = trace.edge_u.tolist() if edge and trace.edge_u is not None else None
        for k, t in enumerate(trace.times.tolist()):
            row = [repr(t)] + [repr(v) for v in X[k]] + [_fmt(int(v)) for v in U[k]]
            if UE is not None:
                row += [_fmt(int(v)) for v in UE[k]]
            w.writerow(row)


def write_events_csv(path, trace, g):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "kind", "target", "value", "control", "duration", "messages"])
        for r in trace.records:
            if r.kind == POLL_EDGE:
                i, j = g.edges[r.target]
                target = f"{i}-{j}"
            else:
                target = str(r.target)
            w.writerow([repr(r.t), KIND_NAMES[r.kind], target, _fmt(r.value), _fmt(r.control),
                        _fmt(r.duration), r.messages])


def write_run(out: Path, cfg: RunConfig, trace, summary):
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out / "trace.csv", trace, cfg.graph, cfg.protocol)
    write_events_csv(out / "events.csv", trace, cfg.graph)
    (out / "summary.json").write_text(dump_json(summary.to_dict()) + "\n")


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out or cfg.out or os.environ.get(OUT_ENV) or "out")


def _say(args, msg):
    if not args.quiet:
        print(msg)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    trace, summary = execute(cfg)
    out = _out_dir(args, cfg)
    write_run(out, cfg, trace, summary)
    passed = summary.monitors["all_passed"]
    _say(args, f"{summary.protocol}: stop={summary.stop_reason} T_enter={summary.T_enter} "
               f"T_freeze={summary.T_freeze} C={summary.C} W={summary.W_final} "
               f"monitors={'pass' if passed else 'FAIL'} -> {out}")
    if not passed:
        for name, r in summary.monitors.items():
            if name != "all_passed" and not r["passed"]:
                print(f"monitor {name} failed at t={r['first_violation']}: {r['detail']}",
                      file=sys.stderr)
        return 2
    return 0


SWEEP_COLUMNS = ["eps", "seed", "stop_reason", "converged", "T_enter", "T_freeze", "C",
                 "messages", "W_final", "T_slack", "C_slack", "msg_slack", "monitors_passed"]


def sweep_row(cfg: RunConfig, eps: float, seed: int) -> dict:
    c = cfg.with_eps(eps)
    trace, s = execute(c, x0=c.x0(seed))
    rep = s.bound_report or {}
    return {"eps": float(eps), "seed": int(seed), "stop_reason": s.stop_reason,
            "converged": s.converged, "T_enter": s.T_enter, "T_freeze": s.T_freeze, "C": s.C,
            "messages": s.total_messages, "W_final": s.W_final,
            "T_slack": rep.get("T_slack"), "C_slack": rep.get("C_slack"),
            "msg_slack": rep.get("msg_slack"), "monitors_passed": s.monitors["all_passed"]}


def _sweep_task(job):
    path, eps, seed = job
    return sweep_row(load_config(path), eps, seed)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    sw = cfg.sweep or {}
    eps_list = sw.get("eps") or []
    seeds = sw.get("seeds")
    if not eps_list:
        raise ConfigError("field 'sweep.eps': need a non-empty list of eps values")
    if seeds is None:
        if not isinstance(cfg.x0_spec, dict):
            seeds = [0]
        else:
            seeds = [cfg.x0_spec.get("seed", 0)]
    if not seeds:
        raise ConfigError("field 'sweep.seeds': need a non-empty list")
    if len(seeds) > 1 and not isinstance(cfg.x0_spec, dict):
        raise ConfigError("field 'sweep.seeds': several seeds need a random x0 spec")
    jobs = [(float(e), int(s)) for e in eps_list for s in seeds]
    workers = int(sw.get("workers", 1))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_sweep_task, [(args.config, e, s) for e, s in jobs]))
    else:
        rows = [sweep_row(cfg, e, s) for e, s in jobs]
    rows.sort(key=lambda r: (r["eps"], r["seed"]))
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in SWEEP_COLUMNS])
    _say(args, f"{len(rows)} runs -> {out / 'sweep.csv'}")
    return 0 if all(r["monitors_passed"] for r in rows) else 2


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    conds = check_conditions(cfg)
    for c in conds:
        status = "ok" if c["holds"] else "VIOLATED"
        line = f"{status:8s} {c['name']}: lhs={c['lhs']!r} rhs={c['rhs']!r}"
        if "detail" in c:
            line += f" ({c['detail']})"
        if c["holds"]:
            _say(args, line)
        else:
            print(line, file=sys.stderr)
    return 0 if all(c["holds"] for c in conds) else 3


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="selftrig", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="YAML or JSON run configuration")
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    ap.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ScheduleError, SimulationError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
