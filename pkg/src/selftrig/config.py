"""Run configuration: one YAML/JSON document per run or sweep.

Schema (keys not needed by the chosen protocol are rejected)::

    graph:     {kind: ring|path|complete, n} | {kind: erdos_renyi, n, p, seed}
               | {kind: edge_list, path | text}
    protocol:  A | A-delay | A-quantized | B | B-nonuniform | C | C-tv
    x0:        [..] | {kind: uniform, lo, hi, seed}
    horizon, max_events, sample_dt, out
    A, C:         eps
    A-delay:      eps, alpha, delay_model {kind: constant, tau} | {kind: uniform, tau_max, seed},
                  rates, R_min
    A-quantized:  eps, alpha, delta, rates, R_min
    B, C-tv:      eps_sched, gamma_sched, w_target
    B-nonuniform: eps_i, gamma_i, w_target
    sweep:        {eps: [..], seeds: [..], workers}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from . import graph as graphs
from .graph import Graph, GraphError
from .protocol_gossip import check_no_zeno_edge, simulate_protocol_c, simulate_protocol_c_tv
from .protocol_node import (ConfigError, DelayModel, RobustParams, clock_rates, delay_feasible,
                            quantized_feasible, simulate_protocol_a, simulate_robust_delay,
                            simulate_robust_quantized)
from .protocol_timevarying import (TvParams, check_no_zeno, check_no_zeno_nonuniform,
                                   simulate_nonuniform, simulate_protocol_b)
from .schedules import ScalarSchedule, ScheduleError

PROTOCOL_KEYS = {
    "A": {"eps"},
    "A-delay": {"eps", "alpha", "delay_model", "tau_max", "rates", "R_min"},
    "A-quantized": {"eps", "alpha", "delta", "rates", "R_min"},
    "B": {"eps_sched", "gamma_sched", "w_target"},
    "B-nonuniform": {"eps_i", "gamma_i", "w_target"},
    "C": {"eps"},
    "C-tv": {"eps_sched", "gamma_sched", "w_target"},
}
REQUIRED = {
    "A": {"eps"},
    "A-delay": {"eps", "alpha"},
    "A-quantized": {"eps", "alpha", "delta"},
    "B": {"eps_sched", "gamma_sched"},
    "B-nonuniform": {"eps_i", "gamma_i"},
    "C": {"eps"},
    "C-tv": {"eps_sched", "gamma_sched"},
}
COMMON_KEYS = {"graph", "protocol", "x0", "horizon", "max_events", "sample_dt", "out", "sweep"}


def _num(raw, key, positive=True, allow_zero=False):
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"field '{key}': expected a number, got {v!r}")
    v = float(v)
    if positive and not (v > 0 or (allow_zero and v == 0)):
        raise ConfigError(f"field '{key}': must be {'>= 0' if allow_zero else '> 0'}, got {v}")
    return v


def build_graph(spec) -> Graph:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("field 'graph': expected a mapping with a 'kind'")
    spec = dict(spec)
    kind = spec.pop("kind")
    try:
        if kind == "edge_list":
            if "text" in spec:
                return graphs.parse_edge_list(spec["text"])
            if "path" in spec:
                return graphs.parse_edge_list(Path(spec["path"]).read_text())
            raise ConfigError("field 'graph': edge_list needs 'path' or 'text'")
        if kind not in graphs.GENERATORS:
            raise ConfigError(f"field 'graph.kind': unknown graph kind {kind!r}")
        return graphs.GENERATORS[kind](**spec)
    except (GraphError, TypeError, OSError) as e:
        raise ConfigError(f"field 'graph': {e}") from e


def build_x0(spec, n: int, seed: Optional[int] = None) -> list[float]:
    """Explicit list, or seeded uniform draw; ``seed`` overrides the spec's seed."""
    if isinstance(spec, dict):
        if spec.get("kind") != "uniform":
            raise ConfigError(f"field 'x0': unknown kind {spec.get('kind')!r}")
        s = spec.get("seed") if seed is None else seed
        if s is None:
            raise ConfigError("field 'x0': uniform initial states need an explicit seed")
        lo, hi = float(spec.get("lo", -1.0)), float(spec.get("hi", 1.0))
        if not lo <= hi:
            raise ConfigError(f"field 'x0': need lo <= hi, got [{lo}, {hi}]")
        return np.random.default_rng(s).uniform(lo, hi, size=n).tolist()
    if not isinstance(spec, (list, tuple)):
        raise ConfigError(f"field 'x0': expected a list or a uniform spec, got {spec!r}")
    if len(spec) != n:
        raise ConfigError(f"field 'x0': has {len(spec)} entries, graph has {n} nodes")
    try:
        return [float(v) for v in spec]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"field 'x0': {e}") from e


def _sched(raw, key):
    try:
        return ScalarSchedule.from_config(raw[key])
    except (ScheduleError, TypeError, KeyError, ValueError) as e:
        raise ConfigError(f"field '{key}': {e}") from e


def _delay(raw):
    spec = raw.get("delay_model")
    if spec is None:
        tau = _num(raw, "tau_max", allow_zero=True) if "tau_max" in raw else 0.0
        return DelayModel.constant(tau)
    if not isinstance(spec, dict):
        raise ConfigError("field 'delay_model': expected a mapping")
    kind = spec.get("kind")
    if kind == "constant":
        return DelayModel.constant(float(spec.get("tau", spec.get("tau_max", 0.0))))
    if kind == "uniform":
        if "seed" not in spec or "tau_max" not in spec:
            raise ConfigError("field 'delay_model': uniform delays need tau_max and seed")
        return DelayModel.uniform(spec["tau_max"], spec["seed"])
    raise ConfigError(f"field 'delay_model.kind': unknown delay model {kind!r}")


@dataclass
class RunConfig:
    graph: Graph
    protocol: str
    x0_spec: Any
    params: dict
    horizon: float = 1e3
    max_events: int = 2_000_000
    sample_dt: Optional[float] = None
    out: Optional[str] = None
    sweep: Optional[dict] = None
    raw: dict = field(default_factory=dict, repr=False)

    def x0(self, seed: Optional[int] = None) -> list[float]:
        return build_x0(self.x0_spec, self.graph.n, seed)

    def with_eps(self, eps: float) -> "RunConfig":
        if "eps" not in PROTOCOL_KEYS[self.protocol]:
            raise ConfigError(f"sweep over eps needs a fixed-eps protocol, not {self.protocol}")
        params = dict(self.params)
        params["eps"] = float(eps)
        if "robust" in params:
            params["robust"] = RobustParams(eps=float(eps), alpha=params["robust"].alpha,
                                            tau_max=params["robust"].tau_max,
                                            delay=params["robust"].delay,
                                            R_min=params["robust"].R_min,
                                            delta=params["robust"].delta)
        return RunConfig(self.graph, self.protocol, self.x0_spec, params, self.horizon,
                         self.max_events, self.sample_dt, self.out, self.sweep, self.raw)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level")
    protocol = raw.get("protocol")
    if protocol not in PROTOCOL_KEYS:
        raise ConfigError(f"field 'protocol': expected one of {sorted(PROTOCOL_KEYS)}, "
                          f"got {protocol!r}")
    unknown = set(raw) - COMMON_KEYS - PROTOCOL_KEYS[protocol]
    if unknown:
        raise ConfigError(f"unknown field(s) for protocol {protocol}: {sorted(unknown)}")
    for key in ("graph", "x0"):
        if key not in raw:
            raise ConfigError(f"missing field '{key}'")
    missing = REQUIRED[protocol] - set(raw)
    if missing:
        raise ConfigError(f"missing field(s) for protocol {protocol}: {sorted(missing)}")

    g = build_graph(raw["graph"])
    params: dict = {}
    if "eps" in PROTOCOL_KEYS[protocol]:
        params["eps"] = _num(raw, "eps")
    if protocol in ("A-delay", "A-quantized"):
        delay = _delay(raw) if protocol == "A-delay" else None
        R_min = _num(raw, "R_min") if "R_min" in raw else None
        params["robust"] = RobustParams(
            eps=params["eps"], alpha=_num(raw, "alpha"),
            tau_max=delay.tau_max if delay else 0.0, delay=delay, R_min=R_min,
            delta=_num(raw, "delta") if protocol == "A-quantized" else None)
        params["rates"] = clock_rates(raw.get("rates"), g.n)
    if protocol in ("B", "C-tv"):
        params["eps_sched"] = _sched(raw, "eps_sched")
        params["gamma_sched"] = _sched(raw, "gamma_sched")
    if protocol == "B-nonuniform":
        for key in ("eps_i", "gamma_i"):
            v = raw[key]
            if not isinstance(v, list):
                v = [v] * g.n
            if len(v) != g.n:
                raise ConfigError(f"field '{key}': need {g.n} schedules, got {len(v)}")
            params[key] = [_sched({key: s}, key) for s in v]
    if "w_target" in raw and raw["w_target"] is not None:
        params["w_target"] = _num(raw, "w_target")

    horizon = _num(raw, "horizon") if "horizon" in raw else 1e3
    max_events = raw.get("max_events", 2_000_000)
    if isinstance(max_events, bool) or not isinstance(max_events, int) or max_events < 1:
        raise ConfigError(f"field 'max_events': expected a positive integer, got {max_events!r}")
    sample_dt = _num(raw, "sample_dt") if raw.get("sample_dt") is not None else None
    sweep = raw.get("sweep")
    if sweep is not None and not isinstance(sweep, dict):
        raise ConfigError("field 'sweep': expected a mapping")
    cfg = RunConfig(g, protocol, raw["x0"], params, horizon, max_events, sample_dt,
                    raw.get("out"), sweep, raw)
    cfg.x0()  # validate eagerly
    return cfg


def load_config(path) -> RunConfig:
    """Read YAML (JSON is a subset) and validate; errors carry line or field context."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"malformed config{where}: {getattr(e, 'problem', e)}") from e
    return parse_config(raw)


def execute(cfg: RunConfig, x0=None, verify: bool = True):
    """Run the configured protocol; the single entry point shared by CLI and tests."""
    g, p = cfg.graph, cfg.params
    x0 = cfg.x0() if x0 is None else x0
    kw = dict(horizon=cfg.horizon, sample_dt=cfg.sample_dt, max_events=cfg.max_events,
              verify=verify)
    if cfg.protocol == "A":
        return simulate_protocol_a(g, x0, p["eps"], **kw)
    if cfg.protocol == "A-delay":
        return simulate_robust_delay(g, x0, p["robust"], R=p["rates"], **kw)
    if cfg.protocol == "A-quantized":
        return simulate_robust_quantized(g, x0, p["robust"], R=p["rates"], **kw)
    if cfg.protocol == "B":
        params = TvParams(eps_sched=p["eps_sched"], gamma_sched=p["gamma_sched"])
        return simulate_protocol_b(g, x0, params, w_target=p.get("w_target"), **kw)
    if cfg.protocol == "B-nonuniform":
        return simulate_nonuniform(g, x0, p["eps_i"], p["gamma_i"],
                                   w_target=p.get("w_target"), **kw)
    if cfg.protocol == "C":
        return simulate_protocol_c(g, x0, p["eps"], **kw)
    return simulate_protocol_c_tv(g, x0, p["eps_sched"], p["gamma_sched"],
                                  w_target=p.get("w_target"), **kw)


def check_conditions(cfg: RunConfig) -> list[dict]:
    """Evaluate the protocol's sufficient conditions without running.

    Each entry is ``{name, holds, lhs, rhs}`` for an inequality ``lhs > rhs``
    (or ``lhs < rhs`` where noted in the name).
    """
    g, p, proto = cfg.graph, cfg.params, cfg.protocol
    out = []
    if proto in ("A", "C"):
        out.append({"name": "eps > 0", "holds": p["eps"] > 0, "lhs": p["eps"], "rhs": 0.0})
    elif proto in ("A-delay", "A-quantized"):
        rp = p["robust"]
        R_min = rp.R_min if rp.R_min is not None else min(p["rates"])
        if proto == "A-delay":
            _, m = delay_feasible(rp.eps, rp.alpha, g.d_max, rp.tau_max, R_min)
            out.append({"name": "eps > 4 d_max tau_max", "holds": m["eps_minus_4dtau"] > 0,
                        "lhs": rp.eps, "rhs": 4 * g.d_max * rp.tau_max})
        else:
            _, m = quantized_feasible(rp.eps, rp.alpha, g.d_max, rp.delta, R_min)
            out.append({"name": "eps > d_max delta / 2",
                        "holds": m["eps_minus_half_d_delta"] > 0,
                        "lhs": rp.eps, "rhs": 0.5 * g.d_max * rp.delta})
        out.append({"name": "alpha < alpha_max", "holds": rp.alpha < m["alpha_max"],
                    "lhs": rp.alpha, "rhs": m["alpha_max"]})
        out.append({"name": "min clock rate >= R_min", "holds": min(p["rates"]) >= R_min,
                    "lhs": min(p["rates"]), "rhs": R_min})
    elif proto in ("B", "C-tv"):
        try:
            if proto == "B":
                c = check_no_zeno(p["eps_sched"], p["gamma_sched"], g)
            else:
                c = check_no_zeno_edge(p["eps_sched"], p["gamma_sched"], g)["c_edge"]
            out.append({"name": "no-Zeno constant c > 0", "holds": True, "lhs": c, "rhs": 0.0})
        except ConfigError as e:
            out.append({"name": "no-Zeno constant c > 0", "holds": False, "lhs": 0.0,
                        "rhs": 0.0, "detail": str(e)})
        K = p["gamma_sched"].total_integral()
        out.append({"name": "integral of gamma diverges", "holds": K == float("inf"),
                    "lhs": K, "rhs": float("inf")})
    else:
        try:
            c_i = check_no_zeno_nonuniform(p["eps_i"], p["gamma_i"], g)
            out.append({"name": "no-Zeno constants c_i > 0", "holds": True, "lhs": min(c_i),
                        "rhs": 0.0})
        except ConfigError as e:
            out.append({"name": "no-Zeno constants c_i > 0", "holds": False, "lhs": 0.0,
                        "rhs": 0.0, "detail": str(e)})
    return out


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default, allow_nan=True)


def _json_default(o):
    if isinstance(o, ScalarSchedule):
        return o.to_config()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")
