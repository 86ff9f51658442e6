"""Asymptotic consensus with vanishing threshold and gain (Protocol B).

Agents know absolute time.  The deadzone width ``eps(t)`` shrinks while the
velocity gain ``gamma(t)`` slows the flow; polls are stretched by
``1/gamma(t)`` so that inter-poll times stay bounded below.  The non-uniform
variant lets every agent use its own ``eps_i``, ``gamma_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import analysis
from .engine import POLL, Event, EventRecord, HybridModel, run
from .graph import Graph
from .protocol_node import ConfigError, ave, trigger_f
from .quantize import sign_eps
from .schedules import ScalarSchedule, ratio_infimum, sum_ratio_infimum


class ZenoError(ConfigError):
    """Schedule pair admits arbitrarily short inter-poll intervals."""


def _require_vanishing(s: ScalarSchedule, what: str):
    if not s.vanishes:
        raise ConfigError(f"{what} must tend to zero; constant schedules are not admissible")


def check_no_zeno(eps_sched: ScalarSchedule, gamma_sched: ScalarSchedule, g: Graph) -> float:
    """``c = inf_t eps(t) / (4 d_max gamma(t))``; raises :class:`ZenoError` if it is 0."""
    _require_vanishing(eps_sched, "eps(t)")
    r = ratio_infimum(eps_sched, gamma_sched)
    if not r > 0:
        raise ZenoError(
            f"inf eps(t)/(4 d_max gamma(t)) is 0 for eps={eps_sched}, gamma={gamma_sched}")
    return r / (4 * g.d_max)


def check_no_zeno_nonuniform(eps_i: Sequence[ScalarSchedule],
                             gamma_i: Sequence[ScalarSchedule], g: Graph) -> list[float]:
    """Per-agent ``c_i = inf_t eps_i(t) / (2 sum_{j in N_i} (gamma_j(t) + gamma_i(t)))``."""
    if len(eps_i) != g.n or len(gamma_i) != g.n:
        raise ConfigError(f"need {g.n} per-agent schedules, got {len(eps_i)} and {len(gamma_i)}")
    out = []
    for i in range(g.n):
        _require_vanishing(eps_i[i], f"eps_{i}(t)")
        _require_vanishing(gamma_i[i], f"gamma_{i}(t)")
        if gamma_i[i].total_integral() != float("inf"):
            raise ConfigError(f"gamma_{i}(t) must have a divergent integral")
        d = g.degrees[i]
        if d == 0:
            c = ratio_infimum(eps_i[i], gamma_i[i]) / 4
            if not c > 0:
                raise ZenoError(f"no-Zeno constant for isolated agent {i} is 0")
            out.append(c)
            continue
        terms = [(2.0 * d, gamma_i[i])] + [(2.0, gamma_i[j]) for j in g.neighbors[i]]
        c = sum_ratio_infimum(eps_i[i], terms)
        if not c > 0:
            raise ZenoError(f"no-Zeno constant for agent {i} is 0")
        out.append(c)
    return out


@dataclass
class TvParams:
    eps_sched: Optional[ScalarSchedule] = None
    gamma_sched: Optional[ScalarSchedule] = None
    eps_i: Optional[list] = None
    gamma_i: Optional[list] = None
    c: Optional[float] = None
    c_i: list = field(default_factory=list)


@dataclass
class TvState:
    x: np.ndarray
    u: list
    next_poll: list
    polls: list
    messages: list
    log: list = field(default_factory=list)

    @classmethod
    def initial(cls, x0):
        n = len(x0)
        return cls(np.array(x0, dtype=float), [0] * n, [0.0] * n, [0] * n, [0] * n)


def jump_protocol_b(state: TvState, g: Graph, params: TvParams, batch, t: float) -> list[Event]:
    """Poll update with threshold ``eps(t)`` and trigger stretched by ``1/gamma(t)``."""
    eps_t = params.eps_sched.value(t)
    gam_t = params.gamma_sched.value(t)
    x = state.x.tolist()
    out = []
    for i in batch:
        d = g.degrees[i]
        a = ave(x, g, i)
        ui = sign_eps(a, eps_t) if d else 0
        dur = trigger_f(a, d, eps_t) / gam_t
        state.u[i] = ui
        state.next_poll[i] = t + dur
        state.polls[i] += 1
        state.messages[i] += d
        state.log.append(EventRecord(t, POLL, i, a, ui, dur, d))
        out.append(Event(t + dur, POLL, i))
    return out


def jump_nonuniform(state: TvState, g: Graph, params: TvParams, batch, t: float) -> list[Event]:
    """Per-agent thresholds; trigger ``fbar_i / Gamma_i(t)`` with
    ``Gamma_i = sum_{j in N_i}(gamma_j + gamma_i)`` read from neighbors' schedules."""
    x = state.x.tolist()
    out = []
    for i in batch:
        d = g.degrees[i]
        eps_t = params.eps_i[i].value(t)
        a = ave(x, g, i)
        if d == 0:
            ui, dur = 0, eps_t / (4.0 * params.gamma_i[i].value(t))
        else:
            gi = params.gamma_i[i].value(t)
            Gamma = sum(params.gamma_i[j].value(t) + gi for j in g.neighbors[i])
            ui = sign_eps(a, eps_t)
            fbar = abs(a) / 2 if abs(a) >= eps_t else eps_t / 2
            dur = fbar / Gamma
        state.u[i] = ui
        state.next_poll[i] = t + dur
        state.polls[i] += 1
        state.messages[i] += d
        state.log.append(EventRecord(t, POLL, i, a, ui, dur, d))
        out.append(Event(t + dur, POLL, i))
    return out


class TvModel(HybridModel):
    def __init__(self, g: Graph, x0, params: TvParams, nonuniform: bool = False):
        if len(x0) != g.n:
            raise ConfigError(f"x0 has {len(x0)} entries, graph has {g.n} nodes")
        self.g = g
        self.params = params
        self.nonuniform = nonuniform
        self.name = "B-nonuniform" if nonuniform else "B"
        self.state = TvState.initial(x0)
        self.log = self.state.log
        self.gamma = list(params.gamma_i) if nonuniform else params.gamma_sched
        self._rates = np.zeros(g.n)
        self._jump = jump_nonuniform if nonuniform else jump_protocol_b

    @property
    def x(self):
        return self.state.x

    @x.setter
    def x(self, value):
        self.state.x = value

    def initial_events(self):
        return [Event(0.0, POLL, i) for i in range(self.g.n)]

    def rates(self):
        return self._rates

    def apply(self, t, batch):
        agents = [ev.target for ev in batch]
        out = self._jump(self.state, self.g, self.params, agents, t)
        for i in agents:
            self._rates[i] = self.state.u[i]
        return out


def simulate_protocol_b(g: Graph, x0, params: TvParams, horizon: float,
                        sample_dt: Optional[float] = None, max_events: int = 2_000_000,
                        w_target: Optional[float] = None, verify: bool = False):
    """Asymptotic protocol; runs to the horizon and reports the final spread."""
    c = check_no_zeno(params.eps_sched, params.gamma_sched, g)
    params.c = c
    model = TvModel(g, x0, params)
    trace, summary = run(model, horizon, max_events, sample_dt)
    K = params.gamma_sched.total_integral()
    summary.feasibility = {"c": c, "gamma_total_integral": K,
                           "gamma_divergent": K == float("inf")}
    if K != float("inf"):
        summary.flags.append("gamma-integrable")
    ctx = {"protocol": "B", "eps_sched": params.eps_sched,
           "gamma_sched": params.gamma_sched, "c": c}
    analysis.finalize(trace, summary, g, x0, ctx, verify=verify, w_target=w_target)
    return trace, summary


def simulate_nonuniform(g: Graph, x0, eps_i, gamma_i, horizon: float,
                        sample_dt: Optional[float] = None, max_events: int = 2_000_000,
                        w_target: Optional[float] = None, verify: bool = False):
    """Per-agent schedules; agent i reads only ``gamma_j`` of its neighbors."""
    eps_i = [ScalarSchedule.from_config(s) for s in eps_i]
    gamma_i = [ScalarSchedule.from_config(s) for s in gamma_i]
    c_i = check_no_zeno_nonuniform(eps_i, gamma_i, g)
    params = TvParams(eps_i=eps_i, gamma_i=gamma_i, c_i=c_i)
    model = TvModel(g, x0, params, nonuniform=True)
    trace, summary = run(model, horizon, max_events, sample_dt)
    summary.feasibility = {"c_i": c_i}
    ctx = {"protocol": "B-nonuniform", "eps_i": eps_i, "gamma_i": gamma_i, "c_i": c_i}
    analysis.finalize(trace, summary, g, x0, ctx, verify=verify, w_target=w_target)
    return trace, summary
