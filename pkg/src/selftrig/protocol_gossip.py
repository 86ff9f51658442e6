"""Self-triggered gossip (Protocol C): one clock and one ternary control per edge.

Edge state is stored once per unordered edge ``(i, j)``, ``i < j``, as the
control seen from ``i``; the control seen from ``j`` is its negation, and
both endpoints share the poll time.  This makes the pairwise synchrony and
antisymmetry hold by construction, so the state average is conserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import analysis
from .engine import POLL_EDGE, Event, EventRecord, HybridModel, TargetSet, run
from .graph import Graph
from .protocol_node import ConfigError
from .protocol_timevarying import ZenoError, _require_vanishing
from .quantize import sign_eps
from .schedules import ScalarSchedule, ratio_infimum


def trigger_f_edge(diff: float, d_i: int, d_j: int, eps: float) -> float:
    """``|x_j - x_i| / (2 (d_i + d_j))``, floored at ``eps / (2 (d_i + d_j))``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    den = 2 * (d_i + d_j)
    if abs(diff) >= eps:
        return abs(diff) / den
    return eps / den


def check_no_zeno_edge(eps_sched: ScalarSchedule, gamma_sched: ScalarSchedule,
                       g: Graph) -> dict:
    """Edge-adapted no-Zeno constant ``inf_t eps/(2 max(d_i+d_j) gamma)``, plus the
    node-form constant ``inf_t eps/(4 d_max gamma)`` for comparison."""
    _require_vanishing(eps_sched, "eps(t)")
    if not g.edges:
        raise ConfigError("gossip protocol needs at least one edge")
    r = ratio_infimum(eps_sched, gamma_sched)
    if not r > 0:
        raise ZenoError(f"inf eps(t)/gamma(t) is 0 for eps={eps_sched}, gamma={gamma_sched}")
    widest = max(g.degrees[i] + g.degrees[j] for i, j in g.edges)
    return {"c_edge": r / (2 * widest), "c_node_form": r / (4 * g.d_max)}


@dataclass
class EdgeState:
    x: np.ndarray
    u_edge: list  # control of the lower endpoint toward the higher one
    next_poll_edge: list
    polls: list
    log: list = field(default_factory=list)

    @classmethod
    def initial(cls, x0, m):
        return cls(np.array(x0, dtype=float), [0] * m, [0.0] * m, [0] * m)

    def u(self, g: Graph, i: int, j: int) -> int:
        """Control ``u_i^j`` applied by ``i`` on edge ``{i, j}``."""
        k = g.edge_index()[(min(i, j), max(i, j))]
        return self.u_edge[k] if i < j else -self.u_edge[k]


def node_rates(state: EdgeState, g: Graph) -> np.ndarray:
    r = np.zeros(g.n)
    for k, (i, j) in enumerate(g.edges):
        r[i] += state.u_edge[k]
        r[j] -= state.u_edge[k]
    return r


def jump_protocol_c(state: EdgeState, g: Graph, eps: float, batch, t: float,
                    gain: float = 1.0) -> list[Event]:
    """Update every edge index in ``batch``; triggers are divided by ``gain``."""
    x = state.x.tolist()
    out = []
    for k in batch:
        i, j = g.edges[k]
        diff = x[j] - x[i]
        uk = sign_eps(diff, eps)
        dur = trigger_f_edge(diff, g.degrees[i], g.degrees[j], eps) / gain
        state.u_edge[k] = uk
        state.next_poll_edge[k] = t + dur
        state.polls[k] += 1
        state.log.append(EventRecord(t, POLL_EDGE, k, diff, uk, dur, 2))
        out.append(Event(t + dur, POLL_EDGE, k))
    return out


class EdgeModel(HybridModel):
    def __init__(self, g: Graph, x0, eps: Optional[float] = None,
                 eps_sched: Optional[ScalarSchedule] = None,
                 gamma_sched: Optional[ScalarSchedule] = None):
        if len(x0) != g.n:
            raise ConfigError(f"x0 has {len(x0)} entries, graph has {g.n} nodes")
        self.g = g
        self.eps = eps
        self.eps_sched = eps_sched
        self.gamma = gamma_sched
        self.tv = gamma_sched is not None
        self.name = "C-tv" if self.tv else "C"
        self.n_edges = g.m
        self.state = EdgeState.initial(x0, g.m)
        self.log = self.state.log
        self._rates = np.zeros(g.n)
        self._active = 0
        if not self.tv:
            self.target = TargetSet("E'", g.incidence(), eps)

    @property
    def x(self):
        return self.state.x

    @x.setter
    def x(self, value):
        self.state.x = value

    def initial_events(self):
        return [Event(0.0, POLL_EDGE, k) for k in range(self.g.m)]

    def rates(self):
        return self._rates

    def edge_controls(self):
        return self.state.u_edge

    def apply(self, t, batch):
        ks = [ev.target for ev in batch]
        old = [self.state.u_edge[k] for k in ks]
        if self.tv:
            out = jump_protocol_c(self.state, self.g, self.eps_sched.value(t), ks, t,
                                  gain=self.gamma.value(t))
        else:
            out = jump_protocol_c(self.state, self.g, self.eps, ks, t)
        for k, uo in zip(ks, old):
            un = self.state.u_edge[k]
            if un != uo:
                i, j = self.g.edges[k]
                self._rates[i] += un - uo
                self._rates[j] -= un - uo
                self._active += (un != 0) - (uo != 0)
        return out

    def quiescent(self):
        return self._active == 0

    def is_frozen(self):
        if self.tv:
            return False
        x = self.state.x
        return all(abs(x[j] - x[i]) < self.eps for i, j in self.g.edges)

    def tail_periods(self):
        return [self.eps / (2 * (self.g.degrees[i] + self.g.degrees[j]))
                for i, j in self.g.edges]


def simulate_protocol_c(g: Graph, x0, eps: float, horizon: float = 1e3,
                        sample_dt: Optional[float] = None, max_events: int = 2_000_000,
                        verify: bool = False):
    """Edge gossip until every edge difference is below ``eps`` and all controls are 0."""
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    model = EdgeModel(g, x0, eps=eps)
    trace, summary = run(model, horizon, max_events, sample_dt)
    ctx = {"protocol": "C", "eps": eps}
    analysis.finalize(trace, summary, g, x0, ctx, verify=verify)
    return trace, summary


def simulate_protocol_c_tv(g: Graph, x0, eps_sched: ScalarSchedule,
                           gamma_sched: ScalarSchedule, horizon: float,
                           sample_dt: Optional[float] = None, max_events: int = 2_000_000,
                           w_target: Optional[float] = None, verify: bool = False):
    """Gossip with vanishing threshold and gain; runs to the horizon."""
    cs = check_no_zeno_edge(eps_sched, gamma_sched, g)
    model = EdgeModel(g, x0, eps_sched=eps_sched, gamma_sched=gamma_sched)
    trace, summary = run(model, horizon, max_events, sample_dt)
    K = gamma_sched.total_integral()
    summary.feasibility = {**cs, "gamma_total_integral": K,
                           "gamma_divergent": K == float("inf")}
    if K != float("inf"):
        summary.flags.append("gamma-integrable")
    ctx = {"protocol": "C-tv", "eps_sched": eps_sched, "gamma_sched": gamma_sched, **cs}
    analysis.finalize(trace, summary, g, x0, ctx, verify=verify, w_target=w_target)
    return trace, summary
