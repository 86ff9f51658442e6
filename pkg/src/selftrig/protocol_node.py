"""Node-triggered ternary consensus (Protocol A) and its robust variants.

Each agent polls all neighbors at once, sets its control to the deadzone sign
of the summed relative measurement, and schedules its next poll from the
magnitude of that sum.  The robust variants add a conservativeness factor
``alpha``, skewed local clocks (rates ``R_i``), and either actuation delays
or uniformly quantized measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import analysis
from .engine import ACTUATE, POLL, Event, EventRecord, HybridModel, TargetSet, run
from .graph import Graph
from .quantize import q_uniform, sign_eps

NAN = math.nan


class ConfigError(ValueError):
    pass


def ave(x, g: Graph, i: int) -> float:
    """Sum of relative differences ``sum_{j in N_i} (x_j - x_i)``."""
    xi = x[i]
    s = 0.0
    for j in g.neighbors[i]:
        s += x[j] - xi
    return float(s)


def qave(x, g: Graph, i: int, delta: float) -> float:
    """Sum of uniformly quantized relative differences."""
    if not delta > 0:
        raise ValueError(f"quantizer step must be positive, got {delta}")
    xi = x[i]
    s = 0.0
    for j in g.neighbors[i]:
        s += q_uniform(x[j] - xi, delta)
    return float(s)


def trigger_f(ave_val: float, d_i: int, eps: float) -> float:
    """Time to the next poll: ``|ave|/(4 d_i)``, floored at ``eps/(4 d_i)``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if d_i == 0:
        return eps / 4.0
    if abs(ave_val) >= eps:
        return abs(ave_val) / (4 * d_i)
    return eps / (4 * d_i)


def trigger_f_alpha(measured: float, d_i: int, eps: float, alpha: float) -> float:
    """Local-clock trigger duration ``alpha*|m|/(2 d_i)``, floored at ``alpha*eps/(2 d_i)``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if d_i == 0:
        return alpha * eps / 2.0
    if abs(measured) >= eps:
        return alpha * abs(measured) / (2 * d_i)
    return alpha * eps / (2 * d_i)


def delay_feasible(eps, alpha, d_max, tau_max, R_min):
    """Clock-skew/delay guarantee: ``eps > 4 d_max tau_max`` and
    ``alpha < (eps - 4 d_max tau_max)/eps * R_min``."""
    margin_eps = eps - 4 * d_max * tau_max
    alpha_max = margin_eps / eps * R_min
    margins = {
        "eps_minus_4dtau": margin_eps,
        "alpha_max": alpha_max,
        "alpha_slack": alpha_max - alpha,
    }
    return bool(margin_eps > 0 and alpha < alpha_max), margins


def quantized_feasible(eps, alpha, d_max, delta, R_min):
    """Clock-skew/quantization guarantee: ``eps > d_max*delta/2`` and
    ``alpha < (2 eps - d_max delta)/(2 eps) * R_min``."""
    margin_eps = eps - 0.5 * d_max * delta
    alpha_max = (2 * eps - d_max * delta) / (2 * eps) * R_min
    margins = {
        "eps_minus_half_d_delta": margin_eps,
        "alpha_max": alpha_max,
        "alpha_slack": alpha_max - alpha,
    }
    return bool(margin_eps > 0 and alpha < alpha_max), margins


@dataclass
class DelayModel:
    """Constant delay ``tau``, or a fresh uniform draw in ``[0, tau_max]`` per poll."""

    kind: str
    tau_max: float
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("constant", "uniform"):
            raise ConfigError(f"unknown delay model {self.kind!r}")
        if not self.tau_max >= 0:
            raise ConfigError(f"delay bound must be >= 0, got {self.tau_max}")
        if self.kind == "uniform" and self.seed is None:
            raise ConfigError("uniform delays need an explicit seed")

    @classmethod
    def constant(cls, tau):
        return cls("constant", float(tau))

    @classmethod
    def uniform(cls, tau_max, seed):
        return cls("uniform", float(tau_max), int(seed))

    def sampler(self):
        if self.kind == "constant":
            tau = self.tau_max
            return lambda: tau
        rng = np.random.default_rng(self.seed)
        hi = self.tau_max
        return lambda: float(rng.uniform(0.0, hi))


@dataclass
class RobustParams:
    eps: float
    alpha: float
    tau_max: float = 0.0
    delay: Optional[DelayModel] = None
    R_min: Optional[float] = None
    delta: Optional[float] = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not self.tau_max >= 0:
            raise ConfigError(f"tau_max must be >= 0, got {self.tau_max}")
        if self.delay is not None and self.delay.tau_max > self.tau_max:
            self.tau_max = self.delay.tau_max
        if self.delta is not None and not self.delta > 0:
            raise ConfigError(f"quantizer step must be positive, got {self.delta}")


def clock_rates(spec, n: int) -> list[float]:
    """Per-agent clock rates from a scalar, a list, or ``{kind: uniform, lo, hi?, seed}``."""
    if spec is None:
        rates = [1.0] * n
    elif isinstance(spec, (int, float)):
        rates = [float(spec)] * n
    elif isinstance(spec, dict):
        if spec.get("kind") != "uniform" or "seed" not in spec:
            raise ConfigError(f"rates spec needs kind 'uniform' and a seed, got {spec!r}")
        lo = float(spec.get("lo", spec.get("R_min")))
        hi = float(spec.get("hi", 1.0))
        if not 0 < lo <= hi:
            raise ConfigError(f"uniform rates need 0 < lo <= hi, got [{lo}, {hi}]")
        rates = np.random.default_rng(spec["seed"]).uniform(lo, hi, size=n).tolist()
    else:
        rates = [float(r) for r in spec]
        if len(rates) != n:
            raise ConfigError(f"got {len(rates)} clock rates for {n} agents")
    if any(not r > 0 for r in rates):
        raise ConfigError("clock rates must be positive")
    return rates


@dataclass
class NodeState:
    x: np.ndarray
    u: list
    next_poll: list
    R: list
    pending: list
    polls: list
    messages: list
    log: list = field(default_factory=list)

    @classmethod
    def initial(cls, x0, R=None):
        n = len(x0)
        return cls(
            x=np.array(x0, dtype=float),
            u=[0] * n,
            next_poll=[0.0] * n,
            R=list(R) if R is not None else [1.0] * n,
            pending=[None] * n,
            polls=[0] * n,
            messages=[0] * n,
        )


def jump_protocol_a(state: NodeState, g: Graph, eps: float, batch, t: float) -> list[Event]:
    """Discrete update of every agent in ``batch`` at time ``t``; returns next polls."""
    x = state.x.tolist()
    out = []
    for i in batch:
        d = g.degrees[i]
        a = ave(x, g, i)
        ui = sign_eps(a, eps) if d else 0
        dur = trigger_f(a, d, eps)
        state.u[i] = ui
        state.next_poll[i] = t + dur
        state.polls[i] += 1
        state.messages[i] += d
        state.log.append(EventRecord(t, POLL, i, a, ui, dur, d))
        out.append(Event(t + dur, POLL, i))
    return out


class NodeModel(HybridModel):
    """Protocol A, or its delay / quantized variants when ``robust`` is given."""

    def __init__(self, g: Graph, x0, eps: float, robust: Optional[RobustParams] = None,
                 R=None, variant: str = "A"):
        if not eps > 0:
            raise ConfigError(f"eps must be positive, got {eps}")
        if len(x0) != g.n:
            raise ConfigError(f"x0 has {len(x0)} entries, graph has {g.n} nodes")
        self.g = g
        self.eps = eps
        self.robust = robust
        self.variant = variant
        self.name = variant
        self.state = NodeState.initial(x0, R)
        self.log = self.state.log
        self._rates = np.zeros(g.n)
        self._active = 0
        self.alpha = robust.alpha if robust else 0.5
        self.delta = robust.delta if robust and variant == "A-quantized" else None
        self._draw = None
        if variant == "A-delay" and robust is not None and robust.delay is not None:
            self._draw = robust.delay.sampler()
        self._pending_active = 0
        bound = 2 * eps if variant == "A-quantized" else eps
        self.target = TargetSet("E2" if variant == "A-quantized" else "E",
                                -g.laplacian(), bound)

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

    def _set_control(self, i, ui):
        self.state.u[i] = ui
        self._sync(i)

    def _sync(self, i):
        ui, old = self.state.u[i], int(self._rates[i])
        if ui != old:
            self._active += (ui != 0) - (old != 0)
            self._rates[i] = ui

    def quiescent(self):
        return self._active == 0

    def is_frozen(self):
        if self._pending_active:
            return False
        x = self.state.x.tolist()
        g = self.g
        for i in range(g.n):
            m = qave(x, g, i, self.delta) if self.delta else ave(x, g, i)
            if not abs(m) < self.eps:
                return False
        return True

    def apply(self, t, batch):
        if self.variant == "A":
            agents = [ev.target for ev in batch]
            new = jump_protocol_a(self.state, self.g, self.eps, agents, t)
            for i in agents:
                self._sync(i)
            return new
        return self._apply_robust(t, batch)

    def _apply_robust(self, t, batch):
        st, g, eps, alpha = self.state, self.g, self.eps, self.alpha
        x = st.x.tolist()
        out = []
        for ev in batch:
            i = ev.target
            d = g.degrees[i]
            if ev.kind == ACTUATE:
                ui, dur, m = ev.payload
                st.pending[i] = None
                if ui:
                    self._pending_active -= 1
                self._set_control(i, ui)
                nxt = t + dur / st.R[i]
                st.next_poll[i] = nxt
                st.log.append(EventRecord(t, ACTUATE, i, NAN, ui, dur / st.R[i], 0))
                out.append(Event(nxt, POLL, i))
                continue
            m = qave(x, g, i, self.delta) if self.delta else ave(x, g, i)
            ui = sign_eps(m, eps) if d else 0
            dur = trigger_f_alpha(m, d, eps, alpha)
            st.polls[i] += 1
            st.messages[i] += d
            tau = self._draw() if self._draw is not None else 0.0
            if tau == 0.0:
                self._set_control(i, ui)
                nxt = t + dur / st.R[i]
                st.next_poll[i] = nxt
                st.log.append(EventRecord(t, POLL, i, m, ui, dur / st.R[i], d))
                out.append(Event(nxt, POLL, i))
            else:
                st.pending[i] = (t + tau, ui, dur)
                if ui:
                    self._pending_active += 1
                st.log.append(EventRecord(t, POLL, i, m, None, None, d))
                out.append(Event(t + tau, ACTUATE, i, (ui, dur, m)))
        return out

    def tail_periods(self):
        g = self.g
        out = []
        for i, d in enumerate(g.degrees):
            dd = d if d else 1
            if self.variant == "A":
                out.append(self.eps / (4 * dd))
            else:
                p = self.alpha * self.eps / (2 * dd) / self.state.R[i]
                if self.robust and self.robust.delay and self.robust.delay.kind == "constant":
                    p += self.robust.delay.tau_max
                out.append(p)
        return out


def _isolated_flags(g):
    iso = g.isolated()
    return [f"isolated-agents:{iso}"] if iso else []


def simulate_protocol_a(g: Graph, x0, eps: float, horizon: float = 1e3,
                        sample_dt: Optional[float] = None, max_events: int = 2_000_000,
                        verify: bool = False):
    """Run Protocol A until the state freezes inside E (or a cap is hit)."""
    model = NodeModel(g, x0, eps, variant="A")
    trace, summary = run(model, horizon, max_events, sample_dt)
    summary.flags.extend(_isolated_flags(g))
    ctx = {"protocol": "A", "eps": eps}
    analysis.finalize(trace, summary, g, x0, ctx, verify=verify)
    return trace, summary


def simulate_robust_delay(g: Graph, x0, params: RobustParams, R=None, horizon: float = 1e3,
                          sample_dt: Optional[float] = None, max_events: int = 2_000_000,
                          verify: bool = False):
    """Protocol A with skewed clocks and actuation delays."""
    R = clock_rates(R, g.n)
    R_min = params.R_min if params.R_min is not None else min(R)
    if min(R) < R_min:
        raise ConfigError(f"clock rate {min(R)} below declared R_min {R_min}")
    ok, margins = delay_feasible(params.eps, params.alpha, g.d_max, params.tau_max, R_min)
    model = NodeModel(g, x0, params.eps, params, R, variant="A-delay")
    trace, summary = run(model, horizon, max_events, sample_dt)
    summary.feasibility = {"feasible": ok, **margins}
    if not ok:
        summary.flags.append("outside-guarantee")
    summary.flags.extend(_isolated_flags(g))
    ctx = {"protocol": "A-delay", "eps": params.eps, "alpha": params.alpha, "R": R,
           "tau_max": params.tau_max, "feasible": ok}
    analysis.finalize(trace, summary, g, x0, ctx, verify=verify)
    return trace, summary


def simulate_robust_quantized(g: Graph, x0, params: RobustParams, R=None,
                              horizon: float = 1e3, sample_dt: Optional[float] = None,
                              max_events: int = 2_000_000, verify: bool = False):
    """Protocol A with skewed clocks and uniformly quantized relative measurements."""
    if params.delta is None:
        raise ConfigError("quantized variant needs a quantizer step delta")
    R = clock_rates(R, g.n)
    R_min = params.R_min if params.R_min is not None else min(R)
    if min(R) < R_min:
        raise ConfigError(f"clock rate {min(R)} below declared R_min {R_min}")
    ok, margins = quantized_feasible(params.eps, params.alpha, g.d_max, params.delta, R_min)
    model = NodeModel(g, x0, params.eps, params, R, variant="A-quantized")
    trace, summary = run(model, horizon, max_events, sample_dt)
    summary.feasibility = {"feasible": ok, **margins}
    if not ok:
        summary.flags.append("outside-guarantee")
    summary.flags.extend(_isolated_flags(g))
    ctx = {"protocol": "A-quantized", "eps": params.eps, "alpha": params.alpha, "R": R,
           "delta": params.delta, "feasible": ok}
    analysis.finalize(trace, summary, g, x0, ctx, verify=verify)
    return trace, summary
