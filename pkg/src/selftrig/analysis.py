"""Lyapunov functions, target sets, cost bounds and trace monitors.

The monitors recompute every quantity they check from the recorded state
samples (dense matrix products rather than the per-agent loops the
protocols use), so they act as an independent check of a run.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .engine import POLL, POLL_EDGE, Trace
from .graph import Graph, laplacian_quadratic
from .schedules import ratio_infimum

TOL = 1e-9
DWELL_TOL = 1e-12

NODE_PROTOCOLS = ("A", "A-delay", "A-quantized", "B", "B-nonuniform")
EDGE_PROTOCOLS = ("C", "C-tv")
ASYMPTOTIC = ("B", "B-nonuniform", "C-tv")


def lyapunov_V(x, g: Graph) -> float:
    """``x^T L x / 2``."""
    return 0.5 * laplacian_quadratic(g, x)


def lyapunov_sq(x) -> float:
    """Half the squared distance of ``x`` from its mean."""
    x = np.asarray(x, dtype=float)
    c = x - x.mean()
    return 0.5 * float(c @ c)


def spread_W(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.max() - x.min())


def _node_sums(x, g):
    return -(g.laplacian() @ np.asarray(x, dtype=float))


def in_E(x, g: Graph, eps: float) -> bool:
    return bool(np.all(np.abs(_node_sums(x, g)) < eps))


def in_E2(x, g: Graph, eps: float) -> bool:
    return bool(np.all(np.abs(_node_sums(x, g)) < 2 * eps))


def in_E_prime(x, g: Graph, eps: float) -> bool:
    if not g.edges:
        return True
    return bool(np.all(np.abs(g.incidence() @ np.asarray(x, dtype=float)) < eps))


def cost_bounds(g: Graph, x0, eps: float) -> tuple[float, float, float]:
    """Time, per-agent poll, and total message bounds from the initial disagreement."""
    S = laplacian_quadratic(g, x0)
    d = g.d_max
    T_bound = 2 * (1 + d) / eps * S
    C_bound = 8 * d * (1 + d) / eps**2 * S
    msg_bound = 8 * d**2 * (1 + d) * g.n / eps**2 * S
    return T_bound, C_bound, msg_bound


@dataclass
class BoundReport:
    T_observed: float
    T_bound: float
    C_observed: int
    C_bound: float
    msg_observed: int
    msg_bound: float
    T_satisfied: bool
    C_satisfied: bool
    msg_satisfied: bool
    T_slack: float
    C_slack: float
    msg_slack: float
    # same bounds with V(0) = sum/2, the tighter reading
    T_bound_half: float
    C_bound_half: float
    T_satisfied_half: bool
    C_satisfied_half: bool

    @property
    def satisfied(self) -> bool:
        return self.T_satisfied and self.C_satisfied and self.msg_satisfied

    def to_dict(self):
        out = asdict(self)
        out["satisfied"] = self.satisfied
        return out


def bound_report(g: Graph, x0, eps: float, T: float, C: int, msgs: int) -> BoundReport:
    T_b, C_b, m_b = cost_bounds(g, x0, eps)

    def ratio(obs, bound):
        return obs / bound if bound > 0 else (0.0 if obs == 0 else float("inf"))

    return BoundReport(
        T_observed=T, T_bound=T_b, C_observed=C, C_bound=C_b,
        msg_observed=msgs, msg_bound=m_b,
        T_satisfied=T <= T_b, C_satisfied=C <= C_b, msg_satisfied=msgs <= m_b,
        T_slack=ratio(T, T_b), C_slack=ratio(C, C_b), msg_slack=ratio(msgs, m_b),
        T_bound_half=T_b / 2, C_bound_half=C_b / 2,
        T_satisfied_half=T <= T_b / 2, C_satisfied_half=C <= C_b / 2,
    )


def _w_trend(times, W):
    if len(times) < 3:
        return None
    half = times[-1] / 2
    sel = times >= half
    if sel.sum() < 2 or np.ptp(times[sel]) == 0:
        return None
    return float(np.polyfit(times[sel], W[sel], 1)[0])


def finalize(trace: Trace, summary, g: Graph, x0, ctx: dict, verify: bool = False,
             w_target: Optional[float] = None):
    """Fill protocol-independent summary fields and attach the run context."""
    ctx = dict(ctx)
    ctx["graph"] = g
    ctx["x0"] = [float(v) for v in x0]
    ctx["stop_reason"] = summary.stop_reason
    trace.context = ctx
    protocol = ctx["protocol"]
    kind = POLL_EDGE if protocol in EDGE_PROTOCOLS else POLL
    polls = trace.poll_times(kind)
    n_keys = g.m if kind == POLL_EDGE else g.n
    summary.polls = [len(polls.get(k, [])) for k in range(n_keys)]
    summary.total_messages = int(sum(r.messages for r in trace.records))
    xf = np.asarray(summary.final_x)
    summary.W_final = spread_W(xf)
    summary.V_final = lyapunov_V(xf, g)

    if protocol in ASYMPTOTIC:
        W = np.max(trace.x, axis=1) - np.min(trace.x, axis=1)
        summary.W_trend = _w_trend(trace.times, W)
        summary.w_target = w_target
        summary.converged = w_target is not None and summary.W_final <= w_target
        summary.beta = float((xf.max() + xf.min()) / 2)
    if protocol in EDGE_PROTOCOLS:
        summary.beta = float(np.mean(xf))

    T = summary.T_enter
    if T is not None and protocol not in ASYMPTOTIC:
        summary.C = max((sum(1 for t in ts if t <= T) - 1 for ts in polls.values()), default=0)
        # same indexing as C: the t_0 poll is not counted
        seen = set()
        msgs = 0
        for r in trace.records:
            if r.kind != kind:
                continue
            if r.target in seen and r.t <= T:
                msgs += r.messages
            seen.add(r.target)
        summary.messages_to_T = msgs
        if protocol in ("A", "C") and summary.converged:
            summary.bound_report = bound_report(
                g, x0, ctx["eps"], T, summary.C, summary.messages_to_T).to_dict()
            ctx["bound_report"] = summary.bound_report
    if verify:
        summary.monitors = verify_trace(trace).to_dict()
    return summary


# --------------------------------------------------------------------- monitors

@dataclass
class MonitorResult:
    name: str
    passed: bool
    checked: int
    first_violation: Optional[float] = None
    detail: str = ""


@dataclass
class MonitorReport:
    results: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failures(self):
        return [r for r in self.results.values() if not r.passed]

    def to_dict(self):
        out = {name: asdict(r) for name, r in self.results.items()}
        out["all_passed"] = self.passed
        return out


def _first_fail(times, bad, name, checked, detail):
    idx = np.flatnonzero(bad)
    if idx.size:
        return MonitorResult(name, False, checked, float(times[idx[0]]), detail)
    return MonitorResult(name, True, checked)


def dwell_floors(ctx) -> dict:
    """Guaranteed minimal inter-poll interval per agent (or per edge index)."""
    g: Graph = ctx["graph"]
    p = ctx["protocol"]
    deg = [d if d else 1 for d in g.degrees]
    if p == "A":
        return {i: ctx["eps"] / (4 * deg[i]) for i in range(g.n)}
    if p in ("A-delay", "A-quantized"):
        R = ctx["R"]
        return {i: ctx["alpha"] * ctx["eps"] / (2 * deg[i] * R[i]) for i in range(g.n)}
    if p == "B":
        r = ratio_infimum(ctx["eps_sched"], ctx["gamma_sched"])
        return {i: r / (4 * deg[i]) for i in range(g.n)}
    if p == "B-nonuniform":
        return dict(enumerate(ctx["c_i"]))
    if p == "C":
        return {k: ctx["eps"] / (2 * (g.degrees[i] + g.degrees[j]))
                for k, (i, j) in enumerate(g.edges)}
    if p == "C-tv":
        r = ratio_infimum(ctx["eps_sched"], ctx["gamma_sched"])
        return {k: r / (2 * (g.degrees[i] + g.degrees[j]))
                for k, (i, j) in enumerate(g.edges)}
    raise ValueError(f"unknown protocol {p!r}")


def _check_dwell(trace, ctx):
    kind = POLL_EDGE if ctx["protocol"] in EDGE_PROTOCOLS else POLL
    floors = dwell_floors(ctx)
    checked = 0
    first = None
    worst = None
    for key, ts in trace.poll_times(kind).items():
        ts = np.asarray(ts)
        if ts.size < 2:
            continue
        gaps = np.diff(ts)
        checked += gaps.size
        bad = np.flatnonzero(gaps < floors[key] - DWELL_TOL)
        if bad.size:
            t_bad = float(ts[bad[0] + 1])
            if first is None or t_bad < first:
                first = t_bad
                worst = f"key {key}: gap {gaps[bad[0]]!r} < floor {floors[key]!r}"
    if first is not None:
        return MonitorResult("dwell_time", False, checked, first, worst)
    return MonitorResult("dwell_time", True, checked)


def _threshold(ctx, key, t):
    p = ctx["protocol"]
    if p in ("A", "C"):
        return ctx["eps"]
    if p in ("B", "C-tv"):
        return ctx["eps_sched"].value(t)
    if p == "B-nonuniform":
        return ctx["eps_i"][key].value(t)
    return None


def _check_half(trace, ctx, S):
    """After a poll with |measurement| >= threshold, the measured sum keeps its
    sign and at least half its magnitude until the next poll."""
    kind = POLL_EDGE if ctx["protocol"] in EDGE_PROTOCOLS else POLL
    times = trace.times
    checked = 0
    first = None
    detail = ""
    by_key: dict[int, list] = {}
    for r in trace.records:
        if r.kind == kind:
            by_key.setdefault(r.target, []).append(r)
    for key, recs in by_key.items():
        for k, r in enumerate(recs):
            thr = _threshold(ctx, key, r.t)
            if not abs(r.value) >= thr:
                continue
            t_next = recs[k + 1].t if k + 1 < len(recs) else times[-1]
            lo = np.searchsorted(times, r.t, side="left")
            hi = np.searchsorted(times, t_next, side="right")
            seg = S[lo:hi, key] * np.sign(r.value)
            checked += seg.size
            bad = np.flatnonzero(seg < abs(r.value) / 2 - TOL)
            if bad.size:
                t_bad = float(times[lo + bad[0]])
                if first is None or t_bad < first:
                    first = t_bad
                    detail = f"key {key} polled at {r.t!r} with {r.value!r}"
    if first is not None:
        return MonitorResult("half_preservation", False, checked, first, detail)
    return MonitorResult("half_preservation", True, checked)


def _check_sign(times, U, S):
    # the control recorded at a sample stays in force until the next sample
    prod_start = U * S
    prod_end = U[:-1] * S[1:]
    bad = np.any(prod_start < -TOL, axis=1)
    bad[:-1] |= np.any(prod_end < -TOL, axis=1)
    return _first_fail(times, bad, "sign_consistency", U.size, "control opposes measured sum")


def _check_monotone(times, values, name, increasing=False):
    d = np.diff(values)
    bad = d < -TOL if increasing else d > TOL
    return _first_fail(times[1:], bad, name, d.size,
                       "non-decreasing" if increasing else "non-increasing")


def verify_trace(trace: Trace, ctx: Optional[dict] = None) -> MonitorReport:
    """Run every monitor applicable to the trace's protocol."""
    ctx = ctx or trace.context
    g: Graph = ctx["graph"]
    p = ctx["protocol"]
    times, X = trace.times, trace.x
    results = {}
    if X.shape[0] == 0:
        return MonitorReport(results)

    results["dwell_time"] = _check_dwell(trace, ctx)
    if p in NODE_PROTOCOLS:
        S = X @ (-g.laplacian()).T
        results["sign_consistency"] = _check_sign(times, trace.u, S)
    else:
        S = X @ g.incidence().T
        if trace.edge_u is not None and g.m:
            results["sign_consistency"] = _check_sign(times, trace.edge_u, S)
    if p in ("A", "B", "B-nonuniform", "C", "C-tv"):
        results["half_preservation"] = _check_half(trace, ctx, S)

    if p in NODE_PROTOCOLS:
        diffs = X @ g.incidence().T if g.m else np.zeros((X.shape[0], 1))
        V = 0.5 * np.sum(diffs**2, axis=1)
        results["lyapunov_V"] = _check_monotone(times, V, "lyapunov_V")
    else:
        C = X - X.mean(axis=1, keepdims=True)
        V2 = 0.5 * np.sum(C**2, axis=1)
        results["lyapunov_sq"] = _check_monotone(times, V2, "lyapunov_sq")
    results["max_nonincreasing"] = _check_monotone(times, X.max(axis=1), "max_nonincreasing")
    results["min_nondecreasing"] = _check_monotone(times, X.min(axis=1), "min_nondecreasing",
                                                   increasing=True)
    if p in ASYMPTOTIC:
        results["spread_W"] = _check_monotone(times, X.max(axis=1) - X.min(axis=1), "spread_W")

    if p in EDGE_PROTOCOLS:
        s0 = float(np.sum(ctx["x0"]))
        drift = np.abs(X.sum(axis=1) - s0)
        results["average_conservation"] = _first_fail(
            times, drift > TOL, "average_conservation", drift.size, "sum of states drifted")

    frozen = bool(np.all(trace.u[-1] == 0)) and p not in ASYMPTOTIC
    stop = ctx.get("stop_reason")
    if stop == "frozen":
        xf = X[-1]
        eps = ctx["eps"]
        member = {"A": in_E, "A-delay": in_E, "A-quantized": in_E2, "C": in_E_prime}[p]
        ok = member(xf, g, eps) and frozen
        results["target_at_freeze"] = MonitorResult(
            "target_at_freeze", ok, 1, None if ok else float(times[-1]),
            "" if ok else "final state outside target set or controls nonzero")
        if p == "C":
            ok = spread_W(xf) < eps * g.diameter()
            results["spread_at_freeze"] = MonitorResult(
                "spread_at_freeze", ok, 1, None if ok else float(times[-1]),
                "" if ok else "spread not below eps * diameter")
        rep = ctx.get("bound_report")
        if rep is not None:
            ok = bool(rep["satisfied"])
            results["cost_bounds"] = MonitorResult(
                "cost_bounds", ok, 3, None if ok else float(times[-1]),
                "" if ok else "observed cost exceeds bound")
    return MonitorReport(results)
