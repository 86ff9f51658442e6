"""Event-driven hybrid simulation core.

State flows are piecewise linear (in time, or in the integral of a gain
schedule) between events, so the engine advances them exactly instead of
stepping.  Events carry absolute times fixed when they are scheduled; agents'
clocks are implicit in those times.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .schedules import ScalarSchedule

ACTUATE, POLL, POLL_EDGE = 0, 1, 2
KIND_NAMES = {ACTUATE: "actuate", POLL: "poll", POLL_EDGE: "poll_edge"}


class SimulationError(RuntimeError):
    pass


class Event(NamedTuple):
    time: float
    kind: int
    target: int  # agent id, or edge index for POLL_EDGE
    payload: Optional[tuple] = None


class EventRecord(NamedTuple):
    """One processed event, as logged in the trace."""

    t: float
    kind: int
    target: int
    value: float  # measurement taken (nan for actuations)
    control: Optional[int]  # control applied at t (None if not updated at t)
    duration: Optional[float]  # time until the next poll (None if not scheduled)
    messages: int


class EventQueue:
    """Priority queue ordered by (time, kind rank, target, insertion seq)."""

    def __init__(self):
        self._heap = []
        self._seq = 0
        self.now = 0.0

    def __len__(self):
        return len(self._heap)

    def push(self, ev: Event):
        if not math.isfinite(ev.time) or ev.time < self.now:
            raise SimulationError(f"cannot schedule {ev} before current time {self.now}")
        heapq.heappush(self._heap, (ev.time, ev.kind, ev.target, self._seq, ev))
        self._seq += 1

    def peek_time(self) -> float:
        if not self._heap:
            raise SimulationError("event queue is empty")
        return self._heap[0][0]

    def pop_batch(self) -> tuple[float, list[Event]]:
        """Remove and return every event sharing the minimal time (exact equality)."""
        if not self._heap:
            raise SimulationError("event queue is empty")
        heap = self._heap
        t = heap[0][0]
        batch = []
        while heap and heap[0][0] == t:
            batch.append(heapq.heappop(heap)[4])
        self.now = t
        return t, batch


Gain = Union[None, ScalarSchedule, Sequence[ScalarSchedule]]


def gain_integral(gamma: Gain, t0: float, t1: float):
    """Flow length over ``[t0, t1]``: scalar, or per-agent array for per-agent gains."""
    if gamma is None:
        return t1 - t0
    if isinstance(gamma, ScalarSchedule):
        return gamma.integral(t0, t1)
    return np.array([g.integral(t0, t1) for g in gamma])


def flow(x, rates, t0: float, t1: float, gamma: Gain = None) -> np.ndarray:
    """Advance ``dx_i/dt = gain_i(t) * rate_i`` exactly from ``t0`` to ``t1``."""
    if t1 < t0:
        raise SimulationError(f"cannot flow backwards from {t0} to {t1}")
    x = np.asarray(x, dtype=float)
    if t1 == t0:
        return x.copy()
    return x + np.asarray(rates, dtype=float) * gain_integral(gamma, t0, t1)


@dataclass
class TargetSet:
    """Open box ``{x : |M x|_inf < bound}`` used for entry-time detection."""

    name: str
    M: np.ndarray
    bound: float

    def contains(self, x) -> bool:
        return bool(np.all(np.abs(self.M @ x) < self.bound))

    def entry_offset(self, x0, rates, length: float) -> Optional[float]:
        """Smallest ``s`` in ``[0, length]`` with ``x0 + s*rates`` in the closure of
        the entry interval, i.e. the infimum of the open set of times inside."""
        a = self.M @ x0
        b = self.M @ rates
        lo, hi = -math.inf, math.inf
        for ak, bk in zip(a.tolist(), b.tolist()):
            if bk == 0.0:
                if not abs(ak) < self.bound:
                    return None
                continue
            s1 = (-self.bound - ak) / bk
            s2 = (self.bound - ak) / bk
            if s1 > s2:
                s1, s2 = s2, s1
            lo = max(lo, s1)
            hi = min(hi, s2)
        if lo >= hi or hi <= 0.0 or lo >= length:
            return None
        return max(lo, 0.0)


class HybridModel:
    """Protocol hooks driven by :func:`run`.  Subclasses own the discrete state."""

    name = "model"
    gamma: Gain = None
    target: Optional[TargetSet] = None
    n_edges = 0

    def initial_events(self) -> list[Event]:
        raise NotImplementedError

    def apply(self, t: float, batch: list[Event]) -> list[Event]:
        raise NotImplementedError

    def rates(self) -> np.ndarray:
        raise NotImplementedError

    def controls(self) -> np.ndarray:
        return self.rates()

    def edge_controls(self):
        return None

    def quiescent(self) -> bool:
        """No control is active (so the state is constant right now)."""
        return not np.any(self.rates())

    def is_frozen(self) -> bool:
        """State can never change again; only asked when quiescent."""
        return False

    def tail_periods(self):
        return None


class _Rows:
    """Row collector; rows are copied on append and stacked once at the end."""

    def __init__(self, width):
        self.width = width
        self.rows = []

    def append(self, row):
        self.rows.append(list(row) if isinstance(row, list) else row.tolist())

    def array(self):
        if not self.rows:
            return np.empty((0, self.width))
        return np.array(self.rows, dtype=float)


@dataclass
class Trace:
    n: int
    times: np.ndarray
    x: np.ndarray
    u: np.ndarray
    is_event: np.ndarray
    records: list
    edge_u: Optional[np.ndarray] = None
    context: dict = field(default_factory=dict)

    def poll_times(self, kind=POLL) -> dict[int, list[float]]:
        out: dict[int, list[float]] = {}
        for r in self.records:
            if r.kind == kind:
                out.setdefault(r.target, []).append(r.t)
        return out


@dataclass
class RunSummary:
    protocol: str
    stop_reason: str
    converged: bool
    T_enter: Optional[float]
    T_freeze: Optional[float]
    t_end: float
    n_events: int
    n_batches: int
    C: Optional[int] = None
    total_messages: int = 0
    messages_to_T: Optional[int] = None
    polls: list = field(default_factory=list)
    beta: Optional[float] = None
    final_x: list = field(default_factory=list)
    W_final: Optional[float] = None
    V_final: Optional[float] = None
    W_trend: Optional[float] = None
    w_target: Optional[float] = None
    tail_periods: Optional[list] = None
    feasibility: Optional[dict] = None
    bound_report: Optional[dict] = None
    monitors: Optional[dict] = None
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def run(model: HybridModel, horizon: float, max_events: int = 2_000_000,
        sample_dt: Optional[float] = None) -> tuple[Trace, RunSummary]:
    """Simulate until freeze, horizon, or the event cap, whichever comes first."""
    if not horizon > 0:
        raise SimulationError(f"horizon must be positive, got {horizon}")
    if max_events < 1:
        raise SimulationError(f"max_events must be >= 1, got {max_events}")
    if sample_dt is not None and not sample_dt > 0:
        raise SimulationError(f"sample_dt must be positive, got {sample_dt}")

    n = len(model.x)
    gamma = model.gamma
    target = model.target
    queue = EventQueue()
    for ev in model.initial_events():
        queue.push(ev)

    X, U = _Rows(n), _Rows(n)
    UE = _Rows(model.n_edges) if model.n_edges else None
    times: list[float] = []
    flags: list[bool] = []

    def record(t, x, is_event):
        times.append(t)
        flags.append(is_event)
        X.append(x)
        U.append(model.controls())
        if UE is not None:
            UE.append(model.edge_controls())

    rates_of = model.rates

    t = 0.0
    x = np.array(model.x, dtype=float)
    T_enter = 0.0 if target is not None and target.contains(x) else None
    zero_since = None
    n_events = n_batches = 0
    grid_k = 1
    stop = None

    def advance(t0, t1, x0, rates):
        nonlocal grid_k, T_enter
        if sample_dt is not None:
            while True:
                g = grid_k * sample_dt
                if g >= t1:
                    break
                if g > t0:
                    record(g, flow(x0, rates, t0, g, gamma), False)
                grid_k += 1
        x1 = x0 + rates * gain_integral(gamma, t0, t1)
        if T_enter is None and target is not None and gamma is None:
            s = target.entry_offset(x0, rates, t1 - t0)
            if s is not None:
                T_enter = t0 + s
        return x1

    while True:
        t_next = queue.peek_time()
        if t_next > horizon:
            stop = "horizon"
            break
        if t_next > t:
            x = advance(t, t_next, x, rates_of())
        t, batch = queue.pop_batch()
        model.x = x
        for ev in model.apply(t, batch):
            queue.push(ev)
        n_events += len(batch)
        n_batches += 1
        record(t, x, True)
        if model.quiescent():
            if zero_since is None:
                zero_since = t
            if model.is_frozen():
                stop = "frozen"
                break
        else:
            zero_since = None
        if n_events >= max_events:
            stop = "event-cap"
            break

    if stop == "horizon" and horizon > t:
        x = advance(t, horizon, x, model.rates())
        model.x = x
        t = horizon
        record(t, x, False)

    trace = Trace(
        n=n,
        times=np.array(times),
        x=X.array(),
        u=U.array(),
        is_event=np.array(flags, dtype=bool),
        records=list(model.log),
        edge_u=UE.array() if UE is not None else None,
    )
    converged = stop == "frozen"
    summary = RunSummary(
        protocol=model.name,
        stop_reason=stop,
        converged=converged,
        T_enter=T_enter,
        T_freeze=zero_since if converged else None,
        t_end=t,
        n_events=n_events,
        n_batches=n_batches,
        final_x=x.tolist(),
        tail_periods=model.tail_periods() if converged else None,
    )
    if stop == "event-cap":
        summary.flags.append("event-cap")
    return trace, summary
