import numpy as np
import pytest

from selftrig.engine import (ACTUATE, POLL, POLL_EDGE, Event, EventQueue, SimulationError,
                             TargetSet, flow, gain_integral)
from selftrig.graph import path, ring
from selftrig.protocol_node import simulate_protocol_a
from selftrig.schedules import ScalarSchedule


def test_pop_batch_groups_exact_ties():
    q = EventQueue()
    for i in reversed(range(5)):
        q.push(Event(0.0, POLL, i))
    t, batch = q.pop_batch()
    assert t == 0.0 and [e.target for e in batch] == [0, 1, 2, 3, 4]


def test_pop_batch_distinct_floats():
    q = EventQueue()
    q.push(Event(0.5, POLL, 0))
    q.push(Event(np.nextafter(0.5, 1.0), POLL, 1))
    assert len(q.pop_batch()[1]) == 1
    assert len(q.pop_batch()[1]) == 1
    assert len(q) == 0


def test_kind_rank_orders_batch():
    q = EventQueue()
    q.push(Event(1.0, POLL_EDGE, 0))
    q.push(Event(1.0, POLL, 3))
    q.push(Event(1.0, ACTUATE, 7))
    q.push(Event(1.0, POLL, 1))
    _, batch = q.pop_batch()
    assert [(e.kind, e.target) for e in batch] == [(ACTUATE, 7), (POLL, 1), (POLL, 3),
                                                   (POLL_EDGE, 0)]


def test_queue_errors():
    q = EventQueue()
    with pytest.raises(SimulationError):
        q.pop_batch()
    q.push(Event(1.0, POLL, 0))
    q.pop_batch()
    with pytest.raises(SimulationError):
        q.push(Event(0.5, POLL, 0))
    with pytest.raises(SimulationError):
        q.push(Event(float("inf"), POLL, 0))


def test_flow_exact():
    x = flow([1.0, -1.0], [-1, 1], 0.0, 0.5)
    assert x.tolist() == [0.5, -0.5]
    assert flow([1.0], [0], 3.0, 3.0).tolist() == [1.0]
    with pytest.raises(SimulationError):
        flow([0.0], [1], 1.0, 0.5)


def test_flow_with_gain():
    g = ScalarSchedule.hyperbolic(0.25, 1)
    x = flow([0.0, 0.0], [1, -1], 0.0, np.e - 1, g)
    assert x == pytest.approx([0.25, -0.25], rel=1e-15)
    per_agent = gain_integral([ScalarSchedule.constant(1), ScalarSchedule.constant(2)], 0, 2)
    assert per_agent.tolist() == [2.0, 4.0]


def test_entry_offset():
    ts = TargetSet("E", np.array([[1.0, -1.0]]), 0.1)
    # x0 - x1 starts at 1, shrinks at rate 2
    assert ts.entry_offset(np.array([0.5, -0.5]), np.array([-1.0, 1.0]), 1.0) == pytest.approx(
        0.45)
    assert ts.entry_offset(np.array([0.5, -0.5]), np.array([-1.0, 1.0]), 0.4) is None
    assert ts.entry_offset(np.array([0.5, -0.5]), np.array([0.0, 0.0]), 1.0) is None
    assert ts.entry_offset(np.array([0.0, 0.0]), np.array([0.0, 0.0]), 1.0) == 0.0


def test_frozen_initial_state():
    trace, s = simulate_protocol_a(ring(5), [0.3] * 5, 0.02)
    assert s.T_enter == 0.0 and s.T_freeze == 0.0
    assert s.stop_reason == "frozen"
    assert {r.t for r in trace.records} == {0.0}


def test_horizon_before_first_gap():
    trace, s = simulate_protocol_a(path(2), [1.0, -1.0], 0.02, horizon=0.1)
    assert s.stop_reason == "horizon" and not s.converged
    assert {r.t for r in trace.records} == {0.0}
    assert trace.times[0] == 0.0 and trace.times[-1] == 0.1
    assert trace.x[-1].tolist() == pytest.approx([0.9, -0.9])


def test_event_cap_flag():
    _, s = simulate_protocol_a(ring(5), [0, 1, 2, 3, 4], 0.02, max_events=7)
    assert s.stop_reason == "event-cap" and "event-cap" in s.flags


def test_batches_strictly_increase_and_sampling():
    trace, s = simulate_protocol_a(ring(6), [0, 1, 0, 1, 0, 1.5], 0.05, sample_dt=0.01)
    ev = trace.times[trace.is_event]
    assert np.all(np.diff(ev) > 0)
    assert np.all(np.diff(trace.times) >= 0)
    grid = trace.times[~trace.is_event]
    assert np.allclose(grid / 0.01, np.round(grid / 0.01))


def test_determinism():
    a = simulate_protocol_a(ring(7), [0.1 * i ** 2 for i in range(7)], 0.01, sample_dt=0.05)
    b = simulate_protocol_a(ring(7), [0.1 * i ** 2 for i in range(7)], 0.01, sample_dt=0.05)
    assert a[0].times.tobytes() == b[0].times.tobytes()
    assert a[0].x.tobytes() == b[0].x.tobytes()
    assert a[0].records == b[0].records
    assert a[1].to_dict() == b[1].to_dict()


def test_rejects_bad_run_args():
    with pytest.raises(SimulationError):
        simulate_protocol_a(path(2), [1, -1], 0.02, horizon=0)
    with pytest.raises(SimulationError):
        simulate_protocol_a(path(2), [1, -1], 0.02, sample_dt=-1)
