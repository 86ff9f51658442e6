import numpy as np
import pytest

from selftrig.graph import Graph, path, ring
from selftrig.protocol_node import ConfigError
from selftrig.protocol_timevarying import (TvParams, TvState, ZenoError, check_no_zeno,
                                           check_no_zeno_nonuniform, jump_nonuniform,
                                           jump_protocol_b, simulate_nonuniform,
                                           simulate_protocol_b)
from selftrig.schedules import ScalarSchedule

H, C = ScalarSchedule.hyperbolic, ScalarSchedule.constant


def test_no_zeno_hyperbolic_pair():
    assert check_no_zeno(H(0.05), H(0.25), ring(5)) == 0.025


def test_no_zeno_growing_ratio():
    assert check_no_zeno(H(0.3, 1), H(0.5, 2), ring(4)) == pytest.approx(0.3 / (4 * 2 * 0.5))


def test_no_zeno_rejects():
    with pytest.raises(ZenoError):
        check_no_zeno(H(0.05, 2), H(0.25, 1), ring(5))
    with pytest.raises(ConfigError, match="constant"):
        check_no_zeno(C(0.05), H(0.25), ring(5))


def _params():
    return TvParams(eps_sched=H(0.05), gamma_sched=H(0.25))


def test_jump_b_deadzone_and_active():
    g = ring(5)
    st = TvState.initial([0.0, 0.01, 0.0, 0.0, 0.0])
    jump_protocol_b(st, g, _params(), [0], 0.0)
    assert st.u[0] == 0 and st.next_poll[0] == pytest.approx(0.025)
    st = TvState.initial([0.0, 0.2, 0.0, 0.0, 0.2])
    jump_protocol_b(st, g, _params(), [0], 0.0)
    assert st.u[0] == 1 and st.next_poll[0] == pytest.approx(0.2)
    assert jump_protocol_b(st, g, _params(), [], 1.0) == []


def test_vanishing_gain_dwell():
    x0 = np.random.default_rng(1).uniform(-1, 1, 5).tolist()
    trace, s = simulate_protocol_b(ring(5), x0, _params(), horizon=50.0, verify=True)
    gaps = np.concatenate([np.diff(v) for v in trace.poll_times().values()])
    assert gaps.min() >= 0.025 - 1e-12
    assert s.monitors["all_passed"]
    assert s.W_final < max(x0) - min(x0) and s.W_trend <= 0


def test_necessity_counterexample():
    params = TvParams(eps_sched=H(0.05), gamma_sched=H(0.25, 2))
    trace, s = simulate_protocol_b(path(2), [1.25, -1.25], params, horizon=1e3, sample_dt=1.0)
    assert trace.x[:, 0].min() >= 1 and trace.x[:, 1].max() <= -1
    assert (trace.x[:, 0] - trace.x[:, 1]).min() >= 2
    assert "gamma-integrable" in s.flags
    assert s.feasibility["gamma_total_integral"] == 0.25


def test_constant_start_is_static():
    trace, s = simulate_protocol_b(ring(4), [0.5] * 4, _params(), horizon=5.0)
    assert np.all(trace.u == 0) and np.all(trace.x == 0.5)


def test_nonuniform_reduces_to_b():
    g = ring(5)
    x0 = np.random.default_rng(3).uniform(-1, 1, 5).tolist()
    tb, _ = simulate_protocol_b(g, x0, _params(), horizon=5.0)
    tn, _ = simulate_nonuniform(g, x0, [H(0.05)] * 5, [H(0.25)] * 5, horizon=5.0)
    rb = [(r.t, r.target, r.control) for r in tb.records]
    rn = [(r.t, r.target, r.control) for r in tn.records]
    assert len(rb) == len(rn)
    assert [k[1:] for k in rb] == [k[1:] for k in rn]
    assert np.allclose([k[0] for k in rb], [k[0] for k in rn], rtol=1e-12, atol=1e-12)


def test_nonuniform_constants():
    c = check_no_zeno_nonuniform([H(0.05)] * 2, [H(0.25), H(0.5)], path(2))
    assert c == pytest.approx([1 / 30, 1 / 30])
    with pytest.raises(ConfigError):
        check_no_zeno_nonuniform([H(0.05)] * 2, [H(0.25), H(0.5, 2)], path(2))
    with pytest.raises(ConfigError):
        check_no_zeno_nonuniform([H(0.05)] * 2, [H(0.25)], path(2))


def test_nonuniform_jump_uses_neighbor_gains():
    g = path(2)
    params = TvParams(eps_i=[H(0.05)] * 2, gamma_i=[H(0.25), H(0.5)])
    st = TvState.initial([1.0, -1.0])
    jump_nonuniform(st, g, params, [0, 1], 0.0)
    # fbar = |ave|/2 = 1, Gamma = 0.25 + 0.5
    assert st.next_poll == [pytest.approx(1 / 0.75)] * 2
    assert st.u == [-1, 1]


def test_nonuniform_run():
    g = ring(5)
    x0 = np.random.default_rng(9).uniform(-1, 1, 5).tolist()
    gam = [H(a) for a in (0.25, 0.5, 0.3, 0.45, 0.2)]
    trace, s = simulate_nonuniform(g, x0, [H(0.05)] * 5, gam, horizon=20.0, verify=True)
    assert s.monitors["all_passed"]
    for i, ts in trace.poll_times().items():
        assert np.diff(ts).min() >= s.feasibility["c_i"][i] - 1e-12
    trace, _ = simulate_nonuniform(g, [0.2] * 5, [H(0.05)] * 5, gam, horizon=5.0)
    assert np.all(trace.x == 0.2)


def test_isolated_agent_nonuniform():
    g = Graph.from_edges(3, [(0, 1)])
    _, s = simulate_nonuniform(g, [1.0, -1.0, 3.0], [H(0.05)] * 3, [H(0.25)] * 3, horizon=5.0,
                               verify=True)
    assert s.final_x[2] == 3.0 and s.monitors["all_passed"]
