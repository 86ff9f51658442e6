import numpy as np
import pytest

from selftrig.analysis import in_E_prime
from selftrig.engine import POLL_EDGE
from selftrig.graph import path, ring
from selftrig.protocol_gossip import (EdgeState, check_no_zeno_edge, jump_protocol_c, node_rates,
                                      simulate_protocol_c, simulate_protocol_c_tv, trigger_f_edge)
from selftrig.protocol_node import simulate_protocol_a
from selftrig.protocol_timevarying import ZenoError
from selftrig.schedules import ScalarSchedule

H = ScalarSchedule.hyperbolic


def test_trigger_f_edge():
    assert trigger_f_edge(2.0, 1, 1, 0.02) == 0.5
    assert trigger_f_edge(0.001, 2, 2, 0.01) == 0.01 / 8
    assert trigger_f_edge(-0.01, 2, 3, 0.01) == 0.01 / 10


def test_jump_protocol_c():
    g = path(2)
    st = EdgeState.initial([1.0, -1.0], g.m)
    evs = jump_protocol_c(st, g, 0.02, [0], 0.0)
    assert st.u_edge == [-1]
    assert st.u(g, 0, 1) == -1 and st.u(g, 1, 0) == 1
    assert [e.time for e in evs] == [0.5]
    assert node_rates(st, g).tolist() == [-1.0, 1.0]
    assert st.log[0].messages == 2
    assert jump_protocol_c(st, g, 0.02, [], 1.0) == []


def test_jump_deadzone():
    g = ring(4)
    st = EdgeState.initial([0.0, 0.005, 0.0, 0.0], g.m)
    jump_protocol_c(st, g, 0.01, [0], 1.0)
    assert st.u_edge[0] == 0 and st.next_poll_edge[0] == 1.0 + 0.01 / 8


def test_two_node_equivalence():
    ta, sa = simulate_protocol_a(path(2), [1.0, -1.0], 0.02)
    tc, sc = simulate_protocol_c(path(2), [1.0, -1.0], 0.02, verify=True)
    assert tc.poll_times(POLL_EDGE)[0] == ta.poll_times()[0]
    assert sc.final_x == sa.final_x == [0.0078125, -0.0078125]
    assert sc.T_freeze == 0.9921875 and sc.T_enter == pytest.approx(0.99, abs=1e-12)
    assert sc.C == 6
    assert sc.monitors["all_passed"]


def test_constant_start():
    _, s = simulate_protocol_c(ring(5), [0.1] * 5, 0.02)
    assert s.T_freeze == 0.0 and s.converged


def test_ring5_mean_conserved():
    x0 = np.random.default_rng(3).uniform(-1, 1, 5).tolist()
    trace, s = simulate_protocol_c(ring(5), x0, 0.02, sample_dt=0.01, verify=True)
    assert np.abs(trace.x.mean(axis=1) - np.mean(x0)).max() < 1e-9
    assert s.converged and in_E_prime(s.final_x, ring(5), 0.02)
    assert s.monitors["all_passed"]
    assert s.bound_report["satisfied"]


def test_tv_single_edge_dwell():
    cs = check_no_zeno_edge(H(0.05), H(0.25), path(2))
    assert cs["c_edge"] == pytest.approx(0.05)
    assert cs["c_node_form"] == pytest.approx(0.05)
    trace, s = simulate_protocol_c_tv(path(2), [1.0, -1.0], H(0.05), H(0.25), horizon=50.0)
    assert np.diff(trace.poll_times(POLL_EDGE)[0]).min() >= 0.05 - 1e-12


def test_tv_ring5():
    x0 = np.random.default_rng(8).uniform(-1, 1, 5).tolist()
    trace, s = simulate_protocol_c_tv(ring(5), x0, H(0.05), H(0.25), horizon=200.0,
                                      w_target=0.01, verify=True)
    assert s.converged and s.W_final < 0.01
    assert s.monitors["all_passed"]
    assert abs(np.mean(s.final_x) - np.mean(x0)) < 1e-9


def test_tv_static_and_rejects():
    trace, _ = simulate_protocol_c_tv(ring(4), [1.0] * 4, H(0.05), H(0.25), horizon=5.0)
    assert np.all(trace.x == 1.0)
    with pytest.raises(ZenoError):
        check_no_zeno_edge(H(0.05, 2), H(0.25, 1), ring(4))
