"""Exact event-driven simulation of self-triggered ternary consensus."""

from .analysis import (bound_report, cost_bounds, in_E, in_E2, in_E_prime, lyapunov_sq,
                       lyapunov_V, spread_W, verify_trace)
from .engine import EventQueue, RunSummary, SimulationError, Trace, flow, run
from .graph import (Graph, GraphError, complete, erdos_renyi, laplacian_quadratic,
                    parse_edge_list, path, ring)
from .protocol_gossip import (check_no_zeno_edge, simulate_protocol_c, simulate_protocol_c_tv,
                              trigger_f_edge)
from .protocol_node import (ConfigError, DelayModel, RobustParams, ave, delay_feasible,
                            quantized_feasible, qave, simulate_protocol_a, simulate_robust_delay,
                            simulate_robust_quantized, trigger_f, trigger_f_alpha)
from .protocol_timevarying import (TvParams, ZenoError, check_no_zeno, check_no_zeno_nonuniform,
                                   simulate_nonuniform, simulate_protocol_b)
from .quantize import q_uniform, sign_eps
from .schedules import ScalarSchedule, ScheduleError

__all__ = [name for name in dir() if not name.startswith("_")]
