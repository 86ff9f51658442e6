"""Reproduction runs shared by ``scripts/`` and the acceptance tests."""

from __future__ import annotations

import numpy as np

from .graph import Graph, complete, erdos_renyi, path, ring
from .protocol_gossip import simulate_protocol_c, simulate_protocol_c_tv
from .protocol_node import (DelayModel, RobustParams, clock_rates, delay_feasible, quantized_feasible,
                            simulate_protocol_a, simulate_robust_delay, simulate_robust_quantized)
from .protocol_timevarying import TvParams, simulate_nonuniform, simulate_protocol_b
from .schedules import ScalarSchedule

H = ScalarSchedule.hyperbolic

RING_SEED = 7
EPS_HYP = H(0.05, 1)
GAMMA_HYP = H(0.25, 1)


def uniform_x0(n: int, seed: int, lo: float = -1.0, hi: float = 1.0) -> list[float]:
    return np.random.default_rng(seed).uniform(lo, hi, size=n).tolist()


def ring_sweep_run(eps: float, seed: int = RING_SEED, verify: bool = False):
    """Protocol A on ring(20) from a seeded state of spread about 2."""
    g = ring(20)
    return simulate_protocol_a(g, uniform_x0(20, seed), eps, verify=verify)


def vanishing_gain_run(seed: int = 1, horizon: float = 1e3, verify: bool = False):
    g = ring(5)
    params = TvParams(eps_sched=EPS_HYP, gamma_sched=GAMMA_HYP)
    return simulate_protocol_b(g, uniform_x0(5, seed), params, horizon=horizon, verify=verify)


def necessity_run(horizon: float = 1e3, sample_dt: float = 1.0, verify: bool = False):
    """Integrable gain (total 0.25) from (1.25, -1.25): the gap never closes below 2."""
    params = TvParams(eps_sched=EPS_HYP, gamma_sched=H(0.25, 2))
    return simulate_protocol_b(path(2), [1.25, -1.25], params, horizon=horizon,
                               sample_dt=sample_dt, verify=verify)


def delay_run(seed: int, eps=0.02, tau=0.001, alpha=0.3, R_lo=0.9, verify=True):
    g = ring(5)
    params = RobustParams(eps=eps, alpha=alpha, tau_max=tau, delay=DelayModel.constant(tau),
                          R_min=R_lo)
    R = {"kind": "uniform", "lo": R_lo, "hi": 1.0, "seed": seed}
    return simulate_robust_delay(g, uniform_x0(5, seed), params, R=R, verify=verify)


def quantized_run(seed: int, eps=0.02, delta=0.01, alpha=0.3, R_lo=0.9, verify=True):
    g = ring(5)
    params = RobustParams(eps=eps, alpha=alpha, delta=delta, R_min=R_lo)
    R = {"kind": "uniform", "lo": R_lo, "hi": 1.0, "seed": seed}
    return simulate_robust_quantized(g, uniform_x0(5, seed), params, R=R, verify=verify)


def ensemble_graph(k: int) -> Graph:
    """k-th graph of the randomized ensemble: n in [3, 20], varied families."""
    rng = np.random.default_rng(1000 + k)
    n = int(rng.integers(3, 21))
    kind = k % 4
    if kind == 0:
        return ring(n)
    if kind == 1:
        return path(n)
    if kind == 2:
        return complete(min(n, 8))
    return erdos_renyi(n, 0.35, seed=int(rng.integers(2**63)))


ENSEMBLE_PROTOCOLS = ("A", "A-delay", "A-quantized", "B", "B-nonuniform", "C", "C-tv")


def ensemble_run(g: Graph, protocol: str, seed: int, eps: float = 0.02,
                 tv_horizon: float = 5.0):
    """One run at default feasible parameters, with monitors on."""
    x0 = uniform_x0(g.n, seed)
    if protocol == "A":
        return simulate_protocol_a(g, x0, eps, verify=True)
    if protocol == "C":
        return simulate_protocol_c(g, x0, eps, verify=True)
    R = clock_rates({"kind": "uniform", "lo": 0.9, "hi": 1.0, "seed": seed}, g.n)
    if protocol == "A-delay":
        tau = eps / (8 * g.d_max)
        _, m = delay_feasible(eps, 1.0, g.d_max, tau, 0.9)
        params = RobustParams(eps=eps, alpha=0.8 * m["alpha_max"], tau_max=tau,
                              delay=DelayModel.uniform(tau, seed), R_min=0.9)
        return simulate_robust_delay(g, x0, params, R=R, verify=True)
    if protocol == "A-quantized":
        delta = eps / g.d_max
        _, m = quantized_feasible(eps, 1.0, g.d_max, delta, 0.9)
        params = RobustParams(eps=eps, alpha=0.8 * m["alpha_max"], delta=delta, R_min=0.9)
        return simulate_robust_quantized(g, x0, params, R=R, verify=True)
    if protocol == "B":
        params = TvParams(eps_sched=EPS_HYP, gamma_sched=GAMMA_HYP)
        return simulate_protocol_b(g, x0, params, horizon=tv_horizon, verify=True)
    if protocol == "B-nonuniform":
        gam = [H(a, 1) for a in np.random.default_rng(seed).uniform(0.2, 0.5, g.n).tolist()]
        return simulate_nonuniform(g, x0, [EPS_HYP] * g.n, gam, horizon=tv_horizon,
                                   verify=True)
    if protocol == "C-tv":
        return simulate_protocol_c_tv(g, x0, EPS_HYP, GAMMA_HYP, horizon=tv_horizon,
                                      verify=True)
    raise ValueError(f"unknown protocol {protocol!r}")


def ensemble(n_graphs: int = 20, n_seeds: int = 5, protocols=ENSEMBLE_PROTOCOLS):
    """Run every protocol on every (graph, seed); yields (k, seed, protocol, summary)."""
    for k in range(n_graphs):
        g = ensemble_graph(k)
        for seed in range(n_seeds):
            for p in protocols:
                _, s = ensemble_run(g, p, seed)
                yield k, seed, p, s
