"""Skewed clocks with delays, and with quantized measurements, on ring(5) over many seeds."""

import argparse

from selftrig.analysis import in_E, in_E2
from selftrig.experiments import delay_run, quantized_run
from selftrig.graph import ring

ap = argparse.ArgumentParser()
ap.add_argument("--seeds", type=int, default=20)
args = ap.parse_args()

g = ring(5)
for name, fn, member in (("delay", delay_run, in_E), ("quantized", quantized_run, in_E2)):
    ok = 0
    worst_T = 0.0
    for seed in range(args.seeds):
        _, s = fn(seed)
        good = s.converged and member(s.final_x, g, 0.02) and s.monitors["all_passed"]
        ok += good
        worst_T = max(worst_T, s.T_enter or 0.0)
    print(f"{name}: {ok}/{args.seeds} converged with all monitors passing, "
          f"largest T_enter {worst_T:.4f}")
