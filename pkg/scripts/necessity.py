"""Integrable gain gamma(t)=0.25/(1+t)^2 on one edge from (1.25, -1.25).

The total control budget is 0.25 per agent, so the states never cross +-1.
"""

from selftrig.experiments import necessity_run

trace, s = necessity_run(horizon=1e3, sample_dt=1.0, verify=True)
x1, x2 = trace.x[:, 0], trace.x[:, 1]
print(f"min x_1 = {float(x1.min())!r}, max x_2 = {float(x2.max())!r}, "
      f"min gap = {float((x1 - x2).min())!r}")
print(f"flags: {s.flags}; monitors: {'pass' if s.monitors['all_passed'] else 'FAIL'}")
