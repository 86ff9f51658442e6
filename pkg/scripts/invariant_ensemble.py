"""Monitor suite over 20 graphs x 5 seeds x every protocol."""

import collections
import time

from selftrig.experiments import ensemble

t0 = time.perf_counter()
fails = collections.Counter()
runs = collections.Counter()
for k, seed, p, s in ensemble():
    runs[p] += 1
    for name, r in s.monitors.items():
        if name != "all_passed" and not r["passed"]:
            fails[(p, name)] += 1
            print(f"graph {k} seed {seed} {p}: {name} failed at t={r['first_violation']}")
for p, n in runs.items():
    print(f"{p:13s} {n} runs, {sum(v for (q, _), v in fails.items() if q == p)} violations")
print(f"{time.perf_counter() - t0:.1f}s")
