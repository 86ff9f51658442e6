"""Protocol A on ring(20) at two sensitivities: precision versus cost.

Writes sweep.csv and one trace per eps under --out.
"""

import argparse
import os
from pathlib import Path

from selftrig.cli import write_trace_csv
from selftrig.experiments import RING_SEED, ring_sweep_run
from selftrig.graph import ring

ap = argparse.ArgumentParser()
ap.add_argument("--out", default=os.environ.get("SELFTRIG_OUT", "out") + "/precision_vs_cost")
ap.add_argument("--seeds", type=int, nargs="+", default=[RING_SEED])
ap.add_argument("--eps", type=float, nargs="+", default=[0.01, 0.001])
args = ap.parse_args()

out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)
rows = []
for eps in sorted(args.eps):
    for seed in args.seeds:
        trace, s = ring_sweep_run(eps, seed)
        write_trace_csv(out / f"trace_eps{eps}_seed{seed}.csv", trace, ring(20), "A")
        r = s.bound_report
        rows.append((eps, seed, s.T_enter, s.T_freeze, s.C, s.total_messages, s.W_final,
                     r["T_bound"], r["C_bound"]))
        print(f"eps={eps} seed={seed}: T={s.T_enter:.4f} (bound {r['T_bound']:.3g}) "
              f"C={s.C} (bound {r['C_bound']:.3g}) final spread={s.W_final:.3g}")
with open(out / "sweep.csv", "w") as fh:
    fh.write("eps,seed,T_enter,T_freeze,C,messages,W_final,T_bound,C_bound\n")
    for row in rows:
        fh.write(",".join(repr(v) for v in row) + "\n")
