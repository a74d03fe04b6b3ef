"""A scenario batch: top-k success rates, growth and timing.

Pass a smaller run count for a quicker look; with few runs the mean SCC
curve may never reach 40 and the doubling time prints as None.

Run: python demos/05_experiment.py [runs]
"""
import sys

import numpy as np

from stemcovid.harness import (
    doubling_time,
    growth_series,
    random_topk_rate,
    run_scenario_batch,
    timing_summary,
    topk_success,
)
from stemcovid.sim import SCENARIOS

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 15
results = run_scenario_batch(SCENARIOS["S200N"], master_seed=0, runs=runs)

print(f"S200N, {runs} runs")
print("k    ACC   Index")
for k in (1, 3, 5, 15, 25):
    print(f"{k:<4} {topk_success(results, k, 'ACC'):.2f}  {topk_success(results, k, 'Index'):.2f}")
print(f"random guess at k=3: {np.mean([random_topk_rate(r, 3) for r in results]):.2f}")

scc = growth_series(results)[:, 2]
print(f"mean SCC at T: {scc[-1]:.1f}; 20 -> 40 takes {doubling_time(scc, 20, 40)} h")

for (scenario, method), st in sorted(timing_summary(results).items()):
    print(f"{method:<9} mean {st.mean * 1000:.1f} ms (min {st.min * 1000:.1f}, max {st.max * 1000:.1f})")
