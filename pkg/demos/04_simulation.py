"""One run of the epidemic simulator and what it exports.

Run: python demos/04_simulation.py [seed]
"""
import sys
from collections import Counter

from stemcovid.sim import SCENARIOS, run_simulation

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
out = run_simulation(SCENARIOS["S200N"], seed)

acc, tscc, scc = out.counts[-1]
print(f"S200N seed {seed}: {len(out.infection_log)} infections")
print(f"cumulative at T: ACC {acc}, tested SCC {tscc}, SCC {scc}")
print("status counts:", dict(Counter(out.status)))

idx = int(out.index_agents[0])
print(f"index agent {idx} infected {out.secondary_infections(idx)} others")

for hour in (0, 120, 240, 360, 479):
    print(f"  hour {hour:3d}: ACC {out.counts[hour, 0]:3d}  t-SCC {out.counts[hour, 1]:3d}  SCC {out.counts[hour, 2]:3d}")

isolated = [i for i, cp in enumerate(out.labels) if cp]
if isolated:
    i = isolated[0]
    print(f"agent {i} isolated at hour {out.trace_lengths[i]}; trace holds {len(out.trace(i))} events")
