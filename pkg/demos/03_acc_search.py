"""Ranking untested agents against the pooled evidence of the positives.

Both the network route and the brute-force trace comparison are shown on
the same memory; for equal-length untested traces they agree.

Run: python demos/03_acc_search.py
"""
from stemcovid.memory import EpisodicTrace, build_memory
from stemcovid.search import SearchConfig, baseline_search, pool_evidence, select_candidates, split_traces, stem_search

T, P = 8, 5
rows = {
    0: ([0, 0, 0, 1, 1, 2, 2, 0], 1),  # tested positive
    1: ([0, 0, 0, 3, 3, 3, 4, 0], 0),  # household contact of agent 0
    2: ([4, 4, 4, 1, 1, 2, 2, 4], 0),  # met agent 0 at places 1 and 2
    3: ([4, 4, 4, 3, 3, 3, 3, 4], 0),  # no contact
}
data = [(EpisodicTrace(a, list(range(T)), places), cp) for a, (places, cp) in rows.items()]
memory = build_memory(data, T, P)

E = pool_evidence(memory)
print(f"evidence covers {int(E.sum())} of {len(E)} event nodes")

ranked = stem_search(memory)
for c in ranked:
    print(f"  rank {c.rank}: agent {c.agent_id} activation {c.activation:.4f}")
print("top-2:", select_candidates(ranked, SearchConfig(k=2)))

positives, untested = split_traces([t for t, _ in data], [cp for _, cp in data])
base = baseline_search(positives, untested, T, P)
print("baseline order:", [c.agent_id for c in base], "similarities:", [round(c.activation, 3) for c in base])
