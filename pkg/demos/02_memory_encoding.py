"""Encoding a handful of hourly traces into a collective episodic memory.

Shared (time, place) events collapse onto one node, so the registry stays
far below one node per agent-hour.

Run: python demos/02_memory_encoding.py
"""
from stemcovid.memory import EpisodicTrace, build_memory, snapshot_text, space_bound

T, P = 6, 4
traces = [
    # agent 0 and agent 1 share a household (place 0) for the first three hours
    (EpisodicTrace.from_events(0, [(0, 0), (1, 0), (2, 0), (3, 2), (4, 2), (5, 3)]), 1),
    (EpisodicTrace.from_events(1, [(0, 0), (1, 0), (2, 0), (3, 1), (4, 1), (5, 1)]), 0),
    (EpisodicTrace.from_events(2, [(0, 1), (1, 1), (2, 1), (3, 2), (4, 2), (5, 2)]), 0),
]
memory = build_memory(traces, T, P)

print(f"{len(memory)} individuals, {len(memory.registry)} event nodes "
      f"(bound T*min(N,P) = {space_bound(T, len(memory), P)})")
for node in memory.individuals:
    events = sorted(memory.events_of(node.agent_id))
    print(f"agent {node.agent_id} cp={node.cp} |w_e|={len(node.events)} events={events}")

print("\nsnapshot:\n" + snapshot_text(memory))
