"""Collective spatio-temporal episodic memory.

Two stacked fusion ART networks.  The bottom one maps (time, place) inputs
to event nodes in the episode field, one node per distinct event across the
whole population.  The top one recruits one node per individual whose
episode weights mark the events that individual experienced and whose
positivity weight stores the test label.

Episode weights are binary, so each individual stores only the indices of
its event nodes; the dense vector is that index set zero-padded to the
current registry length.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .fusion_art import CategoryNode

SNAPSHOT_MAGIC = "stemcovid-memory"
SNAPSHOT_VERSION = 1


class Event(NamedTuple):
    time_step: int
    place_id: int


@dataclass
class EpisodicTrace:
    """Hourly (time, place) events of one agent, time strictly increasing."""

    agent_id: int
    times: np.ndarray
    places: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64).reshape(-1)
        self.places = np.asarray(self.places, dtype=np.int64).reshape(-1)
        if self.times.shape != self.places.shape:
            raise ValueError(f"agent {self.agent_id}: {len(self.times)} times but {len(self.places)} places")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError(f"agent {self.agent_id}: event times must be strictly increasing")

    @classmethod
    def from_events(cls, agent_id: int, events: Iterable[tuple[int, int]]) -> "EpisodicTrace":
        events = list(events)
        if not events:
            return cls(agent_id, np.zeros(0, np.int64), np.zeros(0, np.int64))
        t, p = zip(*events)
        return cls(agent_id, np.array(t), np.array(p))

    @property
    def events(self) -> list[Event]:
        return [Event(t, p) for t, p in zip(self.times.tolist(), self.places.tolist())]

    def __len__(self) -> int:
        return len(self.times)

    def check_bounds(self, T: int, P: int) -> None:
        if len(self) > T:
            raise ValueError(f"agent {self.agent_id}: trace of {len(self)} events exceeds T={T}")
        if len(self) and (self.times.min() < 0 or self.times.max() >= T):
            raise ValueError(f"agent {self.agent_id}: time step outside [0, {T})")
        if len(self) and (self.places.min() < 0 or self.places.max() >= P):
            raise ValueError(f"agent {self.agent_id}: place id outside [0, {P})")


class EventNodeRegistry:
    """Episode field of the bottom network.

    Each node stores the raw (t, p) pair plus the normalized template
    (t/T, p/P).  Matching an input against the field is an exact lookup on
    the raw pair, which gives the same answer as a perfect-vigilance match
    over the normalized templates without scanning every node.
    """

    def __init__(self, T: int, P: int):
        if T < 1 or P < 1:
            raise ValueError(f"T and P must be positive, got T={T}, P={P}")
        self.T = T
        self.P = P
        self._times: list[int] = []
        self._places: list[int] = []
        self._index: dict[tuple[int, int], int] = {}

    def __len__(self) -> int:
        return len(self._times)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventNodeRegistry):
            return NotImplemented
        return (self.T, self.P, self._times, self._places) == (other.T, other.P, other._times, other._places)

    def lookup(self, t: int, p: int) -> int | None:
        return self._index.get((t, p))

    def encode(self, t: int, p: int) -> int:
        if not 0 <= t < self.T:
            raise ValueError(f"time step {t} outside [0, {self.T})")
        if not 0 <= p < self.P:
            raise ValueError(f"place id {p} outside [0, {self.P})")
        j = self._index.get((t, p))
        if j is None:
            j = len(self._times)
            self._times.append(t)
            self._places.append(p)
            self._index[(t, p)] = j
        return j

    @property
    def raw(self) -> np.ndarray:
        """(n, 2) array of (t, p) in node order."""
        return np.column_stack([self._times, self._places]).astype(np.int64).reshape(-1, 2)

    @property
    def weights(self) -> np.ndarray:
        """(n, 2) normalized templates (t/T, p/P)."""
        return self.raw / np.array([self.T, self.P], dtype=float)

    def event(self, j: int) -> Event:
        return Event(self._times[j], self._places[j])

    def node(self, j: int) -> CategoryNode:
        return CategoryNode([np.array([self._times[j] / self.T]), np.array([self._places[j] / self.P])], committed=True)


def encode_event(t: int, p: int, registry: EventNodeRegistry) -> int:
    return registry.encode(t, p)


def episode_vector(trace: EpisodicTrace, registry: EventNodeRegistry) -> np.ndarray:
    """Binary vector over the registry marking the trace's events.

    Events not yet in the registry are encoded on the fly.
    """
    idx = [registry.encode(t, p) for t, p in zip(trace.times.tolist(), trace.places.tolist())]
    E = np.zeros(len(registry), dtype=np.uint8)
    E[idx] = 1
    return E


@dataclass
class IndividualNode:
    agent_id: int
    events: np.ndarray  # sorted registry indices where w_e == 1
    cp: int

    def w_e(self, size: int) -> np.ndarray:
        v = np.zeros(size, dtype=np.uint8)
        v[self.events] = 1
        return v

    @property
    def w_c(self) -> np.ndarray:
        return np.array([float(self.cp)])

    def node(self, size: int) -> CategoryNode:
        return CategoryNode([self.w_e(size).astype(float), self.w_c], committed=True)


@dataclass
class CollectiveMemory:
    registry: EventNodeRegistry
    individuals: list[IndividualNode] = field(default_factory=list)
    _by_agent: dict[int, int] = field(default_factory=dict, repr=False)
    _csr: tuple | None = field(default=None, repr=False)

    @property
    def T(self) -> int:
        return self.registry.T

    @property
    def P(self) -> int:
        return self.registry.P

    def __len__(self) -> int:
        return len(self.individuals)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CollectiveMemory):
            return NotImplemented
        if self.registry != other.registry or len(self) != len(other):
            return False
        return all(
            a.agent_id == b.agent_id and a.cp == b.cp and np.array_equal(a.events, b.events)
            for a, b in zip(self.individuals, other.individuals)
        )

    def individual(self, agent_id: int) -> IndividualNode:
        return self.individuals[self._by_agent[agent_id]]

    def __contains__(self, agent_id: int) -> bool:
        return agent_id in self._by_agent

    def encode_individual(self, trace: EpisodicTrace, cp: int) -> IndividualNode:
        if trace.agent_id in self._by_agent:
            raise ValueError(f"agent {trace.agent_id} is already encoded")
        if cp not in (0, 1):
            raise ValueError(f"positivity label must be 0 or 1, got {cp}")
        trace.check_bounds(self.T, self.P)
        encode = self.registry.encode
        js = {encode(t, p) for t, p in zip(trace.times.tolist(), trace.places.tolist())}
        node = IndividualNode(trace.agent_id, np.array(sorted(js), dtype=np.int64), int(cp))
        self._by_agent[trace.agent_id] = len(self.individuals)
        self.individuals.append(node)
        self._csr = None
        return node

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(row ids, event indices, |w_e| per individual) for vectorized activation."""
        if self._csr is None:
            lengths = np.array([len(n.events) for n in self.individuals], dtype=np.int64)
            indices = (
                np.concatenate([n.events for n in self.individuals]) if self.individuals else np.zeros(0, np.int64)
            )
            rows = np.repeat(np.arange(len(self.individuals)), lengths)
            self._csr = (rows, indices, lengths)
        return self._csr

    @property
    def labels(self) -> np.ndarray:
        return np.array([n.cp for n in self.individuals], dtype=np.int8)

    @property
    def agent_ids(self) -> np.ndarray:
        return np.array([n.agent_id for n in self.individuals], dtype=np.int64)

    def events_of(self, agent_id: int) -> set[tuple[int, int]]:
        raw = self.registry.raw
        return {(int(t), int(p)) for t, p in raw[self.individual(agent_id).events]}

    def content(self) -> set[tuple[int, frozenset, int]]:
        """Index-free view of what the memory holds."""
        return {(n.agent_id, frozenset(self.events_of(n.agent_id)), n.cp) for n in self.individuals}


def encode_individual(trace: EpisodicTrace, cp: int, memory: CollectiveMemory) -> IndividualNode:
    return memory.encode_individual(trace, cp)


def build_memory(dataset: Sequence[tuple[EpisodicTrace, int]], T: int, P: int) -> CollectiveMemory:
    """Encode every (trace, label) pair in order."""
    memory = CollectiveMemory(EventNodeRegistry(T, P))
    for trace, cp in dataset:
        memory.encode_individual(trace, int(cp))
    return memory


def space_bound(T: int, N: int, P: int) -> int:
    return T * min(N, P)


def save_snapshot(memory: CollectiveMemory, path) -> None:
    Path(path).write_text(snapshot_text(memory))


def snapshot_text(memory: CollectiveMemory) -> str:
    lines = [
        f"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}",
        f"T {memory.T}",
        f"P {memory.P}",
        f"registry {len(memory.registry)}",
    ]
    lines += [f"{t} {p}" for t, p in memory.registry.raw.tolist()]
    lines.append(f"individuals {len(memory)}")
    for n in memory.individuals:
        lines.append(" ".join(map(str, [n.agent_id, n.cp, len(n.events), *n.events.tolist()])))
    return "\n".join(lines) + "\n"


class SnapshotError(ValueError):
    pass


def _expect(lines, i, key):
    try:
        head, value = lines[i].split()
        value = int(value)
    except (IndexError, ValueError):
        raise SnapshotError(f"line {i + 1}: expected '{key} <int>'") from None
    if head != key:
        raise SnapshotError(f"line {i + 1}: expected '{key}', found '{head}'")
    return value


def parse_snapshot(text: str) -> CollectiveMemory:
    lines = text.splitlines()
    if not lines or lines[0].split()[:1] != [SNAPSHOT_MAGIC]:
        raise SnapshotError("line 1: not a memory snapshot")
    try:
        version = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise SnapshotError("line 1: missing snapshot version") from None
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    T = _expect(lines, 1, "T")
    P = _expect(lines, 2, "P")
    n_nodes = _expect(lines, 3, "registry")
    memory = CollectiveMemory(EventNodeRegistry(T, P))
    i = 4
    for _ in range(n_nodes):
        try:
            t, p = map(int, lines[i].split())
        except (IndexError, ValueError):
            raise SnapshotError(f"line {i + 1}: malformed registry entry") from None
        try:
            fresh = memory.registry.lookup(t, p) is None and memory.registry.encode(t, p) >= 0
        except ValueError as e:
            raise SnapshotError(f"line {i + 1}: {e}") from None
        if not fresh:
            raise SnapshotError(f"line {i + 1}: duplicate event ({t}, {p})")
        i += 1
    n_ind = _expect(lines, i, "individuals")
    i += 1
    for _ in range(n_ind):
        try:
            fields = list(map(int, lines[i].split()))
            agent_id, cp, count, idx = fields[0], fields[1], fields[2], fields[3:]
        except (IndexError, ValueError):
            raise SnapshotError(f"line {i + 1}: malformed individual record") from None
        if cp not in (0, 1):
            raise SnapshotError(f"line {i + 1}: positivity label must be 0 or 1")
        if len(idx) != count or (idx and (min(idx) < 0 or max(idx) >= n_nodes)):
            raise SnapshotError(f"line {i + 1}: bad event index list")
        if agent_id in memory:
            raise SnapshotError(f"line {i + 1}: duplicate agent {agent_id}")
        memory._by_agent[agent_id] = len(memory.individuals)
        memory.individuals.append(IndividualNode(agent_id, np.array(idx, dtype=np.int64), cp))
        i += 1
    return memory


def load_snapshot(path) -> CollectiveMemory:
    return parse_snapshot(Path(path).read_text())
