"""Asymptomatic-case search over a collective episodic memory.

The STEM route pools the episode weights of every tested-positive
individual into one evidence vector and scores each untested individual
with the choice function of the top network.  The baseline route counts,
trace by trace, how many of an untested agent's events appear among the
merged events of the positives.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fusion_art import DEFAULT_ALPHA, ContractError
from .memory import CollectiveMemory, EpisodicTrace

METHODS = ("stem", "baseline")
POOLINGS = ("fuzzy_or", "weighted")
SELECTIONS = ("topk", "threshold")


@dataclass(frozen=True)
class SearchConfig:
    delta_c: float = 0.0
    k: int = 5
    method: str = "stem"
    pooling: str = "fuzzy_or"
    selection: str = "topk"
    alpha: float = DEFAULT_ALPHA
    gamma_e: float = 1.0
    gamma_c: float = 1.0

    def __post_init__(self):
        if self.delta_c < 0:
            raise ValueError("delta_c must be >= 0")
        if self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        for g in (self.gamma_e, self.gamma_c):
            if not 0.0 <= g <= 1.0:
                raise ValueError("contribution parameters must lie in [0, 1]")


@dataclass(frozen=True)
class RankedCandidate:
    agent_id: int
    activation: float
    rank: int


def f3_activation(
    memory: CollectiveMemory,
    episode: np.ndarray,
    positivity: float,
    gamma_e: float,
    gamma_c: float,
    alpha: float = DEFAULT_ALPHA,
) -> np.ndarray:
    """Choice activation of every individual node, in node order.

    Episode weights are binary, so ``|E ^ w_e|`` is the sum of ``E`` over
    the node's event indices.  One value per node, no search.
    """
    episode = np.asarray(episode, dtype=float)
    if episode.shape != (len(memory.registry),):
        raise ContractError(
            f"dimension mismatch on episode channel: input {episode.shape[0]} vs field {len(memory.registry)}"
        )
    rows, indices, lengths = memory.csr()
    n = len(memory)
    act = np.zeros(n)
    if gamma_e:
        overlap = np.bincount(rows, weights=episode[indices], minlength=n)
        act += gamma_e * overlap / (alpha + lengths)
    if gamma_c:
        w_c = memory.labels.astype(float)
        act += gamma_c * np.minimum(positivity, w_c) / (alpha + w_c)
    return act


def pool_evidence(memory: CollectiveMemory, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Fuzzy OR of the episode weights of every node activated by c = (1)."""
    act = f3_activation(memory, np.zeros(len(memory.registry)), 1.0, gamma_e=0.0, gamma_c=1.0, alpha=alpha)
    E = np.zeros(len(memory.registry), dtype=np.uint8)
    for j in np.flatnonzero((act > 0) & (act <= 1)):
        E[memory.individuals[j].events] = 1
    return E


def pool_evidence_weighted(memory: CollectiveMemory) -> np.ndarray:
    """Fraction of positives that experienced each event."""
    E = np.zeros(len(memory.registry))
    positives = [n for n in memory.individuals if n.cp == 1]
    for n in positives:
        E[n.events] += 1.0
    if positives:
        E /= len(positives)
    return E


def rank_untested(
    memory: CollectiveMemory, evidence: np.ndarray, cfg: SearchConfig = SearchConfig()
) -> list[RankedCandidate]:
    act = f3_activation(memory, evidence, 0.0, cfg.gamma_e, cfg.gamma_c, cfg.alpha)
    untested = np.flatnonzero(memory.labels == 0)
    return _ranked(memory.agent_ids[untested], act[untested])


def _ranked(agent_ids: np.ndarray, scores: np.ndarray) -> list[RankedCandidate]:
    order = np.lexsort((agent_ids, -scores))
    return [
        RankedCandidate(int(agent_ids[i]), float(scores[i]), r) for r, i in enumerate(order.tolist(), start=1)
    ]


def select_candidates(ranked: Sequence[RankedCandidate], cfg: SearchConfig = SearchConfig()) -> list[int]:
    if cfg.selection == "threshold":
        return [c.agent_id for c in ranked if c.activation > cfg.delta_c]
    return [c.agent_id for c in ranked[: cfg.k]]


def stem_search(memory: CollectiveMemory, cfg: SearchConfig = SearchConfig()) -> list[RankedCandidate]:
    if cfg.pooling == "weighted":
        evidence = pool_evidence_weighted(memory)
    else:
        evidence = pool_evidence(memory, cfg.alpha)
    return rank_untested(memory, evidence, cfg)


def _event_keys(trace: EpisodicTrace, P: int, dtype) -> np.ndarray:
    return (trace.times * P + trace.places).astype(dtype)


def baseline_similarities(
    positives: Sequence[EpisodicTrace], untested: Sequence[EpisodicTrace], T: int, P: int
) -> list[tuple[int, float]]:
    """Brute-force trace similarity ``s_i = c_i / T``.

    Each event of each untested trace is compared against every merged
    positive event; the scan over the merged events is vectorized but
    still linear in their number.
    """
    dtype = np.int32 if T * P < 2**31 else np.int64
    if positives:
        merged = np.unique(np.concatenate([_event_keys(tr, P, dtype) for tr in positives]))
    else:
        merged = np.zeros(0, dtype=dtype)
    out = []
    chunk = 8192
    for tr in untested:
        keys = _event_keys(tr, P, dtype)
        c = 0
        for lo in range(0, len(merged), chunk):
            hit = (keys[:, None] == merged[None, lo : lo + chunk]).any(axis=1)
            c += int(hit.sum())
            # a matched event stops scanning, like the inner loop's break
            keys = keys[~hit]
            if len(keys) == 0:
                break
        out.append((tr.agent_id, c / T))
    return out


def baseline_search(
    positives: Sequence[EpisodicTrace], untested: Sequence[EpisodicTrace], T: int, P: int
) -> list[RankedCandidate]:
    sims = baseline_similarities(positives, untested, T, P)
    if not sims:
        return []
    ids, scores = zip(*sims)
    return _ranked(np.array(ids, dtype=np.int64), np.array(scores))


def split_traces(traces: Sequence[EpisodicTrace], labels) -> tuple[list[EpisodicTrace], list[EpisodicTrace]]:
    positives = [tr for tr, cp in zip(traces, labels) if cp == 1]
    untested = [tr for tr, cp in zip(traces, labels) if cp == 0]
    return positives, untested


def timing_probe(method: str, memory=None, positives=None, untested=None, T=None, P=None, cfg=SearchConfig()):
    """Wall-clock seconds of the similarity computation alone.

    Returns ``(seconds, ranking)``.  Inputs must be prepared by the caller so
    that only pooling and scoring (stem) or the brute-force loop (baseline)
    fall inside the timed region.
    """
    if method == "stem":
        if memory is None:
            raise ValueError("stem timing needs a built memory")
        t0 = time.perf_counter()
        ranked = stem_search(memory, cfg)
        return time.perf_counter() - t0, ranked
    if method == "baseline":
        if positives is None or untested is None or T is None or P is None:
            raise ValueError("baseline timing needs positive and untested traces plus T and P")
        t0 = time.perf_counter()
        ranked = baseline_search(positives, untested, T, P)
        return time.perf_counter() - t0, ranked
    raise ValueError(f"unknown method {method!r}")
