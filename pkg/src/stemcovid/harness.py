"""Scenario batches, top-k success rates, growth curves and timing tables."""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .datasets import from_simulation
from .memory import space_bound
from .search import SearchConfig, baseline_search, split_traces, stem_search, timing_probe
from .sim import ScenarioConfig, run_simulation

DEFAULT_KS = (1, 3, 5, 15, 25)
TARGETS = ("ACC", "Index")
METHODS = ("stem", "baseline")


@dataclass
class RunResult:
    scenario: str
    seed: int
    counts: np.ndarray  # (T, 3) cumulative ACC, t-SCC, SCC
    rankings: dict[str, list[int]]  # agent ids, best first
    activations: dict[str, list[float]]
    timings: dict[str, float]
    acc_agents: frozenset[int]
    index_agents: frozenset[int]
    n_untested: int
    n_agents: int
    n_places: int
    T: int
    registry_size: int
    index_secondary: float
    n_infections: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n_acc_untested(self) -> int:
        return len(self.acc_agents)

    def hit(self, method: str, k: int, target: str) -> bool:
        truth = self.acc_agents if target == "ACC" else self.index_agents
        return any(a in truth for a in self.rankings[method][:k])


def run_once(cfg: ScenarioConfig, seed: int, methods: Sequence[str] = METHODS, search: SearchConfig | None = None):
    """Simulate, encode, then run and time each search method."""
    search = search or SearchConfig()
    out = run_simulation(cfg, seed)
    ds = from_simulation(out)
    memory = ds.memory()
    positives, untested = split_traces(ds.traces, ds.labels)
    rankings, activations, timings = {}, {}, {}
    for method in methods:
        if method == "stem":
            secs, ranked = timing_probe("stem", memory=memory, cfg=search)
        else:
            secs, ranked = timing_probe("baseline", positives=positives, untested=untested, T=ds.T, P=ds.P)
        rankings[method] = [c.agent_id for c in ranked]
        activations[method] = [c.activation for c in ranked]
        timings[method] = secs
    idx = out.index_agents.tolist()
    secondary = float(np.mean([out.secondary_infections(i) for i in idx])) if idx else 0.0
    return RunResult(
        scenario=cfg.name,
        seed=seed,
        counts=out.counts,
        rankings=rankings,
        activations=activations,
        timings=timings,
        acc_agents=frozenset(int(a) for a in out.acc_agents()),
        index_agents=frozenset(idx),
        n_untested=int(np.count_nonzero(ds.labels == 0)),
        n_agents=cfg.n_agents,
        n_places=cfg.n_places,
        T=cfg.T,
        registry_size=len(memory.registry),
        index_secondary=secondary,
        n_infections=len(out.infection_log),
    )


def run_seeds(cfg: ScenarioConfig, master_seed: int | None = None, runs: int | None = None) -> list[int]:
    master = cfg.seed if master_seed is None else master_seed
    return [master + i for i in range(cfg.runs if runs is None else runs)]


def run_scenario_batch(
    cfg: ScenarioConfig,
    master_seed: int | None = None,
    runs: int | None = None,
    methods: Sequence[str] = METHODS,
    search: SearchConfig | None = None,
    progress=None,
) -> list[RunResult]:
    results = []
    for seed in run_seeds(cfg, master_seed, runs):
        results.append(run_once(cfg, seed, methods, search))
        if progress:
            progress(results[-1])
    return results


def topk_success(results: Sequence[RunResult], k: int, target: str = "ACC", method: str = "stem") -> float:
    """Fraction of runs with at least one true target among the top ``k``."""
    if not results:
        raise ValueError("top-k success rate is undefined for an empty batch")
    if k < 1:
        raise ValueError("k must be >= 1")
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}")
    return sum(r.hit(method, k, target) for r in results) / len(results)


def random_topk_rate(result: RunResult, k: int) -> float:
    """Chance that ``k`` random untested picks include an ACC (with replacement)."""
    if result.n_untested == 0:
        return 0.0
    return 1.0 - (1.0 - result.n_acc_untested / result.n_untested) ** k


def success_table(
    results: Sequence[RunResult],
    ks: Iterable[int] = DEFAULT_KS,
    targets: Iterable[str] = TARGETS,
    methods: Iterable[str] | None = None,
) -> list[dict]:
    methods = list(methods) if methods is not None else list(results[0].rankings)
    rows = []
    for target in targets:
        for method in methods:
            for k in ks:
                rows.append(
                    {
                        "scenario": results[0].scenario,
                        "target": target,
                        "method": method,
                        "k": k,
                        "success_rate": topk_success(results, k, target, method),
                    }
                )
    return rows


def hit_rows(results: Sequence[RunResult], ks: Iterable[int] = DEFAULT_KS) -> list[dict]:
    rows = []
    for r in results:
        for method in r.rankings:
            for k in ks:
                for target in TARGETS:
                    rows.append(
                        {"scenario": r.scenario, "seed": r.seed, "method": method, "k": k, "target": target,
                         "hit": int(r.hit(method, k, target))}
                    )
    return rows


def growth_series(results: Sequence[RunResult]) -> np.ndarray:
    """Per-hour mean of cumulative (ACC, t-SCC, SCC) counts across runs."""
    if not results:
        raise ValueError("growth series needs at least one run")
    return np.mean([r.counts for r in results], axis=0)


def growth_rows(results: Sequence[RunResult]) -> list[dict]:
    g = growth_series(results)
    return [
        {"scenario": results[0].scenario, "hour": h, "acc_mean": a, "tscc_mean": t, "scc_mean": s}
        for h, (a, t, s) in enumerate(g.tolist())
    ]


def doubling_time(series: np.ndarray, start: float, end: float) -> int | None:
    """Hours between the series first reaching ``start`` and first reaching ``end``."""
    series = np.asarray(series)
    if not (series >= start).any() or not (series >= end).any():
        return None
    return int(np.argmax(series >= end) - np.argmax(series >= start))


@dataclass(frozen=True)
class TimingStats:
    min: float
    mean: float
    max: float


def timing_summary(results: Sequence[RunResult]) -> dict[tuple[str, str], TimingStats]:
    groups: dict[tuple[str, str], list[float]] = {}
    for r in results:
        for method, secs in r.timings.items():
            groups.setdefault((r.scenario, method), []).append(secs)
    return {key: TimingStats(min(v), float(np.mean(v)), max(v)) for key, v in groups.items()}


def timing_rows(summary: dict[tuple[str, str], TimingStats]) -> list[dict]:
    return [
        {"scenario": s, "method": m, **dataclasses.asdict(st)} for (s, m), st in sorted(summary.items())
    ]


def within_space_bound(r: RunResult) -> bool:
    return r.registry_size <= space_bound(r.T, r.n_agents, r.n_places)


def write_table(rows: Sequence[dict], path, fieldnames: Sequence[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fieldnames = list(fieldnames or (rows[0].keys() if rows else []))
    with path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return path


SUCCESS_FIELDS = ("scenario", "target", "method", "k", "success_rate")
HIT_FIELDS = ("scenario", "seed", "method", "k", "target", "hit")
GROWTH_FIELDS = ("scenario", "hour", "acc_mean", "tscc_mean", "scc_mean")
TIMING_FIELDS = ("scenario", "method", "min", "mean", "max")
