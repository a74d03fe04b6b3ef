"""Reading and writing simulation datasets.

A dataset directory holds five files::

    traces.csv         agent_id,t,place_id
    labels.csv         agent_id,cp
    ground_truth.csv   agent_id,status,destiny,infection_hour
    infection_log.csv  hour,place_id,source_id,target_id
    manifest.json      scenario config, seed, format version
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .memory import CollectiveMemory, EpisodicTrace, build_memory
from .sim import DESTINY_NAMES, ScenarioConfig, SimulationOutput, Status

FORMAT_VERSION = 1
TRACES = "traces.csv"
LABELS = "labels.csv"
GROUND_TRUTH = "ground_truth.csv"
INFECTION_LOG = "infection_log.csv"
MANIFEST = "manifest.json"

HEADERS = {
    TRACES: "agent_id,t,place_id",
    LABELS: "agent_id,cp",
    GROUND_TRUTH: "agent_id,status,destiny,infection_hour",
    INFECTION_LOG: "hour,place_id,source_id,target_id",
}


class DataError(ValueError):
    """Malformed or inconsistent dataset content."""


@dataclass
class Dataset:
    cfg: ScenarioConfig
    seed: int
    traces: list[EpisodicTrace]
    labels: np.ndarray
    status: list[str] | None = None
    destiny: list[str] | None = None
    infection_hour: np.ndarray | None = None
    infection_log: np.ndarray = field(default_factory=lambda: np.zeros((0, 4), dtype=np.int64))

    @property
    def T(self) -> int:
        return self.cfg.T

    @property
    def P(self) -> int:
        return self.cfg.n_places

    @property
    def has_ground_truth(self) -> bool:
        return self.status is not None

    def acc_agents(self) -> set[int]:
        return {tr.agent_id for tr, s in zip(self.traces, self.status or []) if s in (Status.ACC, Status.INDEX)}

    def index_agents(self) -> set[int]:
        return {tr.agent_id for tr, s in zip(self.traces, self.status or []) if s == Status.INDEX}

    def memory(self) -> CollectiveMemory:
        return build_memory(list(zip(self.traces, self.labels.tolist())), self.T, self.P)


def from_simulation(out: SimulationOutput) -> Dataset:
    traces = [
        EpisodicTrace(i, np.arange(n, dtype=np.int64), out.trace_places[i, :n])
        for i, n in enumerate(out.trace_lengths.tolist())
    ]
    return Dataset(
        cfg=out.cfg,
        seed=out.seed,
        traces=traces,
        labels=out.labels.astype(np.int64),
        status=list(out.status),
        destiny=[DESTINY_NAMES[int(d)] for d in out.destiny],
        infection_hour=out.infection_hour.copy(),
        infection_log=out.infection_log.copy(),
    )


def manifest(cfg: ScenarioConfig, seed: int, **extra) -> dict:
    return {"format_version": FORMAT_VERSION, "stemcovid_version": __version__, "seed": seed, "config": cfg.to_dict(), **extra}


def write_dataset(ds: Dataset, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [HEADERS[TRACES]]
    for tr in ds.traces:
        aid = tr.agent_id
        lines.extend(f"{aid},{t},{p}" for t, p in zip(tr.times.tolist(), tr.places.tolist()))
    (out / TRACES).write_text("\n".join(lines) + "\n")

    lines = [HEADERS[LABELS]] + [f"{tr.agent_id},{int(cp)}" for tr, cp in zip(ds.traces, ds.labels)]
    (out / LABELS).write_text("\n".join(lines) + "\n")

    if ds.has_ground_truth:
        lines = [HEADERS[GROUND_TRUTH]] + [
            f"{tr.agent_id},{s},{d},{int(h)}"
            for tr, s, d, h in zip(ds.traces, ds.status, ds.destiny, ds.infection_hour)
        ]
        (out / GROUND_TRUTH).write_text("\n".join(lines) + "\n")

    lines = [HEADERS[INFECTION_LOG]] + [",".join(map(str, row)) for row in ds.infection_log.tolist()]
    (out / INFECTION_LOG).write_text("\n".join(lines) + "\n")

    (out / MANIFEST).write_text(json.dumps(manifest(ds.cfg, ds.seed), indent=2, sort_keys=True) + "\n")
    return out


def _rows(path: Path, n_fields: int):
    """Yield (line number, fields) for every data row of a headed CSV file."""
    try:
        text = path.read_text()
    except OSError as e:
        raise DataError(f"{path}: cannot read ({e.strerror or e})") from e
    lines = text.splitlines()
    expected = HEADERS[path.name]
    if not lines or lines[0].strip() != expected:
        raise DataError(f"{path}:1: expected header '{expected}'")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != n_fields:
            raise DataError(f"{path}:{lineno}: expected {n_fields} fields, found {len(fields)}")
        yield lineno, fields


def _int(path, lineno, value) -> int:
    try:
        return int(value)
    except ValueError:
        raise DataError(f"{path}:{lineno}: not an integer: {value!r}") from None


def read_manifest(path) -> dict:
    path = Path(path)
    try:
        m = json.loads(path.read_text())
    except OSError as e:
        raise DataError(f"{path}: cannot read ({e.strerror or e})") from e
    except json.JSONDecodeError as e:
        raise DataError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from e
    if m.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {m.get('format_version')!r}")
    return m


def read_dataset(ds_dir) -> Dataset:
    d = Path(ds_dir)
    m = read_manifest(d / MANIFEST)
    try:
        cfg = ScenarioConfig.from_dict(m["config"])
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{d / MANIFEST}: bad config ({e})") from e
    T, P = cfg.T, cfg.n_places

    path = d / LABELS
    labels: dict[int, int] = {}
    for ln, (a, cp) in _rows(path, 2):
        aid, c = _int(path, ln, a), _int(path, ln, cp)
        if c not in (0, 1):
            raise DataError(f"{path}:{ln}: positivity label must be 0 or 1")
        if aid in labels:
            raise DataError(f"{path}:{ln}: duplicate agent {aid}")
        labels[aid] = c

    path = d / TRACES
    events: dict[int, tuple[list[int], list[int]]] = {a: ([], []) for a in labels}
    for ln, (a, t, p) in _rows(path, 3):
        aid, tt, pp = _int(path, ln, a), _int(path, ln, t), _int(path, ln, p)
        if aid not in events:
            raise DataError(f"{path}:{ln}: agent {aid} has no label")
        if not 0 <= tt < T or not 0 <= pp < P:
            raise DataError(f"{path}:{ln}: event ({tt}, {pp}) outside T={T}, P={P}")
        ts, ps = events[aid]
        if ts and tt <= ts[-1]:
            raise DataError(f"{path}:{ln}: times for agent {aid} must be strictly increasing")
        ts.append(tt)
        ps.append(pp)
    agents = sorted(labels)
    traces = [EpisodicTrace(a, np.array(events[a][0], np.int64), np.array(events[a][1], np.int64)) for a in agents]

    status = destiny = hours = None
    path = d / GROUND_TRUTH
    if path.exists():
        gt = {}
        for ln, (a, s, de, h) in _rows(path, 4):
            gt[_int(path, ln, a)] = (s, de, _int(path, ln, h))
        missing = set(agents) - set(gt)
        if missing:
            raise DataError(f"{path}: no ground truth for agents {sorted(missing)[:5]}")
        status = [gt[a][0] for a in agents]
        destiny = [gt[a][1] for a in agents]
        hours = np.array([gt[a][2] for a in agents], dtype=np.int64)

    path = d / INFECTION_LOG
    log = np.zeros((0, 4), dtype=np.int64)
    if path.exists():
        rows = [[_int(path, ln, v) for v in f] for ln, f in _rows(path, 4)]
        if rows:
            log = np.array(rows, dtype=np.int64)

    return Dataset(
        cfg=cfg,
        seed=int(m.get("seed", cfg.seed)),
        traces=traces,
        labels=np.array([labels[a] for a in agents], dtype=np.int64),
        status=status,
        destiny=destiny,
        infection_hour=hours,
        infection_log=log,
    )
