"""Command-line entry point.

Subcommands: simulate, encode, search, experiment, bench.  Exit codes are
0 on success, 1 on usage errors, 2 on data errors and 3 when an internal
invariant is violated.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import DataError, Dataset, from_simulation, manifest, read_dataset, read_manifest, write_dataset
from .fusion_art import ContractError
from .harness import (
    DEFAULT_KS,
    GROWTH_FIELDS,
    HIT_FIELDS,
    SUCCESS_FIELDS,
    TIMING_FIELDS,
    growth_rows,
    hit_rows,
    run_scenario_batch,
    success_table,
    timing_rows,
    timing_summary,
    write_table,
)
from .memory import CollectiveMemory, EpisodicTrace, SnapshotError, load_snapshot, save_snapshot, space_bound
from .search import SearchConfig, baseline_search, select_candidates, split_traces, stem_search
from .sim import SCENARIOS, ScenarioConfig, run_simulation

log = logging.getLogger("stemcovid")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_manifest(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _resolve_config(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        m = json.loads(Path(args.config).read_text())
        cfg = ScenarioConfig.from_dict(m.get("config", m))
    else:
        if args.scenario not in SCENARIOS:
            raise UsageError(f"unknown scenario {args.scenario!r}; choose from {', '.join(SCENARIOS)}")
        cfg = SCENARIOS[args.scenario]
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "runs", None) is not None:
        overrides["runs"] = args.runs
    if getattr(args, "acc_fraction", None) is not None:
        overrides["acc_fraction"] = args.acc_fraction
    return ScenarioConfig.from_dict({**cfg.to_dict(), **overrides})


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    out = run_simulation(cfg, cfg.seed)
    ds = from_simulation(out)
    path = write_dataset(ds, args.out)
    print(f"wrote {path}: {cfg.n_agents} agents, {int(ds.labels.sum())} tested positive, "
          f"{len(ds.infection_log)} infections")
    return EXIT_OK


def cmd_encode(args) -> int:
    ds = read_dataset(args.dataset)
    memory = ds.memory()
    bound = space_bound(ds.T, len(memory), ds.P)
    if len(memory.registry) > bound:
        raise AssertionError(f"registry size {len(memory.registry)} exceeds T*min(N,P) = {bound}")
    save_snapshot(memory, args.out)
    _write_manifest(
        Path(str(args.out) + ".manifest.json"),
        {"command": "encode", "dataset": str(args.dataset), **manifest(ds.cfg, ds.seed)},
    )
    print(f"registry_size={len(memory.registry)} individuals={len(memory)} bound={bound}")
    return EXIT_OK


def _traces_from_memory(memory: CollectiveMemory) -> list[EpisodicTrace]:
    raw = memory.registry.raw
    traces = []
    for n in memory.individuals:
        ev = raw[n.events]
        ev = ev[np.argsort(ev[:, 0], kind="stable")]
        traces.append(EpisodicTrace(n.agent_id, ev[:, 0], ev[:, 1]))
    return traces


def cmd_search(args) -> int:
    if args.k is not None and args.k < 1:
        raise UsageError("k must be a positive integer")
    cfg = SearchConfig(
        delta_c=args.delta_c,
        k=args.k or 5,
        method=args.method,
        pooling=args.pooling,
        selection="threshold" if args.threshold else "topk",
    )
    ds: Dataset | None = None
    if args.dataset:
        ds = read_dataset(args.dataset)
        memory = ds.memory()
        traces, labels, T, P = ds.traces, ds.labels, ds.T, ds.P
        scenario, seed = ds.cfg.name, ds.seed
    else:
        memory = load_snapshot(args.snapshot)
        traces, labels, T, P = _traces_from_memory(memory), memory.labels, memory.T, memory.P
        scenario, seed = "snapshot", ""

    n_pos = int(np.count_nonzero(np.asarray(labels) == 1))
    if n_pos == 0:
        ranked = []
    elif cfg.method == "stem":
        ranked = stem_search(memory, cfg)
    else:
        positives, untested = split_traces(traces, labels)
        ranked = baseline_search(positives, untested, T, P)
    chosen = set(select_candidates(ranked, cfg))
    rows = [c for c in ranked if c.agent_id in chosen]

    truth = ds.acc_agents() if ds is not None and ds.has_ground_truth else None
    lines = [
        f"# scenario={scenario}",
        f"# seed={seed}",
        f"# k={cfg.k}",
        f"# delta_c={cfg.delta_c}",
        f"# selection={cfg.selection}",
        f"# pooling={cfg.pooling}",
    ]
    if n_pos == 0:
        lines.append("# note=no tested-positive individuals; the evidence vector is empty")
    header = "agent_id,activation,rank,method" + (",hit" if truth is not None else "")
    lines.append(header)
    for c in rows:
        line = f"{c.agent_id},{c.activation!r},{c.rank},{cfg.method}"
        if truth is not None:
            line += f",{int(c.agent_id in truth)}"
        lines.append(line)
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        _write_manifest(
            Path(str(args.out) + ".manifest.json"),
            {"command": "search", "search": dataclasses.asdict(cfg),
             "input": str(args.dataset or args.snapshot), "stemcovid_version": __version__},
        )
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _progress(r):
    log.info("%s seed=%d untested=%d stem=%.4fs baseline=%s", r.scenario, r.seed, r.n_untested,
             r.timings.get("stem", float("nan")), r.timings.get("baseline"))


def cmd_experiment(args) -> int:
    cfg = _resolve_config(args)
    ks = args.k or list(DEFAULT_KS)
    if min(ks) < 1:
        raise UsageError("k must be a positive integer")
    out = Path(args.out)
    methods = ["stem"] if args.stem_only else ["stem", "baseline"]
    results = run_scenario_batch(cfg, methods=methods, progress=_progress)
    write_table(success_table(results, ks), out / "success.csv", SUCCESS_FIELDS)
    write_table(hit_rows(results, ks), out / "results.csv", HIT_FIELDS)
    write_table(growth_rows(results), out / "growth.csv", GROWTH_FIELDS)
    write_table(timing_rows(timing_summary(results)), out / "timing.csv", TIMING_FIELDS)
    _write_manifest(out / "manifest.json", {"command": "experiment", "k": ks, "methods": methods,
                                             **manifest(cfg, cfg.seed)})
    for row in success_table(results, ks, methods=["stem"]):
        print(f"{row['scenario']} {row['target']:<5} k={row['k']:<3} success={row['success_rate']:.3f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = []
    for name in args.scenarios:
        if name not in SCENARIOS:
            raise UsageError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    cfgs = []
    for name in args.scenarios:
        cfg = SCENARIOS[name]
        overrides = {"runs": args.runs} if args.runs else {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        cfg = ScenarioConfig.from_dict({**cfg.to_dict(), **overrides})
        cfgs.append(cfg)
        results = run_scenario_batch(cfg, progress=_progress)
        rows += timing_rows(timing_summary(results))
    out = Path(args.out)
    write_table(rows, out / "timing.csv", TIMING_FIELDS)
    _write_manifest(out / "manifest.json", {"command": "bench", "configs": [c.to_dict() for c in cfgs],
                                             "stemcovid_version": __version__})
    for r in rows:
        print(f"{r['scenario']:<7} {r['method']:<9} min={r['min']:.4f}s mean={r['mean']:.4f}s max={r['max']:.4f}s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stemcovid", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run one simulation and export the dataset")
    s.add_argument("scenario", nargs="?", default="S200N")
    s.add_argument("--config", help="manifest or config JSON; overrides the scenario name")
    s.add_argument("--seed", type=int)
    s.add_argument("--acc-fraction", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("encode", help="build the episodic memory of a dataset and save a snapshot")
    e.add_argument("dataset")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_encode)

    q = sub.add_parser("search", help="rank untested agents")
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset")
    src.add_argument("--snapshot")
    q.add_argument("--method", choices=["stem", "baseline"], default="stem")
    q.add_argument("--pooling", choices=["fuzzy_or", "weighted"], default="fuzzy_or")
    q.add_argument("--k", type=int)
    q.add_argument("--threshold", action="store_true", help="select by activation > delta_c instead of top-k")
    q.add_argument("--delta-c", type=float, default=0.0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_search)

    x = sub.add_parser("experiment", help="batch of runs with success, growth and timing tables")
    x.add_argument("scenario", nargs="?", default="S200N")
    x.add_argument("--config")
    x.add_argument("--seed", type=int)
    x.add_argument("--runs", type=int)
    x.add_argument("--acc-fraction", type=float)
    x.add_argument("--k", type=int, nargs="+")
    x.add_argument("--stem-only", action="store_true", help="skip the brute-force baseline")
    x.add_argument("--out", required=True)
    x.set_defaults(func=cmd_experiment)

    b = sub.add_parser("bench", help="time stem against the baseline")
    b.add_argument("scenarios", nargs="+")
    b.add_argument("--runs", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    verbose = args.verbose or os.environ.get("STEMCOVID_VERBOSE", "") not in ("", "0")
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"stemcovid: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SnapshotError) as e:
        print(f"stemcovid: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (json.JSONDecodeError, FileNotFoundError) as e:
        print(f"stemcovid: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"stemcovid: I/O error: {e.filename}: {e.strerror}", file=sys.stderr)
        return EXIT_DATA
    except (AssertionError, ContractError) as e:
        print(f"stemcovid: internal invariant violated: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except (KeyError, ValueError) as e:
        print(f"stemcovid: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
