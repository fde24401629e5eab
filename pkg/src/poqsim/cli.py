"""Command-line entry point: ``poqsim <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 missing input, 4 internal error.
Every subcommand that writes outputs also writes a JSON run manifest next to
them.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from . import __version__
from .analysis import correlation_table, efficiency_frontier, write_correlations_csv, write_frontier_csv
from .config import ConfigError, build_sim_config, config_hash, load_grid, resolve_settings
from .gt_metrics import score_generations
from .normalize import (
    NodeCost,
    NormalizationSpan,
    all_latency_costs,
    fit_all_spans,
    load_costs,
    load_spans,
    normalize_records,
    save_costs,
    save_spans,
)
from .records import (
    RecordError,
    iter_jsonl,
    judgments_to_map,
    load_corpus,
    load_efficiency,
    load_generations,
    load_judgments,
    merge_scores,
    save_jsonl,
)
from .simulation import sweep, run_simulation, write_stats_csv, write_trace
from .synth import SynthSpec, generate, deployment_spec, write_bundle

log = logging.getLogger("poqsim")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISSING_INPUT = 3
EXIT_INTERNAL = 4


class MissingInput(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _existing(path: str | Path | None) -> Path | None:
    if path is None:
        return None
    path = Path(path)
    if not path.is_file():
        raise MissingInput(f"input not found: {path}")
    return path


def write_manifest(
    target: Path,
    command: str,
    config: dict[str, Any],
    inputs: Iterable[Path | None],
    outputs: Iterable[Path | None],
    started_at: str,
) -> Path:
    """Write ``<target>.manifest.json``, or ``<target>/manifest.json`` for a directory."""
    path = target / "manifest.json" if target.is_dir() else target.with_name(target.name + ".manifest.json")
    manifest = {
        "tool": "poqsim",
        "tool_version": __version__,
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": config.get("seed"),
        "inputs": [{"path": str(p), "sha256": file_digest(p)} for p in inputs if p is not None],
        "outputs": [{"path": str(p), "sha256": file_digest(p)} for p in outputs if p is not None],
        "started_at": started_at,
        "finished_at": _now(),
    }
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# validate

_KINDS: dict[str, Callable[[Path], list]] = {
    "tasks": load_corpus,
    "generations": load_generations,
    "efficiency": load_efficiency,
    "judgments": load_judgments,
    "spans": load_spans,
    "costs": load_costs,
}


def detect_kind(path: Path) -> str | None:
    if path.suffix.lower() == ".csv":
        return "costs"
    for _, obj in iter_jsonl(path):
        if "output" in obj or "eval_scores" in obj:
            return "generations"
        if "input" in obj:
            return "tasks"
        if "throughput_sps" in obj or "avg_latency_ms" in obj and "cost_norm" not in obj:
            return "efficiency"
        if "cost_norm" in obj:
            return "costs"
        if "min_raw" in obj:
            return "spans"
        if "score" in obj:
            return "judgments"
        raise RecordError("cannot tell which file format this is", path, None)
    return None


def cmd_validate(args) -> int:
    status = EXIT_OK
    for raw in args.paths:
        path = Path(raw)
        if not path.is_file():
            print(f"{path}: MISSING (no such file)")
            status = max(status, EXIT_MISSING_INPUT)
            continue
        try:
            kind = args.kind or detect_kind(path)
            count = 0 if kind is None else len(_KINDS[kind](path))
        except RecordError as exc:
            print(f"{path}: INVALID {exc.reason}" + (f" (line {exc.line})" if exc.line else ""))
            status = max(status, EXIT_VALIDATION)
            continue
        print(f"{path}: ok {kind or 'empty'} {count} records")
    return status


# ---------------------------------------------------------------------------
# pipeline stages


def cmd_score_gt(args) -> int:
    started = _now()
    src = _existing(args.input)
    out = Path(args.output)
    save_jsonl(score_generations(load_generations(src)), out)
    write_manifest(out, "score-gt", {}, [src], [out], started)
    return EXIT_OK


def cmd_normalize(args) -> int:
    started = _now()
    src = _existing(args.input)
    spans_in = _existing(args.spans_in)
    records = load_generations(src)
    spans: list[NormalizationSpan] = load_spans(spans_in) if spans_in else fit_all_spans(records)
    out = Path(args.output)
    save_jsonl(normalize_records(records, spans), out)
    spans_out = Path(args.spans_out) if args.spans_out else None
    if spans_out:
        save_spans(spans, spans_out)
    write_manifest(out, "normalize", {}, [src, spans_in], [out, spans_out], started)
    return EXIT_OK


def cmd_costs(args) -> int:
    started = _now()
    src = _existing(args.efficiency)
    out = Path(args.output)
    save_costs(all_latency_costs(load_efficiency(src)), out)
    write_manifest(out, "costs", {}, [src], [out], started)
    return EXIT_OK


def _sim_settings(args) -> dict[str, Any]:
    overrides = {
        "seed": args.seed,
        "rounds": args.rounds,
        "alpha_f": args.alpha_f,
        "beta_f": args.beta_f,
        "alpha_m": args.alpha_m,
        "beta_m": args.beta_m,
        "k": args.k,
        "k_policy": args.k_policy,
    }
    return resolve_settings(_existing(args.config), overrides)


def _sim_inputs(args):
    corpus_path = _existing(args.corpus)
    records_path = _existing(args.records)
    costs_path = _existing(args.costs)
    corpus = load_corpus(corpus_path) if corpus_path else None
    records = load_generations(records_path)
    costs: list[NodeCost] = load_costs(costs_path)
    if not any(r.norm_score(k) is not None for r in records for k in r.eval_scores):
        raise RecordError(f"{records_path}: no normalized evaluator scores; run 'normalize' first")
    return [corpus_path, records_path, costs_path], corpus, records, costs


def cmd_simulate(args) -> int:
    started = _now()
    config = build_sim_config(_sim_settings(args))
    inputs, corpus, records, costs = _sim_inputs(args)
    inputs.append(_existing(args.config))
    result = run_simulation(config, corpus, records, costs, keep_trace=args.trace is not None)
    stats_out = Path(args.stats_out)
    write_stats_csv(result.stats, stats_out)
    trace_out = None
    if args.trace is not None:
        trace_out = Path(args.trace)
        write_trace(result.trace, trace_out)
    for event in result.events:
        log.info("round %d: %s (%s, %s) wanted k=%d, %d available", event.round_index, event.kind,
                 event.record_id, event.model_key, event.requested_k, event.available)
    write_manifest(stats_out, "simulate", config.to_dict(), inputs, [stats_out, trace_out], started)
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = _now()
    base = build_sim_config(_sim_settings(args))
    grid_path = _existing(args.grid)
    grid = load_grid(grid_path)
    inputs, corpus, records, costs = _sim_inputs(args)
    inputs += [grid_path, _existing(args.config)]
    points = sweep(base, grid, corpus, records, costs, workers=args.workers, keep_trace=args.trace)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index_rows = []
    for point in points:
        sub = out_dir / f"point_{point.index:03d}"
        sub.mkdir(parents=True, exist_ok=True)
        stats_out = sub / "stats.csv"
        write_stats_csv(point.stats, stats_out)
        trace_out = None
        if args.trace:
            trace_out = sub / "trace.jsonl"
            write_trace(point.result.trace, trace_out)
        config = dict(point.config.to_dict(), label=point.label)
        write_manifest(sub, "sweep", config, inputs, [stats_out, trace_out], started)
        index_rows.append({"point": sub.name, "label": point.label, "seed": point.config.seed})
    (out_dir / "points.json").write_text(json.dumps(index_rows, indent=2) + "\n", encoding="utf-8")
    grid_cfg = dict(base.to_dict(), grid={k: list(v) for k, v in grid.items()})
    write_manifest(out_dir, "sweep", grid_cfg, inputs, [out_dir / "points.json"], started)
    return EXIT_OK


def cmd_analyze(args) -> int:
    started = _now()
    src = _existing(args.input)
    eff_path = _existing(args.efficiency)
    judge_path = _existing(args.judgments)
    records = load_generations(src)
    if judge_path:
        records = merge_scores(records, judges=judgments_to_map(load_judgments(judge_path)))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corr_out = out_dir / "correlations.csv"
    write_correlations_csv(correlation_table(records), corr_out)
    frontier_out = None
    if eff_path:
        frontier_out = out_dir / "frontier.csv"
        write_frontier_csv(efficiency_frontier(records, load_efficiency(eff_path)), frontier_out)
    write_manifest(out_dir, "analyze", {}, [src, eff_path, judge_path], [corr_out, frontier_out], started)
    return EXIT_OK


def cmd_synth(args) -> int:
    started = _now()
    spec_path = _existing(args.spec)
    if spec_path:
        spec = SynthSpec.load(spec_path)
    else:
        spec = deployment_spec()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.n_per_task is not None:
        changes["n_per_task"] = args.n_per_task
    if changes:
        spec = SynthSpec.from_dict({**spec.to_dict(), **changes})
    out_dir = Path(args.out_dir)
    paths = write_bundle(generate(spec), out_dir)
    write_manifest(out_dir, "synth", spec.to_dict(), [spec_path], paths.values(), started)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--corpus", help="task file; defaults to the ids in --records")
    p.add_argument("--records", required=True, help="normalized metric file")
    p.add_argument("--costs", required=True, help="node cost file (JSONL or CSV)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--alpha-f", type=float)
    p.add_argument("--beta-f", type=float)
    p.add_argument("--alpha-m", type=float)
    p.add_argument("--beta-m", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--k-policy", choices=["fixed", "uniform_1_to_3"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poqsim", description="Cost-aware Proof-of-Quality simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load and validate JSONL/CSV inputs")
    p.add_argument("paths", nargs="+")
    p.add_argument("--kind", choices=sorted(_KINDS))
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score-gt", help="attach token-F1 ground-truth scores")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_score_gt)

    p = sub.add_parser("normalize", help="min-max normalize evaluator scores per task")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--spans-out", help="write fitted spans here")
    p.add_argument("--spans-in", help="apply these spans instead of fitting")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("costs", help="latency-based node costs from an efficiency file")
    p.add_argument("efficiency")
    p.add_argument("output", help="JSONL, or CSV if the name ends in .csv")
    p.set_defaults(func=cmd_costs)

    p = sub.add_parser("simulate", help="run Monte Carlo PoQ rounds")
    _add_sim_flags(p)
    p.add_argument("--stats-out", required=True)
    p.add_argument("--trace", metavar="PATH", help="also write the per-round trace as JSONL")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="simulate every point of a parameter grid")
    _add_sim_flags(p)
    p.add_argument("--grid", required=True, help="file of 'key = v1, v2, ...' lines")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trace", action="store_true", help="write a trace per grid point")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="correlation and efficiency CSVs")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--efficiency")
    p.add_argument("--judgments", help="judge-result file to merge before analysis")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="write a synthetic fixture set")
    p.add_argument("out_dir")
    p.add_argument("--spec", help="JSON synth spec; defaults to the built-in five-model set")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-per-task", type=int)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except FileNotFoundError as exc:
        print(f"error: input not found: {exc.filename}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (RecordError, ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
