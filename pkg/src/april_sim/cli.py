"""Experiment runner CLI.

Subcommands:
  run        single simulation; writes steps.jsonl and summary.json
  compare    paired baseline/april runs over a seed list; writes comparison.json
  histogram  sample the configured length distribution; writes histogram.csv

Flags given on the command line override config-file values and are echoed
back in summary.json under `resolved_config`. The APRIL_BENCH_OUT environment
variable supplies the default output root when --out is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import RunConfig, default_config
from .errors import ConfigError
from .metrics import StepReport, summarize_run
from .simulate import Simulation, run_simulation
from .workload import histogram, save_histogram_csv

OUT_ENV = "APRIL_BENCH_OUT"


def _output_root() -> str:
    return os.environ.get(OUT_ENV, "runs")


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else default_config()
    overrides = {
        "run.seed": getattr(args, "seed", None),
        "run.steps": getattr(args, "steps", None),
        "scheduler.mode": getattr(args, "mode", None),
        "run.output_dir": getattr(args, "out", None),
    }
    if getattr(args, "manifest", False):
        overrides["run.write_manifest"] = True
    if getattr(args, "events", False):
        overrides["run.write_events"] = True
    return config.with_overrides(**overrides)


def _write_run_outputs(sim: Simulation, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "steps.jsonl"), "w", encoding="utf-8") as f:
        for report in sim.reports:
            f.write(json.dumps(report.to_json_dict()) + "\n")
    if sim.reports:
        summary = sim.summary().to_json_dict()
    else:
        summary = {"steps": 0}
    summary["resolved_config"] = sim.config.to_json_dict()
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    if sim.config.run.write_manifest:
        with open(os.path.join(out_dir, "samples.csv"), "w", encoding="utf-8") as f:
            f.write("step,instance_id,sample_index,start_version,complete_version,tokens\n")
            for row in sim.manifest:
                f.write(
                    f"{row.step},{row.instance_id},{row.sample_index},"
                    f"{row.start_version},{row.complete_version},{row.tokens}\n"
                )
    if sim.config.run.write_events:
        with open(os.path.join(out_dir, "events.jsonl"), "w", encoding="utf-8") as f:
            for record in sim.events:
                f.write(json.dumps(record) + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out_dir = config.run.output_dir or os.path.join(
        _output_root(), f"run-{config.scheduler.mode}-seed{config.run.seed}"
    )
    sim = run_simulation(config)
    _write_run_outputs(sim, out_dir)
    print(f"wrote {len(sim.reports)} step reports to {out_dir}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    config = _load_config(args)
    seeds = args.seeds if args.seeds else [config.run.seed]
    base_out = config.run.output_dir or os.path.join(_output_root(), "compare")
    per_seed = []
    for seed in seeds:
        rows = {}
        baseline_reports: list[StepReport] | None = None
        for mode in ("baseline", "april"):
            run_cfg = config.with_overrides(**{
                "run.seed": seed,
                "scheduler.mode": mode,
                "run.output_dir": os.path.join(base_out, f"{mode}-seed{seed}"),
            })
            sim = run_simulation(run_cfg)
            _write_run_outputs(sim, run_cfg.run.output_dir)
            if sim.reports:
                summary = sim.summary(baseline=baseline_reports if mode == "april" else None)
                rows[mode] = summary
            if mode == "baseline":
                baseline_reports = sim.reports
        entry = {"seed": seed}
        for mode, summary in rows.items():
            entry[mode] = summary.to_json_dict()
        if "april" in rows and rows["april"].relative_throughput_improvement is not None:
            entry["improvement"] = rows["april"].relative_throughput_improvement
        per_seed.append(entry)
    improvements = [e["improvement"] for e in per_seed if "improvement" in e]
    offpolicy = [e["april"]["mean_offpolicy_fraction"] for e in per_seed if "april" in e]
    comparison = {
        "seeds": seeds,
        "per_seed": per_seed,
        "mean_improvement": float(np.mean(improvements)) if improvements else None,
        "std_improvement": float(np.std(improvements)) if improvements else None,
        "mean_offpolicy_fraction": float(np.mean(offpolicy)) if offpolicy else None,
        "resolved_config": config.to_json_dict(),
    }
    os.makedirs(base_out, exist_ok=True)
    path = os.path.join(base_out, "comparison.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(comparison, f, indent=2, sort_keys=True)
        f.write("\n")
    if improvements:
        print(
            f"relative throughput improvement over {len(seeds)} seed(s): "
            f"{comparison['mean_improvement']:+.1%} +- {comparison['std_improvement']:.1%}"
        )
    print(f"wrote {path}")
    return 0


def cmd_histogram(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out_dir = config.run.output_dir or os.path.join(_output_root(), "histogram")
    dist = config.workload.build_distribution(config.engine.l_max)
    hist = histogram(dist, args.draws, config.run.seed)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "histogram.csv")
    save_histogram_csv(path, hist)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="april-sim",
        description="Partial-rollout scheduling simulator for RL rollout generation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--steps", type=int, default=None, help="override run.steps")
        p.add_argument(
            "--mode", choices=["baseline", "april"], default=None,
            help="override scheduler.mode",
        )
        p.add_argument("--out", type=str, default=None, help="output directory")

    p_run = sub.add_parser("run", help="run one simulation")
    common(p_run)
    p_run.add_argument("--manifest", action="store_true", help="write samples.csv")
    p_run.add_argument("--events", action="store_true", help="write events.jsonl")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="paired baseline/april comparison")
    common(p_cmp)
    p_cmp.add_argument("--seeds", type=int, nargs="+", default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_hist = sub.add_parser("histogram", help="sample the length distribution")
    common(p_hist)
    p_hist.add_argument("--draws", type=int, default=100_000)
    p_hist.set_defaults(func=cmd_histogram)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
