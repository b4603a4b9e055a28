"""Per-step and per-run metrics.

Throughput follows the rollout definition used throughout: all tokens
generated during the rollout phase (aborted partials included, since they
consumed engine time) divided by rollout wall-clock time. Off-policy content
is reported both token-weighted (share of batch tokens generated under older
parameter versions) and sample-weighted (share of rollouts containing any
such tokens); the token-weighted number is the primary one.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .rollouts import Group
from .scheduler import StepOutcome


@dataclass(frozen=True)
class StepReport:
    step: int
    tokens_generated: int
    rollout_wall_time: float
    train_wall_time: float
    throughput: float
    idle_fraction: float
    completed_groups: int
    carried_in_tokens: int
    offpolicy_fraction: float
    offpolicy_sample_fraction: float
    staleness_histogram: dict[int, int]
    sigma_batch: float
    sigma_instance: float
    mean_reward: float
    buffer_size_after: int

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["staleness_histogram"] = {str(k): v for k, v in sorted(self.staleness_histogram.items())}
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "StepReport":
        d = dict(d)
        d["staleness_histogram"] = {int(k): v for k, v in d["staleness_histogram"].items()}
        return cls(**d)


def offpolicy_fraction(batch: list[Group], current_step: int) -> float:
    """Token-weighted share of the batch generated under versions < current_step."""
    old = total = 0
    for g in batch:
        for s in g.samples:
            for seg in s.segments:
                total += seg.token_count
                if seg.version < current_step:
                    old += seg.token_count
    return old / total if total else 0.0


def offpolicy_sample_fraction(batch: list[Group], current_step: int) -> float:
    """Share of rollouts that contain any tokens from an older version."""
    samples = [s for g in batch for s in g.samples]
    if not samples:
        return 0.0
    carried = sum(1 for s in samples if any(seg.version < current_step for seg in s.segments))
    return carried / len(samples)


def staleness_histogram(batch: list[Group]) -> dict[int, int]:
    hist: dict[int, int] = {}
    for g in batch:
        for s in g.samples:
            m = s.staleness
            hist[m] = hist.get(m, 0) + 1
    return dict(sorted(hist.items()))


def sigma_batch(batch: list[Group]) -> float:
    """Population std of response lengths over all samples in the batch."""
    lengths = np.array([s.total_tokens for g in batch for s in g.samples], dtype=float)
    return float(lengths.std())


def sigma_instance(batch: list[Group]) -> float:
    """Mean over groups of the within-group population std of lengths."""
    stds = [
        float(np.array([s.total_tokens for s in g.samples], dtype=float).std()) for g in batch
    ]
    return float(np.mean(stds)) if stds else 0.0


def build_step_report(
    outcome: StepOutcome,
    peak_rate: float,
    train_wall_time: float,
    mean_reward: float,
) -> StepReport:
    wall = outcome.rollout_wall_time
    throughput = outcome.tokens_generated / wall if wall > 0 else 0.0
    idle = 1.0 - throughput / peak_rate if peak_rate > 0 else 0.0
    return StepReport(
        step=outcome.step,
        tokens_generated=outcome.tokens_generated,
        rollout_wall_time=wall,
        train_wall_time=train_wall_time,
        throughput=throughput,
        idle_fraction=min(max(idle, 0.0), 1.0),
        completed_groups=outcome.groups_completed,
        carried_in_tokens=outcome.carried_in_tokens,
        offpolicy_fraction=offpolicy_fraction(outcome.batch, outcome.step),
        offpolicy_sample_fraction=offpolicy_sample_fraction(outcome.batch, outcome.step),
        staleness_histogram=staleness_histogram(outcome.batch),
        sigma_batch=sigma_batch(outcome.batch),
        sigma_instance=sigma_instance(outcome.batch),
        mean_reward=mean_reward,
        buffer_size_after=outcome.buffer_size_after,
    )


@dataclass(frozen=True)
class RunSummary:
    steps: int
    mean_throughput: float
    median_throughput: float
    total_tokens: int
    total_rollout_wall_time: float
    mean_offpolicy_fraction: float
    mean_offpolicy_sample_fraction: float
    max_staleness: int
    final_reward: float
    mean_sigma_batch: float
    mean_sigma_instance: float
    buffer_high_water: int = 0
    relative_throughput_improvement: float | None = None

    def to_json_dict(self) -> dict:
        return asdict(self)


def summarize_run(
    reports: list[StepReport],
    baseline: list[StepReport] | None = None,
    buffer_high_water: int = 0,
) -> RunSummary:
    """Aggregate a run; when a baseline run is supplied, report the relative
    mean-throughput improvement over it."""
    if not reports:
        raise ConfigError("summarize_run needs at least one step report")
    improvement = None
    if baseline is not None:
        if len(baseline) != len(reports):
            raise ConfigError(
                f"step count mismatch: run has {len(reports)}, baseline has {len(baseline)}"
            )
        base_mean = float(np.mean([r.throughput for r in baseline]))
        this_mean = float(np.mean([r.throughput for r in reports]))
        improvement = (this_mean - base_mean) / base_mean if base_mean else math.inf
    throughputs = [r.throughput for r in reports]
    return RunSummary(
        steps=len(reports),
        mean_throughput=float(np.mean(throughputs)),
        median_throughput=float(np.median(throughputs)),
        total_tokens=int(sum(r.tokens_generated for r in reports)),
        total_rollout_wall_time=float(sum(r.rollout_wall_time for r in reports)),
        mean_offpolicy_fraction=float(np.mean([r.offpolicy_fraction for r in reports])),
        mean_offpolicy_sample_fraction=float(
            np.mean([r.offpolicy_sample_fraction for r in reports])
        ),
        max_staleness=max(max(r.staleness_histogram) for r in reports),
        final_reward=reports[-1].mean_reward,
        mean_sigma_batch=float(np.mean([r.sigma_batch for r in reports])),
        mean_sigma_instance=float(np.mean([r.sigma_instance for r in reports])),
        buffer_high_water=buffer_high_water,
        relative_throughput_improvement=improvement,
    )
