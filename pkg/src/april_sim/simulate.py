"""Whole-run orchestration: ties workload, engine, scheduler, and policy
together and yields one StepReport per training step."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import metrics
from .config import POLICY_DRIVEN, RunConfig
from .engine import LengthDrivenEngine, PolicyDrivenEngine
from .policy import (
    PolicyParams,
    group_advantages,
    reinforce_update,
    reward,
    train_wall_time,
)
from .rollouts import Group
from .scheduler import BASELINE, Scheduler
from .workload import InstanceSource, LengthSampler


@dataclass
class ManifestRow:
    step: int
    instance_id: int
    sample_index: int
    start_version: int
    complete_version: int
    tokens: int


@dataclass
class Simulation:
    config: RunConfig
    scheduler: Scheduler
    policy: PolicyParams | None
    reports: list[metrics.StepReport] = field(default_factory=list)
    manifest: list[ManifestRow] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    _step: int = 0

    @property
    def policy_driven(self) -> bool:
        return self.config.workload.mode == POLICY_DRIVEN

    def run_step(self) -> metrics.StepReport:
        k = self._step
        outcome = self.scheduler.run_step(k, self.policy)
        samples = outcome.batch_samples()
        if self.policy_driven:
            rewards = [reward(s, self.config.train.target_token) for s in samples]
            mean_reward = sum(rewards) / len(rewards) if rewards else 0.0
            advantages: list[float] = []
            pos = 0
            for g in outcome.batch:
                n = len(g.samples)
                advantages.extend(
                    group_advantages(
                        rewards[pos : pos + n],
                        self.config.train.advantage_mode,
                        self.config.train.std_eps,
                    )
                )
                pos += n
            self.policy = reinforce_update(self.policy, samples, advantages, self.config.train)
        batch_tokens = sum(s.total_tokens for s in samples)
        report = metrics.build_step_report(
            outcome,
            peak_rate=self.config.engine.peak_rate,
            train_wall_time=train_wall_time(batch_tokens, self.config.train),
            mean_reward=mean_reward if self.policy_driven else 0.0,
        )
        self.reports.append(report)
        if self.config.run.write_manifest:
            self._record_manifest(outcome.batch, k)
        self._step += 1
        return report

    def run(self) -> list[metrics.StepReport]:
        for _ in range(self.config.run.steps):
            self.run_step()
        return self.reports

    def summary(self, baseline: list[metrics.StepReport] | None = None) -> metrics.RunSummary:
        return metrics.summarize_run(
            self.reports, baseline, buffer_high_water=self.scheduler.buffer.high_water
        )

    def _record_manifest(self, batch: list[Group], step: int) -> None:
        for g in batch:
            for s in g.samples:
                self.manifest.append(
                    ManifestRow(
                        step=step,
                        instance_id=s.instance_id,
                        sample_index=s.sample_index,
                        start_version=s.start_version,
                        complete_version=s.complete_version,
                        tokens=s.total_tokens,
                    )
                )


def build_simulation(config: RunConfig) -> Simulation:
    seed = config.run.seed
    source = InstanceSource(group_size=config.scheduler.samples_per_prompt)
    if config.workload.mode == POLICY_DRIVEN:
        engine = PolicyDrivenEngine(config.engine, global_seed=seed)
        sampler = None
        policy = PolicyParams.uniform(config.train.vocab_size)
    else:
        engine = LengthDrivenEngine(config.engine)
        dist = config.workload.build_distribution(config.engine.l_max)
        sampler = LengthSampler(dist, config.workload.correlate_within_group, seed)
        policy = None
    scheduler = Scheduler(config.scheduler, engine, source, sampler)
    sim = Simulation(config=config, scheduler=scheduler, policy=policy)
    if config.run.write_events:
        scheduler.event_sink = sim.events
    return sim


def run_simulation(config: RunConfig) -> Simulation:
    sim = build_simulation(config)
    sim.run()
    return sim
