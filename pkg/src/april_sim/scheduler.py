"""Synchronous baseline and partial-rollout (APRIL) step scheduling.

The baseline step is the classic synchronous loop: launch N instance groups,
wait for every sequence to finish, train. The APRIL step over-provisions to
N' > N groups, stops the engine the moment N whole groups are complete,
parks interrupted sequences in a continuation buffer, and resumes them ahead
of fresh work next step. Completion is counted at instance-group granularity:
a group is deliverable only when all of its samples are done, and groups are
the unit of training delivery.

Bookkeeping rules that keep the accounting exact:
  - a group is delivered exactly once; surplus complete groups are buffered
    whole and sort first at the next delivery (earliest completion wins);
  - queued sequences that never generated a token return to the pending pool,
    not the buffer, since they carry no off-policy tokens;
  - at most N' groups are concurrently open within a step, buffered work
    counting toward its group.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import Engine
from .errors import ConfigError, ContractViolation
from .rollouts import COMPLETED, PAUSED, PENDING, Group, RolloutSample
from .workload import InstanceSource, LengthSampler

BASELINE = "baseline"
APRIL = "april"
TRIGGER_GROUPS = "groups"
TRIGGER_SAMPLES = "samples"


@dataclass(frozen=True)
class SchedulerConfig:
    rollout_batch_size: int = 32  # N: groups per training step
    samples_per_prompt: int = 8  # G
    over_sampling_batch_size: int = 64  # N': groups in flight (april only)
    mode: str = APRIL
    trigger: str = TRIGGER_GROUPS

    def __post_init__(self) -> None:
        if self.rollout_batch_size < 1:
            raise ConfigError(f"rollout_batch_size must be >= 1, got {self.rollout_batch_size}")
        if self.samples_per_prompt < 1:
            raise ConfigError(f"samples_per_prompt must be >= 1, got {self.samples_per_prompt}")
        if self.over_sampling_batch_size < self.rollout_batch_size:
            raise ConfigError(
                "over_sampling_batch_size must be >= rollout_batch_size "
                f"({self.over_sampling_batch_size} < {self.rollout_batch_size})"
            )
        if self.mode not in (BASELINE, APRIL):
            raise ConfigError(f"unknown scheduler mode {self.mode!r}")
        if self.trigger not in (TRIGGER_GROUPS, TRIGGER_SAMPLES):
            raise ConfigError(f"unknown trigger {self.trigger!r}")


def check_trigger(config: SchedulerConfig, completed_groups: int, completed_samples: int) -> bool:
    """Early-termination test; delivery always requires N whole groups."""
    n = config.rollout_batch_size
    if config.trigger == TRIGGER_GROUPS:
        return completed_groups >= n
    return completed_samples >= n * config.samples_per_prompt and completed_groups >= n


class ContinuationBuffer:
    """Interrupted partials plus completed samples waiting on their siblings.

    Partials are kept in FIFO order of pause time, ties broken by
    (instance_id, sample_index); complete-but-undelivered groups are stored
    whole so they can be delivered first at the next step.
    """

    def __init__(self) -> None:
        self._partials: list[RolloutSample] = []  # kept sorted by pause key
        self._orphans: dict[int, list[RolloutSample]] = {}
        self._ready_groups: list[Group] = []
        self.high_water = 0

    # -- mutation ----------------------------------------------------------

    def push_partials(self, samples: list[RolloutSample]) -> None:
        self._partials.extend(samples)
        self._partials.sort(key=lambda s: s.paused_at)
        self._note_size()

    def remove_partial(self, sample: RolloutSample) -> None:
        self._partials.remove(sample)

    def push_orphan(self, sample: RolloutSample) -> None:
        self._orphans.setdefault(sample.instance_id, []).append(sample)
        self._note_size()

    def pop_orphans(self, instance_id: int) -> list[RolloutSample]:
        return self._orphans.pop(instance_id, [])

    def push_ready_group(self, group: Group) -> None:
        self._ready_groups.append(group)
        self._note_size()

    def pop_ready_groups(self) -> list[Group]:
        out = sorted(self._ready_groups, key=lambda g: g.completion_seq)
        self._ready_groups = []
        return out

    # -- inspection ----------------------------------------------------------

    def partials(self) -> list[RolloutSample]:
        return list(self._partials)

    def sample_count(self) -> int:
        return (
            len(self._partials)
            + sum(len(v) for v in self._orphans.values())
            + sum(len(g.samples) for g in self._ready_groups)
        )

    def sample_ids(self) -> list[str]:
        ids = [s.sample_id for s in self._partials]
        for orphans in self._orphans.values():
            ids.extend(s.sample_id for s in orphans)
        for g in self._ready_groups:
            ids.extend(s.sample_id for s in g.samples)
        return ids

    def _note_size(self) -> None:
        self.high_water = max(self.high_water, self.sample_count())


@dataclass
class StepOutcome:
    """Raw per-step facts handed to the metrics layer."""

    step: int
    batch: list[Group]
    rollout_wall_time: float
    tokens_generated: int
    carried_in_tokens: int
    groups_completed: int  # groups that became complete during this step
    buffer_size_after: int
    pool_size_after: int
    open_group_count: int = 0  # groups concurrently open during the step
    admission_log: list[tuple[str, str]] = field(default_factory=list)  # (kind, sample_id)

    def batch_samples(self) -> list[RolloutSample]:
        return [s for g in self.batch for s in g.samples]


class Scheduler:
    """Owns the engine, buffer, and pending pool for the duration of a run."""

    def __init__(
        self,
        config: SchedulerConfig,
        engine: Engine,
        source: InstanceSource,
        length_sampler: LengthSampler | None,
    ):
        self.config = config
        self.engine = engine
        self.source = source
        self.length_sampler = length_sampler
        self.buffer = ContinuationBuffer()
        self.pending_pool: list[RolloutSample] = []
        self.created_samples = 0
        self.delivered_samples = 0
        self.event_sink: list[dict] | None = None  # optional JSONL trace records
        # undelivered, incomplete groups parked between steps
        self._carryover: dict[int, Group] = {}

    # -- group construction --------------------------------------------------

    def _new_group(self) -> Group:
        instance = self.source.next_instance()
        samples = []
        for j in range(self.config.samples_per_prompt):
            s = RolloutSample(instance.instance_id, j)
            if self.length_sampler is not None:
                s.target_length = self.length_sampler.target_length(instance.instance_id, j)
            samples.append(s)
        self.created_samples += len(samples)
        return Group(instance, samples)

    # -- step entry points -----------------------------------------------------

    def run_step(self, version: int, params=None) -> StepOutcome:
        if self.config.mode == BASELINE:
            return self.run_step_baseline(version, params)
        return self.run_step_april(version, params)

    def run_step_baseline(self, version: int, params=None) -> StepOutcome:
        """Synchronous step: everything submitted finishes under this version."""
        if not self.engine.idle:
            raise ContractViolation("baseline step requires an idle engine")
        self.engine.begin_step(version, params)
        clock0 = self.engine.clock
        tokens0 = self.engine.cumulative_tokens

        groups = [self._new_group() for _ in range(self.config.rollout_batch_size)]
        by_instance = {g.instance_id: g for g in groups}
        log: list[tuple[str, str]] = []
        for g in groups:
            for s in g.samples:
                self.engine.submit(s)
                log.append(("fresh", s.sample_id))

        while True:
            events = self.engine.decode_until_event()
            if not events:
                break
            for ev in events:
                self._trace(ev.to_record())
                by_instance[ev.sample.instance_id].note_completion(self.engine.iteration_index)
        if not all(g.complete for g in groups):
            raise ContractViolation("baseline step ended with incomplete groups")

        self.delivered_samples += sum(len(g.samples) for g in groups)
        return StepOutcome(
            step=version,
            batch=sorted(groups, key=lambda g: g.completion_seq),
            rollout_wall_time=self.engine.clock - clock0,
            tokens_generated=self.engine.cumulative_tokens - tokens0,
            carried_in_tokens=0,
            groups_completed=len(groups),
            buffer_size_after=0,
            pool_size_after=0,
            open_group_count=len(groups),
            admission_log=log,
        )

    def run_step_april(self, version: int, params=None) -> StepOutcome:
        """Over-provision to N' groups, stop at N complete, buffer the rest."""
        if not self.engine.idle:
            raise ContractViolation("april step requires an idle engine")
        self.engine.begin_step(version, params)
        clock0 = self.engine.clock
        tokens0 = self.engine.cumulative_tokens
        n = self.config.rollout_batch_size
        n_prime = self.config.over_sampling_batch_size
        log: list[tuple[str, str]] = []

        # Complete groups carried from earlier steps count immediately.
        opened: dict[int, Group] = {}
        carried_tokens = 0
        completed_groups = 0
        completed_samples = 0
        groups_completed_this_step = 0
        for g in self.buffer.pop_ready_groups():
            opened[g.instance_id] = g
            completed_groups += 1
            completed_samples += len(g.samples)
            carried_tokens += g.total_tokens()

        if not check_trigger(self.config, completed_groups, completed_samples):
            carried_tokens += self._resume_carried_work(opened, n_prime, log)
            # Orphaned completed siblings of re-opened groups rejoin their group.
            for iid, group in opened.items():
                if group.complete:
                    continue
                for orphan in self.buffer.pop_orphans(iid):
                    carried_tokens += orphan.total_tokens
                    completed_samples += 1
            while len(opened) < n_prime:
                g = self._new_group()
                opened[g.instance_id] = g
                for s in g.samples:
                    self.engine.submit(s)
                    log.append(("fresh", s.sample_id))

        # Decode until the early-termination trigger fires.
        while not check_trigger(self.config, completed_groups, completed_samples):
            events = self.engine.decode_until_event()
            if not events:
                raise ContractViolation("engine drained before the trigger fired")
            for ev in events:
                self._trace(ev.to_record())
                group = opened[ev.sample.instance_id]
                group.note_completion(self.engine.iteration_index)
                completed_samples += 1
                if group.complete:
                    completed_groups += 1
                    groups_completed_this_step += 1

        # Deliver the N earliest-completed groups; keep everything else.
        complete = sorted(
            (g for g in opened.values() if g.complete), key=lambda g: g.completion_seq
        )
        if len(complete) < n:
            raise ContractViolation("trigger fired with fewer than N complete groups")
        batch, surplus = complete[:n], complete[n:]

        self._park_interrupted_work(version)
        for g in surplus:
            self._carryover.pop(g.instance_id, None)
            self.buffer.push_ready_group(g)
        for g in opened.values():
            if not g.complete:
                self._carryover[g.instance_id] = g
                for s in g.samples:
                    if s.status == COMPLETED:
                        self.buffer.push_orphan(s)
        for g in batch:
            self._carryover.pop(g.instance_id, None)
        self.delivered_samples += sum(len(g.samples) for g in batch)

        return StepOutcome(
            step=version,
            batch=batch,
            rollout_wall_time=self.engine.clock - clock0,
            tokens_generated=self.engine.cumulative_tokens - tokens0,
            carried_in_tokens=carried_tokens,
            groups_completed=groups_completed_this_step,
            buffer_size_after=self.buffer.sample_count(),
            pool_size_after=len(self.pending_pool),
            open_group_count=len(opened),
            admission_log=log,
        )

    # -- resumption -------------------------------------------------------------

    def _resume_carried_work(
        self, opened: dict[int, Group], n_prime: int, log: list[tuple[str, str]]
    ) -> int:
        """Submit buffered partials (FIFO), then pooled zero-token samples.

        A group not already open may only be opened while fewer than N' groups
        are; work belonging to groups that cannot open stays parked. Returns
        the number of carried-in tokens resubmitted.
        """
        carried = 0
        for s in self.buffer.partials():
            group = self._carryover.get(s.instance_id)
            if group is None:
                raise ContractViolation(f"buffered partial {s.sample_id} has no group")
            if s.instance_id not in opened:
                if len(opened) >= n_prime:
                    continue
                opened[s.instance_id] = group
            self.buffer.remove_partial(s)
            carried += s.total_tokens
            self.engine.submit(s)
            log.append(("resumed", s.sample_id))
        kept_pool: list[RolloutSample] = []
        for s in self.pending_pool:
            group = self._carryover.get(s.instance_id)
            openable = s.instance_id in opened or (
                group is not None and len(opened) < n_prime
            )
            if not openable:
                kept_pool.append(s)
                continue
            opened.setdefault(s.instance_id, group)
            self.engine.submit(s)
            log.append(("pooled", s.sample_id))
        self.pending_pool = kept_pool
        return carried

    def resume_from_buffer(self, version: int, params=None) -> int:
        """Standalone resumption pass; returns how many samples were admitted."""
        self.engine.begin_step(version, params)
        log: list[tuple[str, str]] = []
        self._resume_carried_work({}, self.config.over_sampling_batch_size, log)
        return len(log)

    # -- interruption --------------------------------------------------------------

    def _trace(self, record: dict) -> None:
        if self.event_sink is not None:
            self.event_sink.append(record)

    def _park_interrupted_work(self, version: int) -> None:
        returned = self.engine.abort_active()
        paused = [s for s in returned if s.status == PAUSED]
        drained = [s for s in returned if s.status == PENDING]
        for s in paused:
            self._trace(
                {
                    "clock": self.engine.clock,
                    "sample_id": s.sample_id,
                    "tokens": s.total_tokens,
                    "reason": "aborted",
                }
            )
        for s in paused:
            # Keep the original pause stamp for partials that sat in the queue
            # without generating anything this step.
            if s.paused_at is None or s.segments[-1].version == version:
                s.paused_at = (version, self.engine.iteration_index, s.instance_id, s.sample_index)
        self.buffer.push_partials(sorted(paused, key=lambda s: s.paused_at))
        self.pending_pool.extend(
            sorted(drained, key=lambda s: (s.instance_id, s.sample_index))
        )

    # -- inspection -----------------------------------------------------------------

    def undelivered_sample_ids(self) -> list[str]:
        ids = self.buffer.sample_ids()
        ids.extend(s.sample_id for s in self.pending_pool)
        return ids
