"""Discrete-event simulation of a continuous-batching decode engine.

Time advances in decode iterations: every active sequence gains exactly one
token per iteration, and an iteration with b active sequences costs
d0 + d1 * b seconds. Freed slots are refilled from a FIFO queue at iteration
boundaries, which is what keeps the engine saturated until the workload runs
out of sequences and the long tail starts draining.

The per-iteration contract is exposed as `decode_iteration`; the run loop uses
`decode_until_event`, which advances many iterations at once when nothing can
finish in between (possible in length-driven mode where each sequence's stop
point is known). Both paths produce identical traces; tests replay one
against the other.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation
from .policy import PolicyParams, softmax
from .rng import LANE_POLICY_TOKENS, Stream
from .rollouts import (
    ACTIVE,
    MAX_LENGTH,
    PAUSED,
    PENDING,
    STOP_TOKEN,
    TARGET_LENGTH,
    RolloutSample,
    Segment,
)


@dataclass(frozen=True)
class EngineConfig:
    d0: float = 0.05  # fixed seconds per decode iteration
    d1: float = 0.002  # seconds per active sequence per iteration
    # Default slot count keeps the engine over-subscribed under the default
    # schedulers (N'*G = 512 submitted): sequences start staggered as slots
    # free up, as on a memory-bound serving node.
    max_slots: int = 64
    l_max: int = 16384

    def __post_init__(self) -> None:
        if self.d0 < 0:
            raise ConfigError(f"d0 must be >= 0, got {self.d0}")
        if self.d1 <= 0:
            raise ConfigError(f"d1 must be > 0, got {self.d1}")
        if self.max_slots < 1:
            raise ConfigError(f"max_slots must be >= 1, got {self.max_slots}")
        if self.l_max < 1:
            raise ConfigError(f"l_max must be >= 1, got {self.l_max}")

    def aggregate_rate(self, batch: int) -> float:
        """Tokens per second with `batch` active sequences."""
        if batch <= 0:
            return 0.0
        return batch / (self.d0 + self.d1 * batch)

    @property
    def peak_rate(self) -> float:
        return self.aggregate_rate(self.max_slots)


@dataclass(frozen=True)
class Event:
    clock: float
    sample: RolloutSample
    tokens: int
    reason: str

    @property
    def sample_id(self) -> str:
        return self.sample.sample_id

    def to_record(self) -> dict:
        return {
            "clock": self.clock,
            "sample_id": self.sample_id,
            "tokens": self.tokens,
            "reason": self.reason,
        }


@dataclass
class _Slot:
    sample: RolloutSample
    segment: Segment
    remaining: int = 0  # length-driven: tokens until stop
    stop_at: int = 0
    gen: np.random.Generator | None = None  # policy-driven token stream


class Engine:
    """Base engine: slots, queue, clock. Subclasses define token growth."""

    def __init__(self, config: EngineConfig):
        self.config = config
        self.clock = 0.0
        self.iteration_index = 0
        self.cumulative_tokens = 0
        self.version = 0
        self._slots: list[_Slot] = []
        self._queue: deque[RolloutSample] = deque()

    # -- bookkeeping -------------------------------------------------------

    @property
    def active_count(self) -> int:
        return len(self._slots)

    @property
    def queued_count(self) -> int:
        return len(self._queue)

    @property
    def idle(self) -> bool:
        return not self._slots and not self._queue

    def active_samples(self) -> list[RolloutSample]:
        return [slot.sample for slot in self._slots]

    def begin_step(self, version: int, params: PolicyParams | None = None) -> None:
        if not self.idle:
            raise ContractViolation("begin_step requires an idle engine")
        self.version = version

    # -- admission ---------------------------------------------------------

    def submit(self, sample: RolloutSample) -> None:
        if sample.status not in (PENDING, PAUSED):
            raise ContractViolation(
                f"cannot submit sample {sample.sample_id} with status {sample.status!r}"
            )
        self._queue.append(sample)

    def _admit(self) -> None:
        while self._queue and len(self._slots) < self.config.max_slots:
            sample = self._queue.popleft()
            sample.status = ACTIVE
            segment = sample.open_segment(self.version, with_tokens=self._records_tokens())
            self._slots.append(self._make_slot(sample, segment))

    # -- decode ------------------------------------------------------------

    def decode_iteration(self) -> list[Event]:
        """One tick: every active sequence gains one token."""
        self._admit()
        if not self._slots:
            return []
        return self._advance(1)

    def decode_until_event(self) -> list[Event]:
        """Advance until at least one sequence finishes (or nothing is left)."""
        while True:
            self._admit()
            if not self._slots:
                return []
            events = self._advance(max(1, self._max_jump()))
            if events:
                return events

    def _advance(self, k: int) -> list[Event]:
        batch = len(self._slots)
        self.clock += k * (self.config.d0 + self.config.d1 * batch)
        self.iteration_index += k
        self.cumulative_tokens += k * batch
        finished = self._grow(k)
        events: list[Event] = []
        if finished:
            done = set(id(s) for s, _ in finished)
            self._slots = [slot for slot in self._slots if id(slot.sample) not in done]
            for sample, reason in finished:
                sample.mark_completed(self.version, reason)
                events.append(Event(self.clock, sample, sample.total_tokens, reason))
        return events

    # -- abort ---------------------------------------------------------------

    def abort_active(self) -> list[RolloutSample]:
        """Stop generation at the current boundary, keeping every token.

        Active sequences come back `paused`; queued ones come back untouched
        (`pending` if they never ran, `paused` if they were awaiting resumption).
        """
        out: list[RolloutSample] = []
        for slot in self._slots:
            slot.sample.status = PAUSED
            out.append(slot.sample)
        self._slots = []
        while self._queue:
            out.append(self._queue.popleft())
        return out

    # -- subclass hooks ------------------------------------------------------

    def _records_tokens(self) -> bool:
        raise NotImplementedError

    def _make_slot(self, sample: RolloutSample, segment: Segment) -> _Slot:
        raise NotImplementedError

    def _max_jump(self) -> int:
        raise NotImplementedError

    def _grow(self, k: int) -> list[tuple[RolloutSample, str]]:
        raise NotImplementedError


class LengthDrivenEngine(Engine):
    """Sequences stop at a pre-drawn target length (or the engine cap)."""

    def _records_tokens(self) -> bool:
        return False

    def _make_slot(self, sample: RolloutSample, segment: Segment) -> _Slot:
        if sample.target_length is None:
            raise ContractViolation(f"sample {sample.sample_id} has no target length")
        stop_at = min(sample.target_length, self.config.l_max)
        remaining = stop_at - sample.total_tokens
        if remaining <= 0:
            raise ContractViolation(f"sample {sample.sample_id} already at its stop point")
        return _Slot(sample, segment, remaining=remaining, stop_at=stop_at)

    def _max_jump(self) -> int:
        return min(slot.remaining for slot in self._slots)

    def _grow(self, k: int) -> list[tuple[RolloutSample, str]]:
        finished: list[tuple[RolloutSample, str]] = []
        for slot in self._slots:
            slot.segment.token_count += k
            slot.remaining -= k
            if slot.remaining == 0:
                reason = MAX_LENGTH if slot.stop_at >= self.config.l_max else TARGET_LENGTH
                finished.append((slot.sample, reason))
        return finished


class PolicyDrivenEngine(Engine):
    """Sequences stop when the policy draws STOP (or at the engine cap)."""

    def __init__(self, config: EngineConfig, global_seed: int):
        super().__init__(config)
        self.global_seed = global_seed
        self._cdf: np.ndarray | None = None
        self._logp: np.ndarray | None = None
        self._stop_index = -1

    def begin_step(self, version: int, params: PolicyParams | None = None) -> None:
        super().begin_step(version, params)
        if params is None:
            raise ContractViolation("policy-driven decode needs policy parameters")
        probs = softmax(params.logits)
        self._cdf = np.cumsum(probs)
        self._logp = np.log(probs)
        self._stop_index = params.stop_index

    def _records_tokens(self) -> bool:
        return True

    def _make_slot(self, sample: RolloutSample, segment: Segment) -> _Slot:
        stream = Stream(
            self.global_seed, LANE_POLICY_TOKENS, sample.instance_id, sample.sample_index
        )
        return _Slot(sample, segment, gen=stream.generator(sample.total_tokens))

    def _max_jump(self) -> int:
        return 1  # every token draw can end the sequence

    def _grow(self, k: int) -> list[tuple[RolloutSample, str]]:
        assert k == 1 and self._cdf is not None and self._logp is not None
        draws = np.array([slot.gen.random() for slot in self._slots])
        tokens = np.searchsorted(self._cdf, draws, side="right")
        tokens = np.minimum(tokens, self._stop_index)
        finished: list[tuple[RolloutSample, str]] = []
        for slot, token in zip(self._slots, tokens):
            tok = int(token)
            slot.segment.tokens.append(tok)
            slot.segment.behavior_logprobs.append(float(self._logp[tok]))
            slot.segment.token_count += 1
            if tok == self._stop_index:
                finished.append((slot.sample, STOP_TOKEN))
            elif slot.sample.total_tokens >= self.config.l_max:
                finished.append((slot.sample, MAX_LENGTH))
        return finished
