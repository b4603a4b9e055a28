"""Rollout samples and instance groups.

A RolloutSample is the unit the scheduler pauses and resumes: its generated
tokens are recorded as segments, one per policy version that contributed to
it. A Group is a prompt instance together with its fixed set of samples; a
group is the unit of completion and of training delivery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ContractViolation
from .workload import PromptInstance

PENDING = "pending"
ACTIVE = "active"
PAUSED = "paused"
COMPLETED = "completed"

# finish reasons
STOP_TOKEN = "stop_token"
TARGET_LENGTH = "target_length"
MAX_LENGTH = "max_length"


@dataclass
class Segment:
    """Tokens generated under one policy version."""

    version: int
    token_count: int = 0
    tokens: list[int] | None = None
    behavior_logprobs: list[float] | None = None


@dataclass
class RolloutSample:
    instance_id: int
    sample_index: int
    status: str = PENDING
    segments: list[Segment] = field(default_factory=list)
    target_length: int | None = None
    start_version: int | None = None
    complete_version: int | None = None
    finish_reason: str | None = None
    # (step, iteration, instance_id, sample_index) at the moment of pausing;
    # orders the continuation buffer's FIFO
    paused_at: tuple[int, int, int, int] | None = None

    @property
    def total_tokens(self) -> int:
        return sum(seg.token_count for seg in self.segments)

    @property
    def staleness(self) -> int:
        if self.complete_version is None or self.start_version is None:
            raise ContractViolation("staleness is defined only for completed samples")
        return self.complete_version - self.start_version

    @property
    def sample_id(self) -> str:
        return f"{self.instance_id}:{self.sample_index}"

    def token_ids(self) -> list[int]:
        """All drawn symbols in order (policy-driven samples only)."""
        out: list[int] = []
        for seg in self.segments:
            if seg.tokens is None:
                raise ContractViolation("sample carries no token ids (length-driven mode)")
            out.extend(seg.tokens)
        return out

    def behavior_logprob_trace(self) -> list[float]:
        out: list[float] = []
        for seg in self.segments:
            if seg.behavior_logprobs is None:
                raise ContractViolation("sample carries no behavior log-probs")
            out.extend(seg.behavior_logprobs)
        return out

    def open_segment(self, version: int, with_tokens: bool) -> Segment:
        if self.segments and self.segments[-1].version >= version:
            raise ContractViolation(
                f"segment versions must strictly increase "
                f"({self.segments[-1].version} -> {version})"
            )
        seg = Segment(
            version=version,
            tokens=[] if with_tokens else None,
            behavior_logprobs=[] if with_tokens else None,
        )
        self.segments.append(seg)
        if self.start_version is None:
            self.start_version = version
        return seg

    def mark_completed(self, version: int, reason: str) -> None:
        self.status = COMPLETED
        self.complete_version = version
        self.finish_reason = reason


@dataclass
class Group:
    """A prompt instance plus its samples; delivered to training exactly once."""

    instance: PromptInstance
    samples: list[RolloutSample]
    completed_count: int = 0
    # (engine iteration at completion, instance_id); orders delivery selection
    completion_seq: tuple[int, int] | None = None

    @property
    def instance_id(self) -> int:
        return self.instance.instance_id

    @property
    def complete(self) -> bool:
        return self.completed_count == len(self.samples)

    def note_completion(self, iteration_index: int) -> None:
        self.completed_count += 1
        if self.complete:
            self.completion_seq = (iteration_index, self.instance_id)

    def total_tokens(self) -> int:
        return sum(s.total_tokens for s in self.samples)
