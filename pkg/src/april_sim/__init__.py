"""Desk-scale simulator of APRIL partial-rollout scheduling for RL rollouts.

The library models the rollout phase of synchronous RL training as a
discrete-event continuous-batching engine fed by a heavy-tailed
response-length workload, and implements two schedulers on top of it: the
synchronous baseline (wait for every sequence) and APRIL (over-provision,
stop at N complete instance groups, buffer interrupted sequences, resume them
first next step). A toy softmax policy with a group-relative REINFORCE update
makes the resulting mixed-policy batches trainable, so throughput, off-policy
fraction, staleness, and length-variance effects can all be measured.
"""

from .config import RunConfig, default_config, toy_policy_config
from .engine import Engine, EngineConfig, Event, LengthDrivenEngine, PolicyDrivenEngine
from .errors import ConfigError, ContractViolation
from .metrics import RunSummary, StepReport, summarize_run
from .policy import PolicyParams, TrainConfig, group_advantages, reinforce_update, reward
from .rollouts import Group, RolloutSample, Segment
from .scheduler import ContinuationBuffer, Scheduler, SchedulerConfig, check_trigger
from .simulate import Simulation, build_simulation, run_simulation
from .workload import (
    InstanceSource,
    LengthDistribution,
    LengthSampler,
    PromptInstance,
    histogram,
    load_histogram_csv,
    sample_length,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContinuationBuffer",
    "ContractViolation",
    "Engine",
    "EngineConfig",
    "Event",
    "Group",
    "InstanceSource",
    "LengthDistribution",
    "LengthDrivenEngine",
    "LengthSampler",
    "PolicyDrivenEngine",
    "PolicyParams",
    "PromptInstance",
    "RolloutSample",
    "RunConfig",
    "RunSummary",
    "Scheduler",
    "SchedulerConfig",
    "Segment",
    "Simulation",
    "StepReport",
    "TrainConfig",
    "build_simulation",
    "check_trigger",
    "default_config",
    "group_advantages",
    "histogram",
    "load_histogram_csv",
    "reinforce_update",
    "reward",
    "run_simulation",
    "sample_length",
    "summarize_run",
    "toy_policy_config",
]
