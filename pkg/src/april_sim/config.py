"""Run configuration: JSON round-trip, validation, and presets.

Validation happens before any simulation starts; a bad value raises
ConfigError naming the offending key (section.key) so CLI users get a usable
diagnostic instead of a traceback from deep inside a run.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .engine import EngineConfig
from .errors import ConfigError
from .policy import TrainConfig
from .scheduler import SchedulerConfig
from .workload import LengthDistribution

LENGTH_DRIVEN = "length_driven"
POLICY_DRIVEN = "policy_driven"


@dataclass(frozen=True)
class WorkloadConfig:
    distribution: str = "lognormal"
    parameters: dict = field(
        default_factory=lambda: {"mu_ln": 7.5, "sigma_ln": 1.0}
    )
    correlate_within_group: float = 0.7
    mode: str = LENGTH_DRIVEN

    def __post_init__(self) -> None:
        if self.mode not in (LENGTH_DRIVEN, POLICY_DRIVEN):
            raise ConfigError(f"workload.mode: unknown mode {self.mode!r}")
        if not (0.0 <= self.correlate_within_group <= 1.0):
            raise ConfigError(
                "workload.correlate_within_group: must lie in [0, 1], "
                f"got {self.correlate_within_group}"
            )

    def build_distribution(self, l_max: int) -> LengthDistribution:
        p = self.parameters
        try:
            if self.distribution == "constant":
                return LengthDistribution.constant(int(p["value"]), l_max)
            if self.distribution == "geometric":
                return LengthDistribution.geometric(float(p["p_stop"]), l_max)
            if self.distribution == "lognormal":
                return LengthDistribution.lognormal(
                    float(p["mu_ln"]), float(p["sigma_ln"]), l_max
                )
            if self.distribution == "pareto":
                return LengthDistribution.pareto(float(p["alpha"]), float(p["x_min"]), l_max)
            if self.distribution == "empirical":
                from .workload import load_histogram_csv

                return load_histogram_csv(str(p["path"]), l_max=l_max)
        except KeyError as exc:
            raise ConfigError(f"workload.parameters: missing {exc.args[0]!r}") from exc
        raise ConfigError(f"workload.distribution: unknown distribution {self.distribution!r}")


@dataclass(frozen=True)
class RunSection:
    steps: int = 200
    seed: int = 0
    output_dir: str = ""
    write_manifest: bool = False
    write_events: bool = False

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ConfigError(f"run.steps: must be >= 0, got {self.steps}")


@dataclass(frozen=True)
class RunConfig:
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    run: RunSection = field(default_factory=RunSection)

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, data: dict) -> "RunConfig":
        sections = {
            "workload": WorkloadConfig,
            "engine": EngineConfig,
            "scheduler": SchedulerConfig,
            "train": TrainConfig,
            "run": RunSection,
        }
        unknown = set(data) - set(sections)
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
        kwargs = {}
        for name, section_cls in sections.items():
            section = data.get(name, {})
            if not isinstance(section, dict):
                raise ConfigError(f"{name}: expected an object")
            allowed = set(section_cls.__dataclass_fields__)
            bad = set(section) - allowed
            if bad:
                raise ConfigError(f"{name}.{sorted(bad)[0]}: unknown key")
            try:
                kwargs[name] = section_cls(**section)
            except ConfigError as exc:
                msg = str(exc)
                raise ConfigError(msg if msg.startswith(name) else f"{name}: {msg}") from exc
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        with open(path, encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_json_dict(data)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Apply dotted-path overrides, e.g. {'scheduler.mode': 'april'}."""
        data = self.to_json_dict()
        for dotted, value in overrides.items():
            if value is None:
                continue
            section, _, key = dotted.partition(".")
            if not key or section not in data:
                raise ConfigError(f"{dotted}: not a known config key")
            data[section][key] = value
        return RunConfig.from_json_dict(data)


def default_config() -> RunConfig:
    """Desk-scale default: heavy-tail length-driven workload, N=32, G=8, N'=64."""
    return RunConfig()


def toy_policy_config() -> RunConfig:
    """Policy-driven toy task: 4-symbol vocabulary, small groups, 300 steps."""
    return RunConfig(
        workload=WorkloadConfig(mode=POLICY_DRIVEN),
        engine=EngineConfig(d0=0.05, d1=0.002, max_slots=128, l_max=64),
        scheduler=SchedulerConfig(
            rollout_batch_size=8,
            samples_per_prompt=8,
            over_sampling_batch_size=16,
        ),
        train=TrainConfig(vocab_size=4, target_token=0),
        run=RunSection(steps=300),
    )
