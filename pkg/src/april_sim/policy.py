"""Toy autoregressive softmax policy and its REINFORCE update.

The policy is a context-free softmax over a small vocabulary plus a STOP
symbol, so sequence lengths are genuinely policy-dependent (the STOP
probability sets the length distribution) while score-function gradients stay
closed-form and testable against finite differences.

Updates are applied to the delivered batch as-is: log-probabilities of carried
tokens are evaluated under the current parameters with no importance
correction, which is exactly what makes resumed rollouts mildly off-policy.
A clipped-ratio update is available as an optional variant for ablation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ContractViolation
from .rollouts import STOP_TOKEN, RolloutSample

MEAN_BASELINE = "mean_baseline"
MEAN_STD_BASELINE = "mean_std_baseline"
REINFORCE = "reinforce"
CLIPPED_RATIO = "clipped_ratio"


@dataclass(frozen=True)
class PolicyParams:
    """Logits over vocabulary tokens 0..V-1 plus STOP at index V."""

    logits: np.ndarray
    version: int = 0

    def __post_init__(self) -> None:
        z = np.asarray(self.logits, dtype=float)
        if z.ndim != 1 or z.size < 2:
            raise ConfigError("logits must be a vector over >= 1 token plus STOP")
        if not np.all(np.isfinite(z)):
            raise ConfigError("logits must be finite")
        object.__setattr__(self, "logits", z)

    @property
    def vocab_size(self) -> int:
        return self.logits.size - 1

    @property
    def stop_index(self) -> int:
        return self.logits.size - 1

    @classmethod
    def uniform(cls, vocab_size: int) -> "PolicyParams":
        if vocab_size < 1:
            raise ConfigError(f"vocab_size must be >= 1, got {vocab_size}")
        return cls(logits=np.zeros(vocab_size + 1), version=0)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    advantage_mode: str = MEAN_BASELINE
    std_eps: float = 1e-6
    c0: float = 2.0  # fixed training overhead, seconds
    c1: float = 1e-4  # training seconds per batch token
    vocab_size: int = 4
    target_token: int = 0
    update_rule: str = REINFORCE
    eps_clip: float = 0.2
    eps_clip_high: float = 0.28

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.std_eps <= 0:
            raise ConfigError(f"std_eps must be > 0, got {self.std_eps}")
        if self.advantage_mode not in (MEAN_BASELINE, MEAN_STD_BASELINE):
            raise ConfigError(f"unknown advantage_mode {self.advantage_mode!r}")
        if self.update_rule not in (REINFORCE, CLIPPED_RATIO):
            raise ConfigError(f"unknown update_rule {self.update_rule!r}")
        if not (0 <= self.target_token < self.vocab_size):
            raise ConfigError(
                f"target_token {self.target_token} outside vocabulary of {self.vocab_size}"
            )


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def token_from_uniform(probs_cumsum: np.ndarray, u: float) -> int:
    return int(np.searchsorted(probs_cumsum, u, side="right"))


def sample_token(params: PolicyParams, stream, draw_index: int = 0) -> int:
    """Draw one symbol (possibly STOP) at the given stream position."""
    cdf = np.cumsum(softmax(params.logits))
    return token_from_uniform(cdf, stream.uniform(draw_index))


def reward(sample: RolloutSample, target_token: int) -> float:
    """Fraction of non-STOP tokens equal to the target; empty sequence scores 0."""
    if sample.complete_version is None:
        raise ContractViolation(f"reward of incomplete sample {sample.sample_id}")
    tokens = sample.token_ids()
    if sample.finish_reason == STOP_TOKEN:
        tokens = tokens[:-1]  # drop the STOP draw itself
    if not tokens:
        return 0.0
    return sum(1 for t in tokens if t == target_token) / len(tokens)


def group_advantages(rewards, mode: str = MEAN_BASELINE, std_eps: float = 1e-6) -> np.ndarray:
    r = np.asarray(rewards, dtype=float)
    if r.size < 1:
        raise ConfigError("advantages need at least one reward")
    centered = r - r.mean()
    if mode == MEAN_BASELINE:
        return centered
    if mode == MEAN_STD_BASELINE:
        return centered / (r.std() + std_eps)
    raise ConfigError(f"unknown advantage_mode {mode!r}")


def sequence_log_prob(logits: np.ndarray, tokens: list[int]) -> float:
    """log pi(sequence) under a context-free softmax; used by gradient oracles."""
    z = np.asarray(logits, dtype=float)
    logp = z - (np.max(z) + np.log(np.exp(z - np.max(z)).sum()))
    return float(sum(logp[t] for t in tokens))


def _collect_tokens(sample: RolloutSample) -> list[int]:
    # The STOP draw is part of the scored sequence when the sample stopped
    # naturally; length-capped sequences never drew STOP.
    return sample.token_ids()


def score_gradient(
    params: PolicyParams, samples: list[RolloutSample], advantages
) -> np.ndarray:
    """d/dz of sum_i A_i log pi_z(sequence_i), evaluated at the current z."""
    probs = softmax(params.logits)
    grad = np.zeros_like(params.logits)
    for sample, adv in zip(samples, np.asarray(advantages, dtype=float)):
        tokens = _collect_tokens(sample)
        counts = np.bincount(tokens, minlength=params.logits.size)
        grad += adv * (counts - len(tokens) * probs)
    return grad


def clipped_ratio_gradient(
    params: PolicyParams,
    samples: list[RolloutSample],
    advantages,
    eps_clip: float,
    eps_clip_high: float,
) -> np.ndarray:
    """Gradient of the token-level clipped surrogate sum_t min(r A, clip(r) A)."""
    probs = softmax(params.logits)
    logp_now = np.log(probs)
    grad = np.zeros_like(params.logits)
    lo, hi = 1.0 - eps_clip, 1.0 + eps_clip_high
    for sample, adv in zip(samples, np.asarray(advantages, dtype=float)):
        tokens = _collect_tokens(sample)
        behavior = sample.behavior_logprob_trace()
        for tok, logp_beh in zip(tokens, behavior):
            ratio = float(np.exp(logp_now[tok] - logp_beh))
            clipped = (adv > 0 and ratio > hi) or (adv < 0 and ratio < lo)
            if clipped:
                continue  # the clip branch is constant in z
            onehot = np.zeros_like(grad)
            onehot[tok] = 1.0
            grad += adv * ratio * (onehot - probs)
    return grad


def reinforce_update(
    params: PolicyParams,
    samples: list[RolloutSample],
    advantages,
    config: TrainConfig,
) -> PolicyParams:
    """One policy update over a delivered batch; returns new versioned params."""
    for s in samples:
        if s.complete_version is None:
            raise ContractViolation(f"cannot train on incomplete sample {s.sample_id}")
    if config.update_rule == CLIPPED_RATIO:
        grad = clipped_ratio_gradient(
            params, samples, advantages, config.eps_clip, config.eps_clip_high
        )
    else:
        grad = score_gradient(params, samples, advantages)
    return PolicyParams(
        logits=params.logits + config.learning_rate * grad,
        version=params.version + 1,
    )


def train_wall_time(total_tokens: int, config: TrainConfig) -> float:
    """Simulated training-phase duration: affine in the batch token count."""
    return config.c0 + config.c1 * total_tokens
