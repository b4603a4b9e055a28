"""Prompt stream and response-length distributions.

The default workload is a truncated lognormal calibrated so that more than
half of the response lengths fall below 4,096 tokens while the p99 pushes past
12,000 at a 16,384-token cap: a pronounced long tail, which is what makes
synchronous rollout batches stall on their slowest members. An empirical
variant loads measured histograms so real traces can be substituted.

Lengths are drawn through a Gaussian copula so that all samples of one
instance can share a common component: ``correlate_within_group`` blends a
per-instance normal with per-sample noise, leaving the marginal distribution
untouched while making within-group lengths more homogeneous than the batch
at large.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError
from .rng import LANE_HISTOGRAM, LANE_INSTANCE_SHARED, LANE_SAMPLE_LENGTH, Stream

VARIANTS = ("constant", "geometric", "lognormal", "pareto", "empirical")


@dataclass(frozen=True)
class LengthDistribution:
    """Tagged union over supported response-length families.

    All variants are truncated by clipping into [1, l_max]; the point mass this
    puts at l_max models sequences cut off at the generation cap.
    """

    variant: str
    l_max: int
    value: int = 0
    p_stop: float = 0.0
    mu_ln: float = 0.0
    sigma_ln: float = 0.0
    alpha: float = 0.0
    x_min: float = 1.0
    bin_uppers: tuple[int, ...] = ()
    masses: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown length distribution variant {self.variant!r}")
        if self.l_max < 1:
            raise ConfigError(f"l_max must be >= 1, got {self.l_max}")
        if self.variant == "constant" and self.value < 1:
            raise ConfigError(f"constant length must be >= 1, got {self.value}")
        if self.variant == "geometric" and not (0.0 < self.p_stop <= 1.0):
            raise ConfigError(f"p_stop must lie in (0, 1], got {self.p_stop}")
        if self.variant == "lognormal":
            if not (math.isfinite(self.mu_ln) and math.isfinite(self.sigma_ln)):
                raise ConfigError("lognormal parameters must be finite")
            if self.sigma_ln <= 0:
                raise ConfigError(f"sigma_ln must be > 0, got {self.sigma_ln}")
        if self.variant == "pareto":
            if self.alpha <= 0 or not math.isfinite(self.alpha):
                raise ConfigError(f"alpha must be > 0, got {self.alpha}")
            if self.x_min < 1:
                raise ConfigError(f"x_min must be >= 1, got {self.x_min}")
        if self.variant == "empirical":
            if not self.bin_uppers:
                raise ConfigError("empirical distribution needs at least one bin")
            if len(self.bin_uppers) != len(self.masses):
                raise ConfigError("bin_uppers and masses must have equal length")
            if any(b <= a for a, b in zip((0,) + self.bin_uppers, self.bin_uppers)):
                raise ConfigError("bin_uppers must be strictly increasing and >= 1")
            if any(m < 0 for m in self.masses):
                raise ConfigError("masses must be non-negative")
            if abs(sum(self.masses) - 1.0) > 1e-9:
                raise ConfigError("masses must sum to 1 (within 1e-9); normalize on load")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value: int, l_max: int) -> "LengthDistribution":
        return cls(variant="constant", l_max=l_max, value=value)

    @classmethod
    def geometric(cls, p_stop: float, l_max: int) -> "LengthDistribution":
        return cls(variant="geometric", l_max=l_max, p_stop=p_stop)

    @classmethod
    def lognormal(cls, mu_ln: float, sigma_ln: float, l_max: int) -> "LengthDistribution":
        return cls(variant="lognormal", l_max=l_max, mu_ln=mu_ln, sigma_ln=sigma_ln)

    @classmethod
    def pareto(cls, alpha: float, x_min: float, l_max: int) -> "LengthDistribution":
        return cls(variant="pareto", l_max=l_max, alpha=alpha, x_min=x_min)

    @classmethod
    def empirical(
        cls, bins: list[tuple[int, float]], l_max: int | None = None
    ) -> "LengthDistribution":
        """Build from (bin_upper, mass) pairs; masses are normalized here."""
        if not bins:
            raise ConfigError("empirical distribution needs at least one bin")
        uppers = tuple(int(b) for b, _ in bins)
        raw = np.array([m for _, m in bins], dtype=float)
        total = float(raw.sum())
        if total <= 0 or not math.isfinite(total):
            raise ConfigError("empirical masses must have a positive finite sum")
        masses = tuple(float(m) for m in raw / total)
        return cls(
            variant="empirical",
            l_max=int(l_max if l_max is not None else uppers[-1]),
            bin_uppers=uppers,
            masses=masses,
        )

    @classmethod
    def default_heavy_tail(cls, l_max: int = 16384) -> "LengthDistribution":
        """Lognormal(7.5, 1.0): median ~1800 tokens, p99 beyond 12k at the 16384 cap."""
        return cls.lognormal(mu_ln=7.5, sigma_ln=1.0, l_max=l_max)

    # -- sampling math -----------------------------------------------------

    def quantile(self, u):
        """Inverse CDF, truncated by clipping into [1, l_max].

        Accepts a scalar or an ndarray of uniforms in (0, 1); returns int or
        an int64 array of the same shape.
        """
        scalar = np.isscalar(u)
        uu = np.clip(np.asarray(u, dtype=float), 2.0**-53, 1.0 - 2.0**-53)
        if self.variant == "constant":
            raw = np.full_like(uu, float(self.value))
        elif self.variant == "geometric":
            if self.p_stop >= 1.0:
                raw = np.ones_like(uu)
            else:
                raw = np.ceil(np.log1p(-uu) / math.log1p(-self.p_stop))
        elif self.variant == "lognormal":
            raw = np.floor(np.exp(self.mu_ln + self.sigma_ln * ndtri(uu)) + 0.5)
        elif self.variant == "pareto":
            raw = np.floor(self.x_min * np.power(1.0 - uu, -1.0 / self.alpha) + 0.5)
        else:
            raw = self._empirical_quantile(uu)
        out = np.clip(raw, 1, self.l_max).astype(np.int64)
        return int(out[()]) if scalar else out

    def _empirical_quantile(self, uu: np.ndarray) -> np.ndarray:
        cum = np.cumsum(self.masses)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, uu, side="left")
        idx = np.minimum(idx, len(cum) - 1)
        uppers = np.asarray(self.bin_uppers, dtype=np.int64)
        lowers = np.concatenate(([1], uppers[:-1] + 1))
        prev = np.concatenate(([0.0], cum[:-1]))
        mass = np.asarray(self.masses, dtype=float)[idx]
        frac = np.where(mass > 0, (uu - prev[idx]) / np.where(mass > 0, mass, 1.0), 0.0)
        width = uppers[idx] - lowers[idx] + 1
        offset = np.minimum(np.floor(frac * width), width - 1)
        return lowers[idx] + offset

    def mass_below(self, x: float) -> float:
        """P(length <= x) for the untruncated continuous families (CDF oracle)."""
        if self.variant == "constant":
            return 1.0 if x >= self.value else 0.0
        if self.variant == "geometric":
            return 1.0 - (1.0 - self.p_stop) ** math.floor(x)
        if self.variant == "lognormal":
            return float(ndtr((math.log(x) - self.mu_ln) / self.sigma_ln)) if x > 0 else 0.0
        if self.variant == "pareto":
            return max(0.0, 1.0 - (self.x_min / x) ** self.alpha) if x > 0 else 0.0
        cum = 0.0
        for upper, mass, lower in zip(
            self.bin_uppers, self.masses, (0,) + self.bin_uppers
        ):
            if x >= upper:
                cum += mass
            elif x > lower:
                cum += mass * (x - lower) / (upper - lower)
        return cum


@dataclass(frozen=True)
class PromptInstance:
    instance_id: int
    dataset_tag: str
    group_size: int


@dataclass
class InstanceSource:
    """Infinite stream of prompt instances with monotonically increasing ids."""

    dataset_tag: str = "synthetic"
    group_size: int = 8
    _next_id: int = field(default=0, init=False)

    def next_instance(self) -> PromptInstance:
        inst = PromptInstance(self._next_id, self.dataset_tag, self.group_size)
        self._next_id += 1
        return inst


def sample_length(dist: LengthDistribution, stream: Stream, draw_index: int = 0) -> int:
    """One reproducible length draw from the given stream position."""
    return dist.quantile(stream.uniform(draw_index))


@dataclass(frozen=True)
class LengthSampler:
    """Per-sample target lengths with optional within-instance correlation.

    correlate_within_group is the weight of a per-instance shared normal in a
    Gaussian copula; the marginal stays exactly `dist` for any setting.
    """

    dist: LengthDistribution
    correlate_within_group: float
    global_seed: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.correlate_within_group <= 1.0):
            raise ConfigError(
                f"correlate_within_group must lie in [0, 1], got {self.correlate_within_group}"
            )

    def target_length(self, instance_id: int, sample_index: int) -> int:
        rho = self.correlate_within_group
        z = Stream(self.global_seed, LANE_SAMPLE_LENGTH, instance_id, sample_index).normal(0)
        if rho > 0.0:
            shared = Stream(self.global_seed, LANE_INSTANCE_SHARED, instance_id, 0).normal(0)
            z = rho * shared + math.sqrt(1.0 - rho * rho) * z
        return self.dist.quantile(float(ndtr(z)))


def histogram(
    dist: LengthDistribution,
    n_draws: int,
    seed: int,
    bins: list[int] | None = None,
) -> list[tuple[int, int]]:
    """Draw n_draws lengths and bucket them; returns (bin_upper, count) pairs.

    Bins default to the distribution's own bins for the empirical variant and
    to 64 equal-width buckets over [1, l_max] otherwise.
    """
    if n_draws < 1:
        raise ConfigError(f"n_draws must be >= 1, got {n_draws}")
    if bins is None:
        if dist.variant == "empirical":
            bins = list(dist.bin_uppers)
        else:
            n_bins = min(64, dist.l_max)
            edges = np.linspace(1, dist.l_max, n_bins + 1)
            bins = sorted({int(e) for e in np.floor(edges[1:])})
    if bins[-1] < dist.l_max:
        bins = bins + [dist.l_max]
    lengths = dist.quantile(Stream(seed, LANE_HISTOGRAM, 0, 0).uniforms(n_draws))
    uppers = np.asarray(bins, dtype=np.int64)
    idx = np.searchsorted(uppers, lengths, side="left")
    counts = np.bincount(idx, minlength=len(uppers))
    return [(int(u), int(c)) for u, c in zip(uppers, counts)]


def load_histogram_csv(path: str, l_max: int | None = None) -> LengthDistribution:
    """Load an empirical distribution from a CSV with `bin_upper,mass` columns."""
    rows: list[tuple[int, float]] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"bin_upper", "mass"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: expected columns bin_upper,mass")
        for row in reader:
            rows.append((int(row["bin_upper"]), float(row["mass"])))
    if not rows:
        raise ConfigError(f"{path}: no histogram rows")
    rows.sort(key=lambda r: r[0])
    return LengthDistribution.empirical(rows, l_max=l_max)


def save_histogram_csv(path: str, hist: list[tuple[int, int]]) -> None:
    """Write (bin_upper, count) pairs plus normalized masses, loadable back."""
    total = sum(c for _, c in hist)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["bin_upper", "count", "mass"])
        for upper, count in hist:
            writer.writerow([upper, count, repr(count / total if total else 0.0)])
