"""Counter-based random streams.

Every random draw in a simulation is addressable by
(global_seed, lane, instance_id, sample_index, draw_index), so the value of a
draw never depends on the order in which the scheduler happens to request it.
A paused rollout that resumes three steps later continues from exactly the
position where it stopped, and paired runs (baseline vs. april) see identical
draws for identical sample identities.

Positions map onto Philox output words: draw t lives at word index t of the
keyed Philox stream (block t >> 2, word t & 3). A generator opened at
position p therefore yields draws p, p+1, p+2, ... on successive calls,
matching positioned single-draw access exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

# Lanes keep independent uses of the same (instance, sample) pair apart.
LANE_SAMPLE_LENGTH = 0
LANE_INSTANCE_SHARED = 1
LANE_POLICY_TOKENS = 2
LANE_HISTOGRAM = 3

_TINY = 2.0**-53


def philox_key(global_seed: int, lane: int, instance_id: int, sample_index: int) -> int:
    """Derive a 128-bit Philox key; blake2b keeps it stable across platforms."""
    h = hashlib.blake2b(digest_size=16)
    for part in (global_seed, lane, instance_id, sample_index):
        h.update(int(part).to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


def _generator(key: int, position: int) -> np.random.Generator:
    bg = np.random.Philox(key=key, counter=[position >> 2, 0, 0, 0])
    gen = np.random.Generator(bg)
    for _ in range(position & 3):
        gen.random()
    return gen


@dataclass(frozen=True)
class Stream:
    """One addressable random stream."""

    global_seed: int
    lane: int
    instance_id: int
    sample_index: int = 0

    def generator(self, position: int = 0) -> np.random.Generator:
        """Sequential generator starting at ``position``."""
        return _generator(self._key(), position)

    def uniform(self, draw_index: int = 0) -> float:
        """Uniform in (0, 1), clamped away from the endpoints."""
        u = self.generator(draw_index).random()
        return min(max(u, _TINY), 1.0 - _TINY)

    def uniforms(self, n: int, start: int = 0) -> np.ndarray:
        u = self.generator(start).random(n)
        return np.clip(u, _TINY, 1.0 - _TINY)

    def normal(self, draw_index: int = 0) -> float:
        # Inverse-CDF keeps the one-word-per-draw positioning property;
        # ziggurat sampling would consume a variable number of words.
        return float(ndtri(self.uniform(draw_index)))

    def _key(self) -> int:
        return philox_key(self.global_seed, self.lane, self.instance_id, self.sample_index)
