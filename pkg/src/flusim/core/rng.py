"""
Deterministic random streams.

Every consumer of randomness gets its own numpy Generator derived from the
run seed, a stable tag and (for the daily loop) the day index. Draws for a
day are materialized as arrays indexed by agent id, so an agent sees the same
uniform for the same purpose on the same day in any scenario that shares the
seed. That keeps paired-seed comparisons between control scenarios
meaningful: a strategy changes outcomes, not the random numbers behind them.

Draw order inside a day is fixed: movement, contact, infection, state,
control.
"""

import zlib
from collections.abc import Iterator

import numpy as np

# Iterator of uniforms in [0, 1)
Draws = Iterator[float]

STREAM_TAGS: tuple[str, ...] = (
    "population",
    "seeding",
    "movement",
    "contact",
    "infection",
    "state",
    "control",
)


def _tag_id(tag: str) -> int:
    # crc32, never hash(): str hashing is salted per process
    return zlib.crc32(tag.encode("utf-8")) & 0xFFFFFFFF


class RandomStreams:
    """Factory of independent, reproducible generators for one run."""

    def __init__(self, seed: int) -> None:
        self.seed = int(seed)

    def generator(self, tag: str, day: int | None = None) -> np.random.Generator:
        """Return the generator for ``tag`` (and ``day``, when given).

        Calling twice with the same arguments yields generators producing
        identical sequences.
        """
        if tag not in STREAM_TAGS:
            raise KeyError(f"Unknown random stream: {tag}. Known: {list(STREAM_TAGS)}")
        entropy = [self.seed & 0xFFFFFFFF, (self.seed >> 32) & 0xFFFFFFFF, _tag_id(tag)]
        if day is not None:
            entropy.append(int(day))
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def uniforms(self, tag: str, day: int, shape: int | tuple[int, ...]) -> np.ndarray:
        """Uniforms in [0, 1) for one phase of one day."""
        return self.generator(tag, day).random(shape)


def uniform_stream(rng: np.random.Generator) -> Draws:
    """Endless iterator of uniforms pulled from ``rng``."""
    while True:
        yield float(rng.random())


def row_draws(row: np.ndarray) -> Draws:
    """Iterator over a pre-drawn row of uniforms.

    Raises:
        StopIteration: when a consumer asks for more draws than the row holds.
    """
    return iter(row.tolist())
