"""Exact uniform samplers on the unit l1, l2 and l-infinity balls.

Randomness comes from :class:`RngStream`, a (seed, stream index) pair that is
mapped to an independent PCG64 generator through numpy's ``SeedSequence``
spawn keys. The same pair gives the same draws on every platform, and
distinct pairs give statistically independent streams, which is what makes
chunked and parallel experiment runs reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

#: Points handed to a sink arrive in blocks of at most this many rows.
BLOCK_SIZE = 1 << 16


class BallKind(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @classmethod
    def parse(cls, value: "str | BallKind") -> "BallKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown ball kind {value!r}; expected l1, l2 or linf") from None


@dataclass(frozen=True)
class RngStream:
    """A reproducible random substream.

    ``parent`` holds the indices of enclosing streams, so
    ``RngStream(s).substream(3).substream(7)`` is keyed by ``(0, 3, 7)``.
    """

    seed: int
    stream_index: int = 0
    parent: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    @property
    def key(self) -> tuple[int, ...]:
        return self.parent + (self.stream_index,)

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.seed, index, self.key)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(seq))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def sample_ball_batch(kind, n: int, size: int, rng) -> np.ndarray:
    """Draw ``size`` points uniformly from the unit ball of the given kind.

    Returns an array of shape ``(size, n)``.

    * l2: Gaussian direction scaled by U**(1/n).
    * l1: signed exponential magnitudes divided by the sum of those
      magnitudes plus one extra exponential (a Dirichlet(1, ..., 1) draw).
    * linf: independent U(-1, 1) coordinates.
    """
    kind = BallKind.parse(kind)
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if size < 0:
        raise ValueError("size must be nonnegative")
    gen = _as_generator(rng)

    if kind is BallKind.LINF:
        return 2.0 * gen.random((size, n)) - 1.0

    if kind is BallKind.L2:
        g = gen.standard_normal((size, n))
        radius = gen.random(size) ** (1.0 / n)
        norms = np.sqrt(np.einsum("ij,ij->i", g, g))
        return g * (radius / norms)[:, None]

    e = gen.standard_exponential((size, n + 1))
    signs = np.where(gen.random((size, n)) < 0.5, -1.0, 1.0)
    return signs * e[:, :n] / e.sum(axis=1, keepdims=True)


def sample_ball(kind, n: int, rng) -> np.ndarray:
    """One uniform draw from the unit ball, as a length-``n`` vector."""
    return sample_ball_batch(kind, n, 1, rng)[0]


def sample_multisample(
    kind,
    n: int,
    count: int,
    rng,
    consumer: Callable[[np.ndarray], None],
    block_size: int = BLOCK_SIZE,
) -> None:
    """Stream ``count`` uniform draws to ``consumer`` in blocks, keeping none of them.

    The consumer is called with arrays of shape ``(k, n)``, k <= block_size,
    whose rows concatenate to the full multisample. For a fixed stream and
    block size the sequence is deterministic.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    gen = _as_generator(rng)
    remaining = count
    while remaining > 0:
        k = min(block_size, remaining)
        consumer(sample_ball_batch(kind, n, k, gen))
        remaining -= k


def in_ball(kind, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Boolean mask of rows lying in the closed unit ball (up to ``tol``)."""
    kind = BallKind.parse(kind)
    points = np.atleast_2d(points)
    if kind is BallKind.L2:
        return np.einsum("ij,ij->i", points, points) <= 1.0 + tol
    if kind is BallKind.L1:
        return np.abs(points).sum(axis=1) <= 1.0 + tol
    return np.abs(points).max(axis=1) <= 1.0 + tol
