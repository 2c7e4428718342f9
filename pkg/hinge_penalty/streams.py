import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Set

import numpy as np

from .errors import StreamReuseError

logger = logging.getLogger('hinge_penalty.streams')

_MASK32 = 0xFFFFFFFF
_MASK64 = 0xFFFFFFFFFFFFFFFF


class StreamRole(IntEnum):
    OBJECTIVE = 1
    CONSTRAINT = 2
    INNER = 3
    BLOCK = 4
    INIT = 5
    OUTPUT = 6
    GENERATOR = 7


@dataclass(frozen=True)
class StreamKey:
    """
    Counter-based stream identifier.

    The Philox key carries (seed, role, index); the two high counter words carry
    (draw, iteration), so the low 128 counter bits consumed while sampling never
    collide with a neighbouring key.
    """
    seed: int
    role: int
    index: int
    iteration: int
    draw: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, ((int(self.role) & _MASK32) << 32) | (self.index & _MASK32)],
                       dtype=np.uint64)
        counter = np.array([0, 0, self.draw & _MASK64, self.iteration & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def __repr__(self) -> str:
        return (f"StreamKey(seed={self.seed}, role={StreamRole(self.role).name}, index={self.index}, "
                f"iteration={self.iteration}, draw={self.draw})")


class StreamFamily:
    """All streams of one solver run. With audit enabled every key may be drawn once."""

    def __init__(self, seed: int, audit: bool = False):
        self.seed = int(seed)
        self.audit = audit
        self.consumed: Set[StreamKey] = set()
        self.draw_count = 0

    def key(self, role: StreamRole, index: int, iteration: int, draw: int = 0) -> StreamKey:
        return StreamKey(self.seed, int(role), int(index), int(iteration), int(draw))

    def draw(self, role: StreamRole, index: int, iteration: int, draw: int = 0) -> StreamKey:
        key = self.key(role, index, iteration, draw)
        if self.audit:
            if key in self.consumed:
                raise StreamReuseError(f"Stream key drawn twice: {key!r}", key=key)
            self.consumed.add(key)
        self.draw_count += 1
        return key

    def sample_block(self, role_index: int, iteration: int, population: int, size: int) -> np.ndarray:
        """Sorted mini-batch of block indices; the full population when size equals it."""
        if size >= population:
            return np.arange(population)
        key = self.draw(StreamRole.BLOCK, role_index, iteration)
        chosen = key.generator().choice(population, size=size, replace=False)
        return np.sort(chosen)


def generator_for(seed: int, role: StreamRole = StreamRole.GENERATOR, index: int = 0) -> np.random.Generator:
    return StreamKey(int(seed), int(role), index, 0).generator()
