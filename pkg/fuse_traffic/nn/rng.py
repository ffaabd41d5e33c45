from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from fuse_traffic.nn.tensor import Matrix

ALGORITHM = "PCG64"


@dataclass(frozen=True)
class RngState:
    """
    Сид + фиксированный переносимый PRNG (PCG64).

    Потоки для модулей расщепляются по имени через SeedSequence: один и тот
    же (seed, name) даёт одну и ту же последовательность на любой платформе.
    """

    seed: int
    algorithm: str = ALGORITHM

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    def stream(self, name: str) -> np.random.Generator:
        key = zlib.crc32(name.encode("utf-8"))
        seq = np.random.SeedSequence(self.seed, spawn_key=(key,))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, name: str) -> "RngState":
        key = zlib.crc32(name.encode("utf-8"))
        seed = int(np.random.SeedSequence(self.seed, spawn_key=(key,)).generate_state(1, np.uint64)[0])
        return RngState(seed=seed)


def xavier_init(rows: int, cols: int, rng: np.random.Generator) -> Matrix:
    """Равномерная инициализация в ±sqrt(6 / (rows + cols))"""
    if rows < 1 or cols < 1:
        raise ValueError(f"xavier_init requires rows, cols >= 1, got {rows}x{cols}")
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))
