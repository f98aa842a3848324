"""Seed-stream derivation on top of the Philox4x64-10 counter-based generator.

Every random draw in the package comes from ``stream(seed, purpose, index)``.
The Philox key is ``(seed, purpose << 32 | index)``, so a batch or an
initialization is a pure function of its coordinates and resuming a run
only needs the step counters.
"""

from __future__ import annotations

import enum

import numpy as np

RNG_ALGORITHM = "philox4x64-10"
RNG_SCHEME_VERSION = "slimrnn-streams-v1"

_MASK64 = (1 << 64) - 1


class Purpose(enum.IntEnum):
    INIT = 1
    TRAIN_BATCH = 2
    VALIDATION = 3
    GRADCHECK = 4
    SHUFFLE = 5
    TRIAL = 6


def stream(seed: int, purpose: Purpose, index: int = 0) -> np.random.Generator:
    if not 0 <= index < (1 << 32):
        raise ValueError(f"stream index out of range: {index}")
    key = np.array([seed & _MASK64, (int(purpose) << 32) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def describe() -> str:
    return f"{RNG_ALGORITHM}/{RNG_SCHEME_VERSION}"
