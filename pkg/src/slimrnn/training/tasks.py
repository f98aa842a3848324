"""Synthetic sequence tasks that need long-range memory."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .. import rng
from ..errors import ContractViolation


class TaskKind(str, enum.Enum):
    ADDING = "adding"
    COPY = "copy"
    CHAR = "char"


@dataclass(frozen=True)
class TaskSpec:
    kind: TaskKind = TaskKind.ADDING
    seq_len: int = 30
    batch_size: int = 32
    delay: int = 1               # copy memory: number of symbols to recall
    alphabet_size: int = 4       # copy memory: symbol alphabet
    text: bytes | None = None    # char next-step: training text
    seed: int = 0

    def validate(self) -> "TaskSpec":
        if self.seq_len < 2:
            raise ContractViolation(f"sequence length must be >= 2, got {self.seq_len}")
        if self.batch_size < 1:
            raise ContractViolation(f"batch size must be >= 1, got {self.batch_size}")
        if self.kind is TaskKind.COPY:
            if self.seq_len <= self.delay + 20:
                raise ContractViolation(
                    f"copy memory needs T > K + 20, got T={self.seq_len}, K={self.delay}")
            if self.alphabet_size < 2:
                raise ContractViolation("copy memory needs an alphabet of at least 2 symbols")
            if self.delay < 1:
                raise ContractViolation("copy memory needs K >= 1")
        if self.kind is TaskKind.CHAR:
            if self.text is None or len(self.text) < self.seq_len + 1:
                raise ContractViolation("text must hold at least T+1 bytes")
        return self

    @property
    def input_dim(self) -> int:
        if self.kind is TaskKind.ADDING:
            return 2
        if self.kind is TaskKind.COPY:
            return self.alphabet_size + 2
        return len(char_alphabet(self.text))

    @property
    def output_dim(self) -> int:
        if self.kind is TaskKind.ADDING:
            return 1
        if self.kind is TaskKind.COPY:
            return self.alphabet_size
        return len(char_alphabet(self.text))

    @property
    def regression(self) -> bool:
        return self.kind is TaskKind.ADDING

    def batch(self, seed: int, purpose: rng.Purpose, index: int = 0,
              batch_size: int | None = None) -> "Batch":
        b = self.batch_size if batch_size is None else batch_size
        if self.kind is TaskKind.ADDING:
            return gen_adding_problem(self.seq_len, b, seed, purpose, index)
        if self.kind is TaskKind.COPY:
            return gen_copy_memory(self.seq_len, self.delay, self.alphabet_size, b,
                                   seed, purpose, index)
        return gen_char_next_step(self.text, self.seq_len, b, seed, purpose, index)


@dataclass
class Batch:
    inputs: np.ndarray    # (T, B, m)
    targets: np.ndarray   # (T, B, outputs) float for regression, (T, B) int for classes
    mask: np.ndarray      # (T,) loss-inclusion flags

    @property
    def seq_len(self) -> int:
        return self.inputs.shape[0]

    @property
    def size(self) -> int:
        return self.inputs.shape[1]


def gen_adding_problem(T: int, batch_size: int, seed: int,
                       purpose: rng.Purpose = rng.Purpose.TRAIN_BATCH, index: int = 0) -> Batch:
    """Two channels: values in [0, 1] and a marker; the target is the sum of
    the two marked values. One marker falls in each half of the sequence."""
    if T < 2:
        raise ContractViolation(f"sequence length must be >= 2, got {T}")
    gen = rng.stream(seed, purpose, index)
    values = gen.uniform(0.0, 1.0, size=(T, batch_size))
    half = T // 2
    first = gen.integers(0, half, size=batch_size)
    second = gen.integers(half, T, size=batch_size)
    markers = np.zeros((T, batch_size))
    cols = np.arange(batch_size)
    markers[first, cols] = 1.0
    markers[second, cols] = 1.0
    inputs = np.stack([values, markers], axis=-1)
    targets = np.zeros((T, batch_size, 1))
    targets[-1, :, 0] = values[first, cols] + values[second, cols]
    mask = np.zeros(T)
    mask[-1] = 1.0
    return Batch(inputs, targets, mask)


def gen_copy_memory(T: int, K: int, alphabet_size: int, batch_size: int, seed: int,
                    purpose: rng.Purpose = rng.Purpose.TRAIN_BATCH, index: int = 0) -> Batch:
    """K one-hot symbols, blanks, a go marker at step T-K, then recall over the last K steps.

    Input channels: ``alphabet_size`` symbols, then blank, then go.
    """
    if T <= K + 20:
        raise ContractViolation(f"copy memory needs T > K + 20, got T={T}, K={K}")
    if alphabet_size < 2 or K < 1:
        raise ContractViolation("copy memory needs alphabet_size >= 2 and K >= 1")
    gen = rng.stream(seed, purpose, index)
    symbols = gen.integers(0, alphabet_size, size=(batch_size, K))
    blank, go = alphabet_size, alphabet_size + 1
    inputs = np.zeros((T, batch_size, alphabet_size + 2))
    inputs[K:, :, blank] = 1.0
    cols = np.arange(batch_size)
    for k in range(K):
        inputs[k, cols, symbols[:, k]] = 1.0
    inputs[T - K - 1, :, blank] = 0.0
    inputs[T - K - 1, :, go] = 1.0
    targets = np.zeros((T, batch_size), dtype=np.int64)
    targets[T - K:, :] = symbols.T
    mask = np.zeros(T)
    mask[T - K:] = 1.0
    return Batch(inputs, targets, mask)


def char_alphabet(text: bytes) -> bytes:
    return bytes(sorted(set(text)))


def gen_char_next_step(text: bytes, T: int, batch_size: int, seed: int,
                       purpose: rng.Purpose = rng.Purpose.TRAIN_BATCH, index: int = 0) -> Batch:
    """Random windows of ``text``; the target at each step is the next byte.

    Bytes are one-hot encoded over the sorted set of bytes present in ``text``.
    """
    if text is None or len(text) < T + 1:
        raise ContractViolation(f"text must hold at least T+1 = {T + 1} bytes")
    alphabet = char_alphabet(text)
    lookup = np.zeros(256, dtype=np.int64)
    lookup[list(alphabet)] = np.arange(len(alphabet))
    codes = lookup[np.frombuffer(text, dtype=np.uint8)]
    gen = rng.stream(seed, purpose, index)
    starts = gen.integers(0, len(text) - T, size=batch_size)
    windows = np.stack([codes[s:s + T + 1] for s in starts], axis=1)  # (T+1, B)
    inputs = np.eye(len(alphabet))[windows[:-1]]
    return Batch(inputs, windows[1:].copy(), np.ones(T))
