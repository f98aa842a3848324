"""First-order optimizers over an ordered mapping of named arrays.

Updates happen in place. The global gradient norm is accumulated in the
mapping's iteration order so clipping is reproducible.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class OptimizerKind(str, enum.Enum):
    SGD = "sgd"
    ADAM = "adam"


@dataclass
class OptimizerState:
    kind: OptimizerKind = OptimizerKind.ADAM
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip: float = 5.0          # global-norm threshold; <= 0 disables clipping
    step: int = 0
    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)

    def ensure_moments(self, params: dict) -> None:
        if self.kind is not OptimizerKind.ADAM:
            return
        for name, value in params.items():
            if name not in self.first:
                self.first[name] = np.zeros_like(value)
                self.second[name] = np.zeros_like(value)
            elif self.first[name].shape != value.shape:
                raise ValueError(f"moment shape mismatch for {name}")


def global_norm(grads: dict) -> float:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    return math.sqrt(total)


def clip_by_global_norm(grads: dict, threshold: float) -> tuple[dict, float]:
    norm = global_norm(grads)
    if threshold > 0 and norm > threshold:
        scale = threshold / norm
        return {k: g * scale for k, g in grads.items()}, norm
    return grads, norm


def sgd_step(params: dict, grads: dict, state: OptimizerState) -> float:
    """``theta -= lr * g`` after clipping; returns the pre-clip gradient norm."""
    grads, norm = clip_by_global_norm(grads, state.clip)
    for name, value in params.items():
        value -= state.lr * grads[name]
    state.step += 1
    return norm


def adam_step(params: dict, grads: dict, state: OptimizerState) -> float:
    grads, norm = clip_by_global_norm(grads, state.clip)
    state.ensure_moments(params)
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, value in params.items():
        g = grads[name]
        m = state.first[name]
        v = state.second[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        value -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return norm


def optimizer_step(params: dict, grads: dict, state: OptimizerState) -> float:
    if state.kind is OptimizerKind.SGD:
        return sgd_step(params, grads, state)
    return adam_step(params, grads, state)
