"""Masked losses over (T, B, ...) prediction tensors."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation


def _check_mask(mask: np.ndarray, T: int) -> np.ndarray:
    mask = np.asarray(mask, dtype=float)
    if mask.shape != (T,):
        raise ContractViolation(f"mask must have shape ({T},), got {mask.shape}")
    if not np.any(mask):
        raise ContractViolation("mask selects no steps")
    return mask


def mse_loss(pred: np.ndarray, target: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over the masked steps and its gradient w.r.t. ``pred``."""
    if pred.shape != target.shape:
        raise ContractViolation(f"pred {pred.shape} vs target {target.shape}")
    mask = _check_mask(mask, pred.shape[0])
    weight = mask.reshape((-1,) + (1,) * (pred.ndim - 1))
    count = np.sum(mask) * (pred.size // pred.shape[0])
    diff = (pred - target) * weight
    return float(np.sum(diff * diff) / count), 2.0 * diff / count


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def softmax_xent_loss(logits: np.ndarray, targets: np.ndarray, mask: np.ndarray
                      ) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over masked (step, sequence) pairs; gradient w.r.t. logits."""
    if logits.shape[:-1] != targets.shape:
        raise ContractViolation(f"logits {logits.shape} vs targets {targets.shape}")
    mask = _check_mask(mask, logits.shape[0])
    count = np.sum(mask) * targets.size // targets.shape[0]
    logp = log_softmax(logits)
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    weight = mask.reshape((-1,) + (1,) * (targets.ndim - 1))
    loss = -float(np.sum(picked * weight) / count)
    grad = np.exp(logp)
    np.put_along_axis(grad, targets[..., None],
                      np.take_along_axis(grad, targets[..., None], axis=-1) - 1.0, axis=-1)
    return loss, grad * weight[..., None] / count


def masked_accuracy(logits: np.ndarray, targets: np.ndarray, mask: np.ndarray) -> float:
    mask = _check_mask(mask, logits.shape[0])
    hits = (np.argmax(logits, axis=-1) == targets).astype(float)
    weight = mask.reshape((-1,) + (1,) * (targets.ndim - 1))
    return float(np.sum(hits * weight) / (np.sum(mask) * targets.size // targets.shape[0]))
