"""Dense kernels and activations underneath the cell dynamics.

Vectors and matrices are plain float64 numpy arrays. Every kernel also
accepts a leading batch axis on its vector arguments, so ``(m,)`` and
``(B, m)`` inputs go through the same code path.
"""

from __future__ import annotations

import enum
from typing import Sequence

import numpy as np

from .errors import ContractViolation

DTYPE = np.float64

Vector = np.ndarray
Matrix = np.ndarray


class ActivationKind(str, enum.Enum):
    TANH = "tanh"
    LOGISTIC = "logistic"
    RELU = "relu"

    @classmethod
    def parse(cls, name: "str | ActivationKind") -> "ActivationKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ContractViolation(f"unknown activation {name!r}") from None


def as_vector(values, length: int | None = None) -> Vector:
    v = np.array(values, dtype=DTYPE)
    if v.ndim != 1 or v.size == 0:
        raise ContractViolation(f"expected a nonempty 1-d vector, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise ContractViolation(f"expected length {length}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ContractViolation("vector has non-finite elements")
    return v


def as_matrix(values, rows: int | None = None, cols: int | None = None) -> Matrix:
    a = np.array(values, dtype=DTYPE)
    if a.ndim != 2 or a.size == 0:
        raise ContractViolation(f"expected a nonempty 2-d matrix, got shape {a.shape}")
    if rows is not None and a.shape[0] != rows:
        raise ContractViolation(f"expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise ContractViolation(f"expected {cols} cols, got {a.shape[1]}")
    if not np.all(np.isfinite(a)):
        raise ContractViolation("matrix has non-finite elements")
    return a


def matvec(M: Matrix, v: Vector) -> Vector:
    """Return ``M @ v``; a batch ``v`` of shape (B, cols) gives (B, rows)."""
    if M.ndim != 2 or v.shape[-1] != M.shape[1]:
        raise ContractViolation(
            f"matvec dimension mismatch: matrix {M.shape}, vector {v.shape}")
    return v @ M.T


def hadamard(a: Vector, b: Vector) -> Vector:
    if a.shape[-1] != b.shape[-1]:
        raise ContractViolation(f"hadamard length mismatch: {a.shape} vs {b.shape}")
    return a * b


def logistic(v: Vector) -> Vector:
    # exp is only ever evaluated at non-positive arguments
    v = np.asarray(v)
    if v.dtype != np.longdouble:
        v = v.astype(DTYPE, copy=False)
    e = np.exp(-np.abs(v))
    return np.where(v >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def relu(v: Vector) -> Vector:
    return np.maximum(v, 0.0)


def apply_activation(kind: ActivationKind, v: Vector) -> Vector:
    if kind is ActivationKind.TANH:
        return np.tanh(v)
    if kind is ActivationKind.LOGISTIC:
        return logistic(v)
    if kind is ActivationKind.RELU:
        return relu(v)
    raise ContractViolation(f"unknown activation {kind!r}")


def activation_derivative(kind: ActivationKind, pre: Vector, out: Vector) -> Vector:
    """Derivative of the activation at ``pre``, given ``out = g(pre)``."""
    if kind is ActivationKind.TANH:
        return 1.0 - out * out
    if kind is ActivationKind.LOGISTIC:
        return out * (1.0 - out)
    if kind is ActivationKind.RELU:
        return (pre > 0).astype(DTYPE)
    raise ContractViolation(f"unknown activation {kind!r}")


def axpy_sum(terms: Sequence[Vector]) -> Vector:
    """Element-wise sum of ``terms``, accumulated left to right."""
    if len(terms) == 0:
        raise ContractViolation("axpy_sum needs at least one term")
    width = terms[0].shape[-1]
    total = terms[0]
    for term in terms[1:]:
        if term.shape[-1] != width:
            raise ContractViolation(
                f"axpy_sum length mismatch: {width} vs {term.shape[-1]}")
        total = total + term
    return np.array(total, dtype=np.result_type(total, DTYPE))


def inf_norm(a) -> float:
    """Max absolute element for vectors; induced (max row-sum) norm for matrices."""
    a = np.asarray(a, dtype=DTYPE)
    if a.ndim == 2:
        return float(np.max(np.sum(np.abs(a), axis=1)))
    return float(np.max(np.abs(a)))
