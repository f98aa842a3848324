"""Forward recurrence and backpropagation through time for any cell configuration.

One engine covers every catalog variant. Gate pre-activations are assembled
term by term from the arrays the gate form owns, constant gates are plain
scalars, and the "b" forms feed the raw affine cell input into the memory cell.

Arrays may carry a leading batch axis: ``x`` is ``(m,)`` or ``(B, m)`` and the
state is ``(n,)`` or ``(B, n)``. Gradients are summed over the batch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import rng
from .errors import ContractViolation, NumericFault
from .numerics import (DTYPE, activation_derivative, apply_activation, axpy_sum,
                       hadamard, logistic, matvec)
from .taxonomy import CellConfig, GateTag, Mixing, check_config, param_count

GATE_ROLES = ("i", "f", "o")


class InitScheme(str, enum.Enum):
    UNIFORM = "uniform"  # U(-s, s) with s = 1/sqrt(fan-in); zero biases, forget bias +1
    RANDOM = "random"    # like UNIFORM but biases drawn too; used by gradient checks
    ZERO = "zero"


def param_layout(config: CellConfig, n: int, m: int) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical (name, shape) list of the trainable arrays of ``config``."""
    layout = []
    for role, gate in config.gates.items():
        if gate.has_input_weights:
            layout.append((f"W_{role}", (n, m)))
        if gate.has_state_matrix:
            layout.append((f"U_{role}", (n, n)))
        if gate.has_state_vector:
            layout.append((f"u_{role}", (n,)))
        if gate.has_bias:
            layout.append((f"b_{role}", (n,)))
    layout.append(("W_c", (n, m)))
    if config.cell_input.recurrent_mixing is Mixing.DENSE_MATRIX:
        layout.append(("U_c", (n, n)))
    else:
        layout.append(("u_c", (n,)))
    if config.cell_input.bias_present:
        layout.append(("b_c", (n,)))
    return layout


def _float_array(value) -> np.ndarray:
    a = np.asarray(value)
    return a if a.dtype in (np.float64, np.longdouble) else a.astype(DTYPE)


class Parameters:
    """Named float64 arrays in canonical order. Gradients use the same type."""

    def __init__(self, arrays: dict[str, np.ndarray]):
        self.arrays = {k: _float_array(v) for k, v in arrays.items()}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __setitem__(self, name: str, value) -> None:
        if name not in self.arrays:
            raise KeyError(name)
        old = self.arrays[name]
        value = np.asarray(value, dtype=old.dtype)
        if value.ndim == 0:
            value = np.full(old.shape, value, dtype=old.dtype)
        self.arrays[name] = value.reshape(old.shape)

    def __contains__(self, name: str) -> bool:
        return name in self.arrays

    def __iter__(self) -> Iterator[str]:
        return iter(self.arrays)

    def __len__(self) -> int:
        return len(self.arrays)

    def items(self):
        return self.arrays.items()

    @property
    def names(self) -> list[str]:
        return list(self.arrays)

    @property
    def n(self) -> int:
        return self.arrays["W_c"].shape[0]

    @property
    def m(self) -> int:
        return self.arrays["W_c"].shape[1]

    @property
    def size(self) -> int:
        return sum(a.size for a in self.arrays.values())

    def copy(self) -> "Parameters":
        return Parameters({k: v.copy() for k, v in self.arrays.items()})

    def zeros_like(self) -> "Parameters":
        return Parameters({k: np.zeros_like(v) for k, v in self.arrays.items()})

    def astype(self, dtype) -> "Parameters":
        return Parameters({k: v.astype(dtype) for k, v in self.arrays.items()})

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays.values()])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays.values())

    def equal(self, other: "Parameters") -> bool:
        """Exact (bitwise for finite values) equality of names, shapes and contents."""
        return (self.names == other.names and all(
            self[k].shape == other[k].shape and np.array_equal(self[k], other[k])
            for k in self.arrays))

    def __repr__(self) -> str:
        shapes = ", ".join(f"{k}{tuple(v.shape)}" for k, v in self.arrays.items())
        return f"Parameters({shapes})"


Gradients = Parameters


def check_params(config: CellConfig, params: Parameters) -> None:
    n, m = params.n, params.m
    layout = param_layout(config, n, m)
    if [name for name, _ in layout] != params.names:
        raise ContractViolation(
            f"parameters {params.names} do not match configuration {config.name} "
            f"(expected {[name for name, _ in layout]})")
    for name, shape in layout:
        if params[name].shape != shape:
            raise ContractViolation(f"{name} has shape {params[name].shape}, expected {shape}")
    assert params.size == param_count(config, n, m)


def init_params(config: CellConfig, n: int, m: int, seed: int = 0,
                scheme: InitScheme | str = InitScheme.UNIFORM) -> Parameters:
    if n < 1 or m < 1:
        raise ContractViolation(f"dimensions must be positive, got n={n}, m={m}")
    check_config(config)
    scheme = InitScheme(scheme)
    gen = rng.stream(seed, rng.Purpose.INIT)
    arrays = {}
    for name, shape in param_layout(config, n, m):
        if scheme is InitScheme.ZERO:
            arrays[name] = np.zeros(shape)
            continue
        fan_in = m if name.startswith("W") else n
        s = 1.0 / np.sqrt(fan_in)
        if name.startswith("b") and scheme is InitScheme.UNIFORM:
            arrays[name] = np.full(shape, 1.0 if name == "b_f" else 0.0)
        else:
            arrays[name] = gen.uniform(-s, s, size=shape)
    return Parameters(arrays)


def restrict(params: Parameters, config: CellConfig) -> Parameters:
    """Copy the subset of ``params`` that ``config`` uses."""
    layout = param_layout(config, params.n, params.m)
    try:
        return Parameters({name: params[name].copy() for name, _ in layout})
    except KeyError as exc:
        raise ContractViolation(f"source parameters lack {exc.args[0]}") from None


def clone_with_zeroed_input_weights(config: CellConfig, params: Parameters) -> Parameters:
    """Standard-LSTM parameters with W_i, W_f and W_o set to zero."""
    if not all(g.tag is GateTag.FULL for g in config.gates.values()):
        raise ContractViolation(f"expected a standard LSTM configuration, got {config.name}")
    out = params.copy()
    for role in GATE_ROLES:
        out[f"W_{role}"] = 0.0
    return out


@dataclass
class CellState:
    c: np.ndarray
    h: np.ndarray

    @classmethod
    def zeros(cls, n: int, batch: int | None = None, dtype=DTYPE) -> "CellState":
        shape = (n,) if batch is None else (batch, n)
        return cls(np.zeros(shape, dtype), np.zeros(shape, dtype))


@dataclass
class StepCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    gate_pre: dict = field(default_factory=dict)   # role -> pre-activation (trainable gates)
    gates: dict = field(default_factory=dict)      # role -> array, or float for constants
    cell_pre: np.ndarray | None = None             # affine cell input
    cell_in: np.ndarray | None = None              # g(cell_pre), or cell_pre for "b" forms
    c: np.ndarray | None = None
    gc: np.ndarray | None = None                   # g(c_t)
    h: np.ndarray | None = None


def _gate_pre(role: str, gate, params: Parameters, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    terms = []
    if gate.has_input_weights:
        terms.append(matvec(params[f"W_{role}"], x))
    if gate.has_state_matrix:
        terms.append(matvec(params[f"U_{role}"], h))
    if gate.has_state_vector:
        terms.append(hadamard(params[f"u_{role}"], h))
    if gate.has_bias:
        terms.append(np.broadcast_to(params[f"b_{role}"], h.shape))
    return axpy_sum(terms)


def _cell_pre(config: CellConfig, params: Parameters, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    terms = [matvec(params["W_c"], x)]
    if config.cell_input.recurrent_mixing is Mixing.DENSE_MATRIX:
        terms.append(matvec(params["U_c"], h))
    else:
        terms.append(hadamard(params["u_c"], h))
    if config.cell_input.bias_present:
        terms.append(np.broadcast_to(params["b_c"], h.shape))
    return axpy_sum(terms)


def forward_step(config: CellConfig, params: Parameters, x: np.ndarray,
                 state: CellState, t: int = 0) -> tuple[CellState, StepCache]:
    n, m = params.n, params.m
    x = _float_array(x)
    if x.shape[-1] != m or state.h.shape[-1] != n or state.c.shape != state.h.shape:
        raise ContractViolation(
            f"shape mismatch at timestep {t}: x {x.shape}, c {state.c.shape}, "
            f"h {state.h.shape} for n={n}, m={m}")
    if x.shape[:-1] != state.h.shape[:-1]:
        raise ContractViolation(f"batch mismatch at timestep {t}: {x.shape} vs {state.h.shape}")

    cache = StepCache(x=x, h_prev=state.h, c_prev=state.c)
    for role, gate in config.gates.items():
        if gate.is_constant:
            cache.gates[role] = gate.constant_value
        else:
            z = _gate_pre(role, gate, params, x, state.h)
            cache.gate_pre[role] = z
            cache.gates[role] = logistic(z)

    g = config.activation
    cache.cell_pre = _cell_pre(config, params, x, state.h)
    if config.outer_nonlinearity:
        cache.cell_in = apply_activation(g, cache.cell_pre)
    else:
        cache.cell_in = cache.cell_pre
    # overflow is reported below as a NumericFault, not a warning
    with np.errstate(over="ignore", invalid="ignore"):
        cache.c = cache.gates["f"] * state.c + cache.gates["i"] * cache.cell_in
        cache.gc = apply_activation(g, cache.c)
        cache.h = cache.gates["o"] * cache.gc if config.outer_nonlinearity else cache.gc
    if not (np.all(np.isfinite(cache.c)) and np.all(np.isfinite(cache.h))):
        raise NumericFault("non-finite cell state", timestep=t)
    return CellState(cache.c, cache.h), cache


def forward_sequence(config: CellConfig, params: Parameters, inputs: Sequence[np.ndarray],
                     initial: CellState | None = None) -> tuple[list[CellState], list[StepCache]]:
    if len(inputs) == 0:
        raise ContractViolation("input sequence is empty")
    check_config(config)
    check_params(config, params)
    if initial is None:
        first = np.asarray(inputs[0])
        initial = CellState.zeros(params.n, None if first.ndim == 1 else first.shape[0],
                                  params["W_c"].dtype)
    state = initial
    states, caches = [], []
    for t, x in enumerate(inputs):
        state, cache = forward_step(config, params, x, state, t)
        states.append(state)
        caches.append(cache)
    return states, caches


def _rows(a: np.ndarray) -> np.ndarray:
    return a.reshape(1, -1) if a.ndim == 1 else a


def backward_sequence(config: CellConfig, params: Parameters, caches: Sequence[StepCache],
                      dloss_dh: Sequence[np.ndarray | None]
                      ) -> tuple[Gradients, list[np.ndarray]]:
    """Reverse-mode gradients of a loss whose derivative w.r.t. each h_t is given.

    Returns the parameter gradients and the gradient w.r.t. every input x_t.
    """
    if len(caches) != len(dloss_dh):
        raise ContractViolation(
            f"{len(caches)} caches but {len(dloss_dh)} upstream gradients")
    if not caches:
        raise ContractViolation("empty cache list")
    grads = params.zeros_like()
    G = grads.arrays
    g = config.activation
    dense_cell = config.cell_input.recurrent_mixing is Mixing.DENSE_MATRIX
    one_d = caches[0].x.ndim == 1

    dh_next = np.zeros_like(_rows(caches[0].h))
    dc_next = np.zeros_like(dh_next)
    dxs: list[np.ndarray] = [None] * len(caches)
    for t in range(len(caches) - 1, -1, -1):
        cache = caches[t]
        x, h_prev, c_prev = _rows(cache.x), _rows(cache.h_prev), _rows(cache.c_prev)
        gc, c = _rows(cache.gc), _rows(cache.c)
        gates = {r: (v if np.isscalar(v) else _rows(v)) for r, v in cache.gates.items()}

        dh = dh_next
        if dloss_dh[t] is not None:
            dh = dh + _rows(np.asarray(dloss_dh[t], dtype=DTYPE))
        if config.outer_nonlinearity:
            dgc = dh * gates["o"]
            dgate = {"o": dh * gc}
        else:
            dgc = dh
            dgate = {}
        dc = dc_next + dgc * activation_derivative(g, c, gc)
        cell_in = _rows(cache.cell_in)
        dgate["f"] = dc * c_prev
        dgate["i"] = dc * cell_in
        dc_prev = dc * gates["f"]

        dcell_in = dc * gates["i"]
        if config.outer_nonlinearity:
            da = dcell_in * activation_derivative(g, _rows(cache.cell_pre), cell_in)
        else:
            da = dcell_in
        G["W_c"] += da.T @ x
        dx = da @ params["W_c"]
        if dense_cell:
            G["U_c"] += da.T @ h_prev
            dh_prev = da @ params["U_c"]
        else:
            G["u_c"] += np.sum(da * h_prev, axis=0)
            dh_prev = da * params["u_c"]
        if config.cell_input.bias_present:
            G["b_c"] += np.sum(da, axis=0)

        for role, gate in config.gates.items():
            if gate.is_constant:
                continue
            s = gates[role]
            dz = dgate[role] * s * (1.0 - s)
            if gate.has_input_weights:
                G[f"W_{role}"] += dz.T @ x
                dx = dx + dz @ params[f"W_{role}"]
            if gate.has_state_matrix:
                G[f"U_{role}"] += dz.T @ h_prev
                dh_prev = dh_prev + dz @ params[f"U_{role}"]
            if gate.has_state_vector:
                G[f"u_{role}"] += np.sum(dz * h_prev, axis=0)
                dh_prev = dh_prev + dz * params[f"u_{role}"]
            if gate.has_bias:
                G[f"b_{role}"] += np.sum(dz, axis=0)

        dxs[t] = dx[0] if one_d else dx
        dh_next, dc_next = dh_prev, dc_prev
    return grads, dxs
