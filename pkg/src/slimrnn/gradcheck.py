"""Central finite-difference oracle for the analytic BPTT gradients."""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import rng
from .dynamics import (CellState, Gradients, InitScheme, Parameters, backward_sequence,
                       forward_sequence, init_params)
from .errors import ContractViolation, NumericFault
from .taxonomy import CellConfig, check_config

DEFAULT_EPS = 1e-5
DEFAULT_THRESHOLD = 1e-5
ERROR_FLOOR = 1e-8
# Probe forward passes run in extended precision so the finite-difference
# quotient is truncation-limited rather than float64-roundoff-limited.
ORACLE_DTYPE = np.longdouble


class LossSpec(str, enum.Enum):
    SUM_SQUARES = "sum_squares"  # sum_t ||h_t - y_t||^2
    SUM_FINAL_H = "sum_final_h"  # sum_i h_T[i]


def sequence_loss(spec: LossSpec, hs: Sequence[np.ndarray], targets=None
                  ) -> tuple[float, list[np.ndarray]]:
    """Scalar loss of an h-sequence and its derivative w.r.t. every h_t."""
    spec = LossSpec(spec)
    if spec is LossSpec.SUM_SQUARES:
        if targets is None:
            raise ContractViolation("sum_squares loss needs targets")
        diffs = [h - y for h, y in zip(hs, targets)]
        loss = float(sum(np.sum(d * d) for d in diffs))
        return loss, [2.0 * d for d in diffs]
    grads = [np.zeros_like(h) for h in hs]
    grads[-1] = np.ones_like(hs[-1])
    return float(np.sum(hs[-1])), grads


def loss_difference(spec: LossSpec, hs_plus, hs_minus, targets=None) -> float:
    """``L(plus) - L(minus)`` summed term by term.

    Differencing per element before summing avoids the cancellation of two
    large, nearly equal totals.
    """
    spec = LossSpec(spec)
    if spec is LossSpec.SUM_SQUARES:
        total = 0.0
        for hp, hm, y in zip(hs_plus, hs_minus, targets):
            total += np.sum((hp - hm) * (hp + hm - 2.0 * y))
        return total
    return np.sum(hs_plus[-1] - hs_minus[-1])


def _hs(config, params, inputs, initial) -> list[np.ndarray]:
    states, _ = forward_sequence(config, params, inputs, initial)
    hs = [s.h for s in states]
    if not all(np.all(np.isfinite(h)) for h in hs):
        raise NumericFault("non-finite activation in finite-difference probe")
    return hs


def _probe(config, params, inputs, spec, targets, initial, arr, idx, eps) -> float:
    orig = arr[idx]
    arr[idx] = orig + eps
    plus = _hs(config, params, inputs, initial)
    arr[idx] = orig - eps
    minus = _hs(config, params, inputs, initial)
    arr[idx] = orig
    diff = loss_difference(spec, plus, minus, targets)
    if not np.isfinite(diff):
        raise NumericFault("non-finite loss in finite-difference probe")
    return float(diff / (2.0 * eps))


def numeric_gradient(config: CellConfig, params: Parameters, inputs: Sequence[np.ndarray],
                     loss_spec: LossSpec | str = LossSpec.SUM_SQUARES,
                     eps: float = DEFAULT_EPS, targets=None,
                     initial: CellState | None = None) -> Gradients:
    """Estimate dL/dtheta for every scalar by two full forward passes each."""
    if eps <= 0:
        raise ContractViolation(f"eps must be positive, got {eps}")
    work = params.astype(ORACLE_DTYPE)
    inputs = [np.asarray(x, dtype=ORACLE_DTYPE) for x in inputs]
    if targets is not None:
        targets = [np.asarray(y, dtype=ORACLE_DTYPE) for y in targets]
    out = params.zeros_like()
    for name in work:
        arr = work[name]
        for idx in np.ndindex(arr.shape):
            out[name][idx] = _probe(config, work, inputs, loss_spec, targets, initial,
                                    arr, idx, eps)
    return out


def numeric_input_gradient(config, params, inputs, loss_spec=LossSpec.SUM_SQUARES,
                           eps: float = DEFAULT_EPS, targets=None, initial=None
                           ) -> list[np.ndarray]:
    params = params.astype(ORACLE_DTYPE)
    xs = [np.array(x, dtype=ORACLE_DTYPE) for x in inputs]
    if targets is not None:
        targets = [np.asarray(y, dtype=ORACLE_DTYPE) for y in targets]
    out = [np.zeros(np.shape(x)) for x in xs]
    for t, x in enumerate(xs):
        for idx in np.ndindex(x.shape):
            out[t][idx] = _probe(config, params, xs, loss_spec, targets, initial, x, idx, eps)
    return out


def relative_error(analytic, numeric) -> np.ndarray:
    a, f = np.asarray(analytic), np.asarray(numeric)
    return np.abs(a - f) / np.maximum(np.maximum(np.abs(a), np.abs(f)), ERROR_FLOOR)


@dataclass
class GroupResult:
    name: str
    max_rel_error: float
    argmax: tuple
    analytic: float
    numeric: float


@dataclass
class GradCheckReport:
    variant: str
    n: int
    m: int
    T: int
    seed: int
    eps: float
    threshold: float
    groups: list[GroupResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(g.max_rel_error < self.threshold for g in self.groups)

    @property
    def worst(self) -> GroupResult | None:
        return max(self.groups, key=lambda g: g.max_rel_error, default=None)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        for g in d["groups"]:
            g["argmax"] = list(g["argmax"])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self) -> str:
        lines = [f"gradcheck {self.variant} n={self.n} m={self.m} T={self.T} "
                 f"seed={self.seed} eps={self.eps:g} threshold={self.threshold:g}",
                 f"{'group':<8} {'max_rel_err':>12} {'argmax':<10} {'analytic':>16} {'numeric':>16}"]
        for g in self.groups:
            where = ",".join(str(i) for i in g.argmax)
            lines.append(f"{g.name:<8} {g.max_rel_error:>12.3e} {where:<10} "
                         f"{g.analytic:>16.9e} {g.numeric:>16.9e}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def compare(analytic: Gradients, numeric: Gradients) -> list[GroupResult]:
    results = []
    for name in analytic:
        err = relative_error(analytic[name], numeric[name])
        idx = np.unravel_index(int(np.argmax(err)), err.shape)
        results.append(GroupResult(name, float(err[idx]), tuple(int(i) for i in idx),
                                   float(analytic[name][idx]), float(numeric[name][idx])))
    return results


def draw_problem(config: CellConfig, n: int, m: int, T: int, seed: int):
    """Deterministic parameters, inputs and targets for a gradient check."""
    params = init_params(config, n, m, seed, InitScheme.RANDOM)
    gen = rng.stream(seed, rng.Purpose.GRADCHECK)
    inputs = list(gen.uniform(-1.0, 1.0, size=(T, m)))
    targets = list(gen.uniform(-1.0, 1.0, size=(T, n)))
    return params, inputs, targets


def gradient_check(config: CellConfig, n: int, m: int, T: int, seed: int,
                   eps: float = DEFAULT_EPS, threshold: float = DEFAULT_THRESHOLD,
                   loss_spec: LossSpec | str = LossSpec.SUM_SQUARES,
                   check_inputs: bool = True,
                   corrupt: tuple[str, tuple] | None = None) -> GradCheckReport:
    """Analytic vs numeric gradients on a seeded random problem.

    ``corrupt=(group, index)`` adds 0.1 to one analytic entry, for fault injection.
    """
    if threshold <= 0:
        raise ContractViolation(f"threshold must be positive, got {threshold}")
    check_config(config)
    params, inputs, targets = draw_problem(config, n, m, T, seed)
    states, caches = forward_sequence(config, params, inputs)
    _, dh = sequence_loss(loss_spec, [s.h for s in states], targets)
    analytic, dxs = backward_sequence(config, params, caches, dh)
    if corrupt is not None:
        group, index = corrupt
        analytic[group][tuple(index)] += 0.1
    numeric = numeric_gradient(config, params, inputs, loss_spec, eps, targets)

    report = GradCheckReport(config.name, n, m, T, seed, eps, threshold, compare(analytic, numeric))
    if check_inputs:
        num_dx = numeric_input_gradient(config, params, inputs, loss_spec, eps, targets)
        report.groups.extend(compare(Parameters({"x": np.stack(dxs)}),
                                     Parameters({"x": np.stack(num_dx)})))
    return report
