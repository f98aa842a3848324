"""Variant catalog: one configuration type covering the LSTM and its slim variants.

A cell is described by three gate forms (input, forget, output), the form of
the memory-cell input block, and whether the cell input is squashed before it
enters the memory cell. Parameter counts follow in closed form from the
configuration.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .errors import ContractViolation
from .numerics import ActivationKind

DEFAULT_ALPHA = 0.96


class GateTag(str, enum.Enum):
    FULL = "full"                              # sigma(W x + U h + b)
    STATE_BIAS = "state_bias"                  # sigma(U h + b)
    STATE_ONLY = "state_only"                  # sigma(U h)
    BIAS_ONLY = "bias_only"                    # sigma(b)
    POINTWISE_STATE = "pointwise_state"        # sigma(u * h)
    POINTWISE_STATE_BIAS = "pointwise_state_bias"  # sigma(u * h + b)
    CONSTANT = "constant"                      # fixed scalar, not trained


@dataclass(frozen=True)
class GateForm:
    tag: GateTag
    constant_value: float | None = None

    @property
    def is_constant(self) -> bool:
        return self.tag is GateTag.CONSTANT

    @property
    def has_input_weights(self) -> bool:
        return self.tag is GateTag.FULL

    @property
    def has_state_matrix(self) -> bool:
        return self.tag in (GateTag.FULL, GateTag.STATE_BIAS, GateTag.STATE_ONLY)

    @property
    def has_state_vector(self) -> bool:
        return self.tag in (GateTag.POINTWISE_STATE, GateTag.POINTWISE_STATE_BIAS)

    @property
    def has_bias(self) -> bool:
        return self.tag in (GateTag.FULL, GateTag.STATE_BIAS, GateTag.BIAS_ONLY,
                            GateTag.POINTWISE_STATE_BIAS)

    def param_count(self, n: int, m: int) -> int:
        return (self.has_input_weights * n * m + self.has_state_matrix * n * n
                + self.has_state_vector * n + self.has_bias * n)

    def __str__(self) -> str:
        if self.is_constant:
            return f"constant({self.constant_value:g})"
        return self.tag.value


FULL = GateForm(GateTag.FULL)
STATE_BIAS = GateForm(GateTag.STATE_BIAS)
STATE_ONLY = GateForm(GateTag.STATE_ONLY)
BIAS_ONLY = GateForm(GateTag.BIAS_ONLY)
POINTWISE_STATE = GateForm(GateTag.POINTWISE_STATE)
POINTWISE_STATE_BIAS = GateForm(GateTag.POINTWISE_STATE_BIAS)


def constant(value: float) -> GateForm:
    return GateForm(GateTag.CONSTANT, float(value))


class Mixing(str, enum.Enum):
    DENSE_MATRIX = "dense"        # U_c h
    POINTWISE_VECTOR = "pointwise"  # u_c * h


@dataclass(frozen=True)
class CellInputForm:
    recurrent_mixing: Mixing = Mixing.DENSE_MATRIX
    bias_present: bool = True

    def param_count(self, n: int, m: int) -> int:
        recurrent = n * n if self.recurrent_mixing is Mixing.DENSE_MATRIX else n
        return n * m + recurrent + (n if self.bias_present else 0)


DENSE_CELL = CellInputForm(Mixing.DENSE_MATRIX, True)
POINTWISE_CELL = CellInputForm(Mixing.POINTWISE_VECTOR, True)
POINTWISE_CELL_NO_BIAS = CellInputForm(Mixing.POINTWISE_VECTOR, False)


@dataclass(frozen=True)
class CellConfig:
    input_gate: GateForm = FULL
    forget_gate: GateForm = FULL
    output_gate: GateForm = FULL
    cell_input: CellInputForm = DENSE_CELL
    outer_nonlinearity: bool = True
    activation: ActivationKind = ActivationKind.TANH
    alpha: float = DEFAULT_ALPHA
    name: str = "custom"

    @property
    def gates(self) -> dict[str, GateForm]:
        return {"i": self.input_gate, "f": self.forget_gate, "o": self.output_gate}

    def with_alpha(self, alpha: float) -> "CellConfig":
        """Same variant with a new alpha; the constant forget gate follows it."""
        forget = constant(alpha) if self.forget_gate.is_constant else self.forget_gate
        return replace(self, alpha=float(alpha), forget_gate=forget)


VARIANT_NAMES = (
    "LSTM", "LSTM_1", "LSTM_2", "LSTM_3", "LSTM_4", "LSTM_4i", "LSTM_4ib",
    "LSTM_5", "LSTM_5i", "LSTM_5ib", "LSTM_6", "LSTM_6b", "CELL_1", "CELL_2",
    "LSTM_C3", "LSTM_C4", "LSTM_C4i", "LSTM_C4ib", "LSTM_C5", "LSTM_C5i",
    "LSTM_C5ib", "LSTM_C6", "LSTM_C6b",
)

_BY_UPPER = {name.upper(): name for name in VARIANT_NAMES}

# name -> (input gate, forget gate, output gate, cell input, outer nonlinearity);
# the string "alpha" stands for a constant forget gate at the configured alpha.
_CATALOG = {
    "LSTM": (FULL, FULL, FULL, DENSE_CELL, True),
    "LSTM_1": (STATE_BIAS, STATE_BIAS, STATE_BIAS, DENSE_CELL, True),
    "LSTM_2": (STATE_ONLY, STATE_ONLY, STATE_ONLY, DENSE_CELL, True),
    "LSTM_3": (BIAS_ONLY, BIAS_ONLY, BIAS_ONLY, DENSE_CELL, True),
    "LSTM_4": (POINTWISE_STATE, POINTWISE_STATE, POINTWISE_STATE, DENSE_CELL, True),
    "LSTM_4i": (POINTWISE_STATE, "alpha", constant(1.0), DENSE_CELL, True),
    "LSTM_4ib": (POINTWISE_STATE, "alpha", constant(1.0), DENSE_CELL, False),
    "LSTM_5": (POINTWISE_STATE_BIAS, POINTWISE_STATE_BIAS, POINTWISE_STATE_BIAS, DENSE_CELL, True),
    "LSTM_5i": (POINTWISE_STATE_BIAS, "alpha", constant(1.0), DENSE_CELL, True),
    "LSTM_5ib": (POINTWISE_STATE_BIAS, "alpha", constant(1.0), DENSE_CELL, False),
    "LSTM_6": (constant(1.0), "alpha", constant(1.0), DENSE_CELL, True),
    "LSTM_6b": (constant(1.0), "alpha", constant(1.0), DENSE_CELL, False),
    "CELL_1": (FULL, FULL, FULL, POINTWISE_CELL, True),
    "CELL_2": (FULL, FULL, FULL, POINTWISE_CELL_NO_BIAS, True),
    "LSTM_C3": (BIAS_ONLY, BIAS_ONLY, BIAS_ONLY, POINTWISE_CELL, True),
    "LSTM_C4": (POINTWISE_STATE, POINTWISE_STATE, POINTWISE_STATE, POINTWISE_CELL, True),
    "LSTM_C4i": (POINTWISE_STATE, "alpha", constant(1.0), POINTWISE_CELL, True),
    "LSTM_C4ib": (POINTWISE_STATE, "alpha", constant(1.0), POINTWISE_CELL, False),
    "LSTM_C5": (POINTWISE_STATE_BIAS, POINTWISE_STATE_BIAS, POINTWISE_STATE_BIAS, POINTWISE_CELL, True),
    "LSTM_C5i": (POINTWISE_STATE_BIAS, "alpha", constant(1.0), POINTWISE_CELL, True),
    "LSTM_C5ib": (POINTWISE_STATE_BIAS, "alpha", constant(1.0), POINTWISE_CELL, False),
    "LSTM_C6": (constant(1.0), "alpha", constant(1.0), POINTWISE_CELL, True),
    "LSTM_C6b": (constant(1.0), "alpha", constant(1.0), POINTWISE_CELL, False),
}


def canonical_name(name: str) -> str:
    """Map a case-insensitive variant name to its catalog spelling."""
    try:
        return _BY_UPPER[str(name).strip().upper()]
    except KeyError:
        raise ContractViolation(f"unknown variant {name!r}") from None


def variant_config(name: str, alpha: float = DEFAULT_ALPHA,
                   activation: ActivationKind | str = ActivationKind.TANH) -> CellConfig:
    name = canonical_name(name)
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation(f"alpha out of range: {alpha}")
    i, f, o, cell, outer = _CATALOG[name]
    if f == "alpha":
        f = constant(alpha)
    return CellConfig(i, f, o, cell, outer, ActivationKind.parse(activation), alpha, name)


def validate_config(config: CellConfig) -> list[str]:
    """Return the violated invariants of ``config``; an empty list means valid."""
    problems = []
    if not 0.0 <= config.alpha <= 1.0:
        problems.append(f"alpha out of range: {config.alpha}")
    for role, gate in config.gates.items():
        if gate.is_constant:
            v = gate.constant_value
            if v is None or not 0.0 <= v <= 1.0:
                problems.append(f"constant {role} gate value out of range: {v}")
        elif gate.constant_value is not None:
            problems.append(f"{role} gate {gate.tag.value} must not carry a constant value")
    if not config.outer_nonlinearity:
        for role in ("f", "o"):
            if not config.gates[role].is_constant:
                problems.append(
                    f"no outer nonlinearity requires a constant {role} gate, "
                    f"got {config.gates[role].tag.value}")
    if not isinstance(config.activation, ActivationKind):
        problems.append(f"unknown activation {config.activation!r}")
    return problems


def check_config(config: CellConfig) -> CellConfig:
    problems = validate_config(config)
    if problems:
        raise ContractViolation("; ".join(problems))
    return config


def param_count(config: CellConfig, n: int, m: int) -> int:
    if n < 1 or m < 1:
        raise ContractViolation(f"dimensions must be positive, got n={n}, m={m}")
    gates = sum(g.param_count(n, m) for g in config.gates.values())
    return gates + config.cell_input.param_count(n, m)


def standard_param_count(n: int, m: int) -> int:
    return 4 * (n * n + n * m + n)


def reduction_vs_standard(config: CellConfig, n: int, m: int) -> int:
    return standard_param_count(n, m) - param_count(config, n, m)


_EQUATIONS = {
    "full": "sigma(W{g} x + U{g} h_(t-1) + b{g})",
    "state_bias": "sigma(U{g} h_(t-1) + b{g})",
    "state_only": "sigma(U{g} h_(t-1))",
    "bias_only": "sigma(b{g})",
    "pointwise_state": "sigma(u{g} * h_(t-1))",
    "pointwise_state_bias": "sigma(u{g} * h_(t-1) + b{g})",
}


def describe(config: CellConfig) -> list[str]:
    """Human-readable update equations for ``config``."""
    lines = []
    for role, gate in config.gates.items():
        if gate.is_constant:
            value = "alpha" if role == "f" else f"{gate.constant_value:g}"
            lines.append(f"{role}_t = {value}")
        else:
            lines.append(f"{role}_t = " + _EQUATIONS[gate.tag.value].format(g="_" + role))
    mix = ("U_c h_(t-1)" if config.cell_input.recurrent_mixing is Mixing.DENSE_MATRIX
           else "u_c * h_(t-1)")
    affine = f"W_c x + {mix}" + (" + b_c" if config.cell_input.bias_present else "")
    f = "alpha" if config.forget_gate.is_constant else "f_t"
    i = "" if config.input_gate == constant(1.0) else "i_t * "
    if config.outer_nonlinearity:
        lines.append(f"c_t = {f} * c_(t-1) + {i}g({affine})")
        o = "" if config.output_gate == constant(1.0) else "o_t * "
        lines.append(f"h_t = {o}g(c_t)")
    else:
        lines.append(f"c_t = {f} * c_(t-1) + {i}({affine})")
        lines.append("h_t = g(c_t)")
    return lines
