"""Standard LSTM and slim LSTM variants with exact BPTT and a gradient oracle."""

__version__ = "0.1.0"

from .dynamics import (CellState, Gradients, InitScheme, Parameters, StepCache,
                       backward_sequence, clone_with_zeroed_input_weights, forward_sequence,
                       forward_step, init_params, param_layout)
from .errors import (CheckpointError, ConfigError, ContractViolation, NumericFault,
                     SlimRNNError)
from .gradcheck import GradCheckReport, LossSpec, gradient_check, numeric_gradient
from .numerics import ActivationKind
from .taxonomy import (VARIANT_NAMES, CellConfig, CellInputForm, GateForm, GateTag,
                       param_count, reduction_vs_standard, validate_config, variant_config)
