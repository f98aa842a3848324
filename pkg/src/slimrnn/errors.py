"""Exception hierarchy shared by the library and the CLI."""


class SlimRNNError(Exception):
    pass


class ContractViolation(SlimRNNError, ValueError):
    """A precondition on shapes, ranges or configuration was violated."""


class NumericFault(SlimRNNError, ArithmeticError):
    """A non-finite value appeared during evaluation."""

    def __init__(self, message: str, timestep: int | None = None):
        super().__init__(message if timestep is None else f"{message} (timestep {timestep})")
        self.timestep = timestep


class ConfigError(SlimRNNError, ValueError):
    pass


class CheckpointError(SlimRNNError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointIntegrityError(CheckpointError):
    pass
