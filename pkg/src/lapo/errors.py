"""Exception hierarchy shared by every module of the package."""


class LapoError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(LapoError, ValueError):
    """An input array does not have the width a network or op expects."""


class ContractError(LapoError, ValueError):
    """A caller violated a precondition (length mismatch, non-scalar backward, ...)."""


class NumericError(LapoError, ArithmeticError):
    """Non-finite values reached an operation that requires finite inputs."""


class ConfigError(LapoError, ValueError):
    """Invalid configuration: unknown keys, bad values, unknown names."""


class FormatError(LapoError):
    """A dataset or checkpoint file is corrupt, truncated or of the wrong version."""


class DivergenceError(LapoError, FloatingPointError):
    """A training loss became NaN or infinite."""

    def __init__(self, step, loss_name, value):
        self.step = step
        self.loss_name = loss_name
        self.value = value
        super().__init__(f"non-finite {loss_name} ({value!r}) at step {step}")
