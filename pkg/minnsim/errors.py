class MinnError(Exception):
    """Base class for every error raised by minnsim."""


class DimensionError(MinnError, ValueError):
    pass


class GeometryError(MinnError, ValueError):
    pass


class ConfigError(MinnError, ValueError):
    pass


class ContractError(MinnError, RuntimeError):
    pass


class OperandTypeError(MinnError, TypeError):
    pass


class DivergenceError(MinnError, FloatingPointError):
    pass


class FormatError(MinnError, ValueError):
    pass


class TruncatedFileError(MinnError, ValueError):
    pass


class ParseError(MinnError, ValueError):
    pass


class DataError(MinnError, ValueError):
    pass


class StateError(MinnError, RuntimeError):
    pass


class ConditioningError(MinnError, ValueError):
    pass


class RangeError(MinnError, IndexError):
    pass


class ExperimentError(MinnError, RuntimeError):
    """Wraps a failure inside run_experiment with the stage it happened in."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
