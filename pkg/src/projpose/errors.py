"""Exception types shared across the package."""


class ProjposeError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(ProjposeError, ValueError):
    """An argument is malformed: non-finite, empty, or inconsistent."""


class ShapeError(InvalidArgumentError):
    """Operands of a graph op have incompatible shapes; message names the op."""


class OutOfDomainError(InvalidArgumentError):
    """A projected position falls outside the rasterization domain."""


class UnsupportedDimensionError(InvalidArgumentError):
    """The operation is only implemented for the requested dimension."""


class TooManyPointsError(InvalidArgumentError):
    """Point count exceeds the permutation-enumeration bound."""


class InsufficientDataError(InvalidArgumentError):
    """Not enough samples to compute the requested statistic."""


class ConstructionFailureError(ProjposeError):
    """Rejection sampling exhausted its attempt budget without success."""


class IncompatibleVolumeError(ProjposeError):
    """The volume does not induce a well-defined action on its projections."""


class NumericError(ProjposeError):
    """A non-finite value appeared during network evaluation."""


class TrainingDivergenceError(NumericError):
    """A gradient or loss became non-finite; carries the optimizer step."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite value at optimizer step {step}")


class TrainingFailureError(ProjposeError):
    """Every training restart diverged."""


class DatasetParseError(ProjposeError, ValueError):
    """A dataset or checkpoint file is malformed; carries the line number."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")
