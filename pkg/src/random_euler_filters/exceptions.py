"""Custom exceptions for random Euler filters."""


class RandomEulerFilterError(Exception):
    """Base exception for every error raised by this package."""

    pass


class ConfigurationError(RandomEulerFilterError):
    """Raised when configuration is invalid or missing."""

    pass


class ConfigValidationError(ConfigurationError, ValueError):
    """Raised when an experiment config does not match the schema."""

    def __init__(self, message: str, path: str = "") -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InvalidParameterError(RandomEulerFilterError, ValueError):
    """Raised when a numeric parameter is outside its valid range."""

    pass


class DimensionMismatchError(RandomEulerFilterError, ValueError):
    """Raised when a vector does not have the expected length."""

    def __init__(self, what: str, expected: int, actual: int) -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} must have length {expected}, got {actual}")


class NonFiniteInputError(RandomEulerFilterError, ValueError):
    """Raised when an input sample contains NaN or Inf."""

    pass


class DivergenceError(RandomEulerFilterError):
    """Raised when an update produces non-finite weights."""

    def __init__(self, message: str, iteration: int) -> None:
        self.iteration = iteration
        super().__init__(message)


class UnsupportedOperationError(RandomEulerFilterError):
    """Raised when an operation is not defined for a filter kind."""

    pass


class DictionaryCapacityError(RandomEulerFilterError):
    """Raised when a growing kernel dictionary reaches its hard cap."""

    pass


class IndexUnderflowError(RandomEulerFilterError, IndexError):
    """Raised when a signal history is too short for the requested index."""

    pass


class ResourceLimitError(RandomEulerFilterError):
    """Raised when a theory computation would exceed the configured size cap."""

    def __init__(self, message: str, required_bytes: int | None = None) -> None:
        self.required_bytes = required_bytes
        super().__init__(message)


class NumericalError(RandomEulerFilterError):
    """Raised when a moment estimate or matrix fails a numerical sanity check."""

    pass


class SingularMatrixError(NumericalError):
    """Raised when a linear system of the theory engine cannot be solved."""

    pass


class OutputError(RandomEulerFilterError):
    """Raised when a result file cannot be written."""

    def __init__(self, message: str, path: str = "") -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
