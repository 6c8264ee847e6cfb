"""
Error hierarchy shared by the library and the CLI.

Every error carries the process exit code the CLI reports for it.
"""
from typing import Optional

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_RESOURCE = 4


class FvsGgmError(Exception):
    """Base class for all fvsggm errors."""
    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InputError(FvsGgmError):
    """Malformed or inconsistent input."""
    exit_code = EXIT_INPUT


class InsufficientSamplesError(InputError):
    """Fewer samples than an estimator needs."""


class DimensionMismatchError(InputError):
    """Operands disagree on dimension."""


class NotSymmetricError(InputError):
    """A matrix expected to be symmetric is not."""


class InvalidParameterError(InputError):
    """A parameter is outside its admissible range."""


class CsvFormatError(InputError):
    """A CSV file is unreadable, ragged or non-numeric."""


class ModelFileError(InputError):
    """A model file cannot be parsed."""


class NumericalError(FvsGgmError):
    """A numerical precondition or invariant failed."""
    exit_code = EXIT_NUMERICAL


class NotPositiveDefiniteError(NumericalError):
    """A matrix required to be positive definite is not."""


class SingularBlockError(NumericalError):
    """A block that must be inverted is singular."""


class DegenerateCorrelationError(NumericalError):
    """A tree edge has |correlation| >= 1."""


class BeliefPropagationError(NumericalError):
    """Gaussian BP produced a nonpositive precision."""


class ModelInvariantError(NumericalError):
    """An FVS model violates one of its structural invariants."""


class InitializationError(NumericalError):
    """A latent model could not be initialized."""


class LearningError(NumericalError):
    """An iterative learner broke down mid-run."""

    def __init__(self, detail: str, iteration: Optional[int] = None):
        if iteration is not None:
            detail = f"iteration {iteration}: {detail}"
        super().__init__(detail)
        self.iteration = iteration


class ResourceCapError(FvsGgmError):
    """A configured resource cap would be exceeded."""
    exit_code = EXIT_RESOURCE


class EnumerationCapError(ResourceCapError):
    """Exhaustive FVS enumeration exceeds the configured cap."""
