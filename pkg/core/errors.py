"""Exception hierarchy and CLI exit codes."""
from typing import Any, Optional

EXIT_OK = 0
EXIT_DIAGNOSTIC_VIOLATION = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class BadmmError(Exception):
    """Base class for all library errors."""


class ShapeError(BadmmError, ValueError):
    """Operands with non-conforming shapes."""


class DomainError(BadmmError, ValueError):
    """Argument outside the domain of an operation (e.g. nonpositive entries for KL)."""


class ConfigError(BadmmError, ValueError):
    """Invalid run configuration or problem file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FrameFormatError(BadmmError, ValueError):
    """Unsupported or inconsistent frame input."""


class NumericalError(BadmmError, ArithmeticError):
    """Numerical kernel failure or non-finite values."""


class RankDeficiencyError(NumericalError):
    """A matrix required to have full row rank (or be nonsingular) does not."""


class SolverError(BadmmError, RuntimeError):
    """A block subproblem solver failed. Carries the block name and the partial trace."""

    def __init__(self, block_name: str, message: str, trace: Any = None):
        self.block_name = block_name
        self.trace = trace
        super().__init__(f"block '{block_name}': {message}")


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(exc, (NumericalError, SolverError)):
        return EXIT_NUMERIC
    if isinstance(exc, (ConfigError, FrameFormatError, ShapeError, DomainError, ValueError, OSError)):
        return EXIT_USAGE
    return EXIT_NUMERIC
