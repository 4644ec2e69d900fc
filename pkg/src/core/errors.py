"""
Error types shared across the checker.

Every user-facing failure derives from SwitchCheckError so the CLI can map
it to an exit code. ModelError also subclasses ValueError because most model
problems are bad input values.
"""

from typing import Optional


class SwitchCheckError(Exception):
    """Base class for all checker errors"""


class ModelError(SwitchCheckError, ValueError):
    """Malformed model, unknown symbol or inconsistent variable set"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ConfigError(SwitchCheckError):
    """Missing or invalid configuration file"""


class VCGenError(SwitchCheckError):
    """Verification conditions cannot be generated for the given model"""


class SynthesisError(SwitchCheckError):
    """Numeric search failed in a way the caller must know about"""


class UsageError(SwitchCheckError):
    """Bad command-line usage"""


class SimulationError(SwitchCheckError):
    """Initial state or policy cannot drive the model"""
