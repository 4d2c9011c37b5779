"""Exception hierarchy. The CLI maps these onto exit codes."""


class AffectError(Exception):
    """Base class for all package errors."""


class ConfigError(AffectError):
    """Invalid configuration or experiment specification."""


class DataError(AffectError, ValueError):
    """Input data could not be parsed or violates a data contract."""


class SchemaError(DataError):
    """A required column is missing from an input file."""


class RowError(DataError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class ParseError(DataError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TrainingError(AffectError):
    """A model cannot be trained on the given data (e.g. a single class)."""


class ShapeError(AffectError, ValueError):
    """Input width or shape does not match what the model expects."""
