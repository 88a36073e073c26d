"""Exception types raised across the pairlink package."""


class PairlinkError(Exception):
    """Base class for all pairlink errors."""


class InvalidArgumentError(PairlinkError, ValueError):
    """An argument is outside its documented range."""


class InvalidInputError(PairlinkError, ValueError):
    """Input data violates an operation's precondition (e.g. empty table)."""


class ParseError(PairlinkError, ValueError):
    """A line or token could not be parsed. Carries file/line context when known."""

    def __init__(self, message, *, path=None, line_number=None):
        if path is not None or line_number is not None:
            where = f"{path or '<input>'}:{line_number if line_number is not None else '?'}"
            message = f"{where}: {message}"
        super().__init__(message)
        self.path = path
        self.line_number = line_number


class ValidationError(PairlinkError, ValueError):
    """A parsed value violates a domain invariant (e.g. score outside [0, 1])."""


class SchemaError(PairlinkError, ValueError):
    """Column headers are unknown, incomplete, or inconsistent across files."""


class CorpusNotFoundError(PairlinkError, FileNotFoundError):
    """No input files matched the requested directory and pattern."""


class ExtractionError(PairlinkError, RuntimeError):
    """An archive could not be unpacked."""


class TableResourceError(PairlinkError, MemoryError):
    """A partition could not be materialized (memory exhaustion)."""


class RowFunctionError(PairlinkError, RuntimeError):
    """A per-row function failed; names the first failing row."""

    def __init__(self, message, *, row_id):
        super().__init__(message)
        self.row_id = row_id


class ShapeError(PairlinkError, ValueError):
    """Vector or matrix widths/lengths do not line up."""


class NumericError(PairlinkError, ArithmeticError):
    """A numeric computation produced a non-finite intermediate."""


class TrainingError(PairlinkError, ValueError):
    """Training input cannot produce a model (e.g. a single-class dataset)."""


class ConfigError(PairlinkError, ValueError):
    """A configuration file or option is unknown or out of range."""


class PipelineStageError(PairlinkError, RuntimeError):
    """A pipeline stage failed; names the stage and keeps the cause chained."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
