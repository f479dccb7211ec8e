"""Exceptions raised by the pure demand engine."""


class PureDemandError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PureDemandError):
    """Error to indicate the source text is not a program."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        """Initialize the error with an optional source position."""
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(PureDemandError):
    """Error to indicate a parsed program violates a well-formedness rule."""


class UnknownLabelError(PureDemandError, KeyError):
    """Error to indicate a label does not name a suitable program node."""

    def __str__(self) -> str:
        """Return the message without KeyError quoting."""
        return str(self.args[0]) if self.args else ""


class EvaluationError(PureDemandError):
    """Base class for concrete evaluation failures."""


class StuckError(EvaluationError):
    """Error to indicate no evaluation rule applies."""

    def __init__(self, message: str, label: int | None = None, stack: object = None) -> None:
        """Initialize the error with the offending label and stack."""
        super().__init__(f"{message} (label {label}, stack {stack})")
        self.label = label
        self.stack = stack


class FuelExhaustedError(EvaluationError):
    """Error to indicate the rule firing budget ran out (possible divergence)."""


class NestingLimitError(EvaluationError):
    """Error to indicate evaluation nested deeper than the interpreter allows."""


class MalformedDisplayError(EvaluationError):
    """Error to indicate a display is shorter than a variable's depth index."""


class TypeMismatchError(PureDemandError):
    """Error to indicate an operator, projection or inspection got the wrong kind of value."""


class UnsupportedConstructError(PureDemandError):
    """Error to indicate a program uses constructs a semantics does not define."""


class AnalysisBudgetError(PureDemandError):
    """Error to indicate the analysis exceeded its node budget."""

    def __init__(self, message: str, nodes: int) -> None:
        """Initialize the error with the number of derivation nodes visited."""
        super().__init__(message)
        self.nodes = nodes


class ChcTranslationError(PureDemandError):
    """Error to indicate a result cannot be expressed as Horn clauses."""


class ChcSortError(ChcTranslationError):
    """Error to indicate a predicate is used at both Int and Bool sort."""


class ConfigError(PureDemandError):
    """Error to indicate invalid configuration."""
