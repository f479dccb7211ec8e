"""Concrete results, forced values and environment values."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from .const import ARITHMETIC_OPS, COMPARISON_OPS, EQUALITY_OPS, LOGICAL_OPS
from .exceptions import TypeMismatchError

if TYPE_CHECKING:
    from .stack import Stack


@dataclass(frozen=True, slots=True)
class IntVal:
    """Integer, shared by lazy results, forced values and environment values."""

    value: int


@dataclass(frozen=True, slots=True)
class BoolVal:
    """Boolean, shared by lazy results, forced values and environment values."""

    value: bool


@dataclass(frozen=True, slots=True)
class FunVal:
    """Function result: the function's label and the stack it was defined at."""

    label: int
    stack: Stack


@dataclass(frozen=True, slots=True)
class ResidualOp:
    """Operator application not yet performed."""

    left: ResVal
    op: str
    right: ResVal


@dataclass(frozen=True, slots=True)
class RecordVal:
    """Record whose fields are lazy results."""

    fields: tuple[tuple[str, ResVal], ...]

    def get(self, name: str) -> ResVal | None:
        """Return the field's result, if present."""
        for field_name, value in self.fields:
            if field_name == name:
                return value
        return None


@dataclass(frozen=True, slots=True)
class ResidualProj:
    """Projection not yet performed."""

    record: ResVal
    field: str


@dataclass(frozen=True, slots=True)
class ResidualInspect:
    """Inspection not yet performed."""

    field: str
    record: ResVal


type ResVal = (
    IntVal | BoolVal | FunVal | ResidualOp | RecordVal | ResidualProj | ResidualInspect
)


@dataclass(frozen=True, slots=True)
class FunTag:
    """Forced function: only its label survives."""

    label: int


@dataclass(frozen=True, slots=True)
class RecordOf:
    """Forced record, fields sorted by name."""

    fields: tuple[tuple[str, Value], ...]

    @classmethod
    def create(cls, fields: dict[str, Value]) -> RecordOf:
        """Create a record value from a field mapping."""
        return cls(tuple(sorted(fields.items())))

    def get(self, name: str) -> Value | None:
        """Return the field's value, if present."""
        for field_name, value in self.fields:
            if field_name == name:
                return value
        return None


type Value = IntVal | BoolVal | FunTag | RecordOf


@dataclass(frozen=True, slots=True)
class Closure:
    """Function paired with the environment it was defined in."""

    label: int
    env: Env


@dataclass(frozen=True, slots=True)
class EnvRecord:
    """Record of environment values."""

    fields: tuple[tuple[str, EnvValue], ...]

    def get(self, name: str) -> EnvValue | None:
        """Return the field's value, if present."""
        for field_name, value in self.fields:
            if field_name == name:
                return value
        return None


type EnvValue = Closure | IntVal | BoolVal | EnvRecord
type Env = tuple[tuple[str, EnvValue], ...]


def apply_operator(op: str, left: Value, right: Value) -> Value:
    """Apply a binary operator to two forced values."""
    match left, right:
        case IntVal(a), IntVal(b) if op in ARITHMETIC_OPS:
            return IntVal(a + b if op == "+" else a - b)
        case IntVal(a), IntVal(b) if op in COMPARISON_OPS:
            if op == "<":
                return BoolVal(a < b)
            return BoolVal(a <= b if op == "<=" else a >= b)
        case (IntVal(a), IntVal(b)) | (BoolVal(a), BoolVal(b)) if op in EQUALITY_OPS:
            return BoolVal(a == b)
        case BoolVal(a), BoolVal(b) if op in LOGICAL_OPS:
            if op == "and":
                return BoolVal(a and b)
            return BoolVal(a or b if op == "or" else a != b)
    msg = f"Operator {op} is undefined on {render_value(left)} and {render_value(right)}"
    raise TypeMismatchError(msg)


def project_value(record: Value, name: str) -> Value:
    """Project a field out of a forced record."""
    if isinstance(record, RecordOf) and (value := record.get(name)) is not None:
        return value
    msg = f"Cannot project field {name} out of {render_value(record)}"
    raise TypeMismatchError(msg)


def inspect_value(name: str, record: Value) -> BoolVal:
    """Test whether a forced record has a field."""
    if isinstance(record, RecordOf):
        return BoolVal(record.get(name) is not None)
    msg = f"Cannot inspect field {name} of {render_value(record)}"
    raise TypeMismatchError(msg)


def env_to_value(value: EnvValue) -> Value:
    """Erase environments, keeping function labels."""
    match value:
        case Closure(label=label):
            return FunTag(label)
        case EnvRecord(fields=fields):
            return RecordOf.create({name: env_to_value(inner) for name, inner in fields})
    return value


def render_value(value: Value) -> str:
    """Render a forced value."""
    match value:
        case IntVal(n):
            return str(n)
        case BoolVal(b):
            return "true" if b else "false"
        case FunTag(label):
            return f"<fun@{label}>"
        case RecordOf(fields):
            return "{" + "; ".join(f"{name} = {render_value(v)}" for name, v in fields) + "}"
    return repr(value)


def render_result(result: ResVal) -> str:
    """Render a lazy result, residuals as parenthesized expressions."""
    match result:
        case IntVal() | BoolVal():
            return render_value(result)
        case FunVal(label, stack):
            return f"<fun@{label} {stack}>"
        case ResidualOp(left, op, right):
            return f"({render_result(left)} {op} {render_result(right)})"
        case RecordVal(fields):
            return "{" + "; ".join(f"{name} = {render_result(v)}" for name, v in fields) + "}"
        case ResidualProj(record, field):
            return f"({render_result(record)}.{field})"
        case ResidualInspect(field, record):
            return f"({field} in {render_result(record)})"
    return repr(result)
