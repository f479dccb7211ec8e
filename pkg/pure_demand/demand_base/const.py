"""Constants."""

from enum import StrEnum


class NodeKind(StrEnum):
    """Kinds of source program nodes."""

    APP = "app"
    FUN = "fun"
    VAR = "var"
    INT = "int"
    BOOL = "bool"
    BINOP = "binop"
    COND = "cond"
    RECORD = "record"
    PROJECT = "project"
    INSPECT = "inspect"
    LETASSERT = "letassert"


CORE_KINDS = frozenset(
    {NodeKind.APP, NodeKind.FUN, NodeKind.VAR, NodeKind.INT, NodeKind.BOOL}
)
"""Node kinds accepted by the chaining, display and optimized semantics."""

FUNCTIONAL_KINDS = frozenset({NodeKind.APP, NodeKind.FUN, NodeKind.VAR})
"""Node kinds accepted by the core analyses."""

PREDICATE_KINDS = frozenset(
    {NodeKind.VAR, NodeKind.INT, NodeKind.BOOL, NodeKind.BINOP}
)
"""Node kinds allowed inside a letassert predicate."""

ARITHMETIC_OPS = frozenset({"+", "-"})
COMPARISON_OPS = frozenset({"<", "<=", ">="})
EQUALITY_OPS = frozenset({"="})
LOGICAL_OPS = frozenset({"and", "or", "xor"})
OPERATORS = ARITHMETIC_OPS | COMPARISON_OPS | EQUALITY_OPS | LOGICAL_OPS

RULE_VALUE = "Value"
RULE_VAR_LOCAL = "Var Local"
RULE_VAR_NON_LOCAL = "Var Non-Local"
RULE_VAR_CHAIN = "Var Chain"
RULE_VAR_DISPLAY = "Var Display"
RULE_VAR_STUB = "Var Stub"
RULE_APPLICATION = "Application"
RULE_APP_STUB = "App Stub"
RULE_OPERATION = "Operation"
RULE_RECORD = "Record"
RULE_PROJECT = "Project"
RULE_INSPECT = "Inspect"
RULE_CONDITIONAL = "Conditional"
RULE_LETASSERT = "Letassert"

DEFAULT_K = 2
DEFAULT_EVAL_DEPTH = 3
DEFAULT_FUEL = 10_000_000
DEFAULT_NODE_BUDGET = 1_000_000
DEFAULT_SINGLE_PATH_BUDGET = 200_000
DEFAULT_SOLVER_TIMEOUT_MS = 10_000

MAX_CONCRETE_VALUES = 4096
"""Cap on the size of a bounded evaluation result before it is widened."""

MAX_DISTRIBUTED_ATOMS = 64
"""Largest operand product that simplification distributes into a set."""

MAX_REWRITES = 100_000

RECURSION_LIMIT = 60_000
