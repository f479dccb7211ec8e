"""Parser, labeled AST and static queries for the source language."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass
from functools import cache
from typing import ClassVar

from lark import Lark, Token, Tree
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput
from lark.visitors import Interpreter

from .const import CORE_KINDS, FUNCTIONAL_KINDS, PREDICATE_KINDS, NodeKind
from .exceptions import ParseError, UnknownLabelError, ValidationError

_LOGGER = logging.getLogger(__name__)

_GRAMMAR = r"""
    ?start: expr

    ?expr: "fun" NAME "->" expr                   -> fun
         | "let" NAME "=" expr "in" expr           -> let
         | "letassert" NAME "=" expr "in" expr     -> letassert
         | "if" expr "then" expr "else" expr       -> cond
         | disj

    ?disj: disj "or" conj                          -> or_op
         | disj "xor" conj                         -> xor_op
         | conj

    ?conj: conj "and" cmp                          -> and_op
         | cmp

    ?cmp: sum "=" sum                              -> eq_op
        | sum "<" sum                              -> lt_op
        | sum "<=" sum                             -> le_op
        | sum ">=" sum                             -> ge_op
        | sum

    ?sum: sum "+" app                              -> add_op
        | sum "-" app                              -> sub_op
        | app

    ?app: app postfix                              -> apply
        | postfix

    ?postfix: postfix "." NAME                     -> project
            | atom

    ?atom: NAME                                    -> var
         | INT                                     -> int
         | "true"                                  -> true
         | "false"                                 -> false
         | "(" NAME "in" expr ")"                  -> inspect
         | "{" [field (";" field)*] "}"            -> record
         | "(" expr ")"

    field: NAME "=" expr

    NAME: /[a-z_][A-Za-z0-9_']*/
    INT: /[0-9]+/
    COMMENT: /#[^\n]*/

    %import common.WS
    %ignore WS
    %ignore COMMENT
"""


@dataclass(frozen=True)
class Expr:
    """Labeled node of the source program."""

    kind: ClassVar[NodeKind]

    label: int
    """Dense pre-order label, unique within the program."""

    @property
    def children(self) -> tuple[Expr, ...]:
        """Direct sub-expressions, in source order."""
        return ()


@dataclass(frozen=True)
class Fun(Expr):
    """Function definition `fun x -> e`."""

    kind = NodeKind.FUN

    binder: str
    body: Expr

    @property
    def children(self) -> tuple[Expr, ...]:
        """Direct sub-expressions, in source order."""
        return (self.body,)


@dataclass(frozen=True)
class App(Expr):
    """Application `e1 e2`; its label is the call site pushed on stacks."""

    kind = NodeKind.APP

    fn: Expr
    arg: Expr

    @property
    def children(self) -> tuple[Expr, ...]:
        """Direct sub-expressions, in source order."""
        return (self.fn, self.arg)


@dataclass(frozen=True)
class Var(Expr):
    """Variable occurrence; its label is the initial context label of the lookup."""

    kind = NodeKind.VAR

    name: str


@dataclass(frozen=True)
class IntLit(Expr):
    """Integer literal."""

    kind = NodeKind.INT

    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    """Boolean literal."""

    kind = NodeKind.BOOL

    value: bool


@dataclass(frozen=True)
class BinOp(Expr):
    """Binary operation."""

    kind = NodeKind.BINOP

    op: str
    left: Expr
    right: Expr

    @property
    def children(self) -> tuple[Expr, ...]:
        """Direct sub-expressions, in source order."""
        return (self.left, self.right)


@dataclass(frozen=True)
class Cond(Expr):
    """Conditional `if e then e else e`."""

    kind = NodeKind.COND

    guard: Expr
    then: Expr
    otherwise: Expr

    def branch(self, *, taken: bool) -> Expr:
        """Return the branch selected by a guard value."""
        return self.then if taken else self.otherwise

    @property
    def children(self) -> tuple[Expr, ...]:
        """Direct sub-expressions, in source order."""
        return (self.guard, self.then, self.otherwise)


@dataclass(frozen=True)
class Record(Expr):
    """Record construction `{ l = e; ... }`."""

    kind = NodeKind.RECORD

    fields: tuple[tuple[str, Expr], ...]

    @property
    def children(self) -> tuple[Expr, ...]:
        """Direct sub-expressions, in source order."""
        return tuple(expr for _, expr in self.fields)


@dataclass(frozen=True)
class Project(Expr):
    """Record projection `e.l`."""

    kind = NodeKind.PROJECT

    record: Expr
    field: str

    @property
    def children(self) -> tuple[Expr, ...]:
        """Direct sub-expressions, in source order."""
        return (self.record,)


@dataclass(frozen=True)
class Inspect(Expr):
    """Record inspection `(l in e)`."""

    kind = NodeKind.INSPECT

    field: str
    record: Expr

    @property
    def children(self) -> tuple[Expr, ...]:
        """Direct sub-expressions, in source order."""
        return (self.record,)


@dataclass(frozen=True)
class LetAssert(Expr):
    """`letassert x = e in p`: the value of e, with predicate p asserted on it."""

    kind = NodeKind.LETASSERT

    binder: str
    bound: Expr
    predicate: Expr

    @property
    def children(self) -> tuple[Expr, ...]:
        """Direct sub-expressions, in source order."""
        return (self.bound, self.predicate)


def walk(expr: Expr) -> Iterator[Expr]:
    """Yield expr and all its descendants in pre-order."""
    pending = [expr]
    while pending:
        node = pending.pop()
        yield node
        pending.extend(reversed(node.children))


@dataclass(frozen=True)
class Program:
    """A validated program together with its static indices."""

    root: Expr
    label_index: Mapping[int, Expr]
    """Every node by label."""
    myfun_index: Mapping[int, int | None]
    """Nearest strictly enclosing function label, per node label."""
    depth_index: Mapping[int, int]
    """Number of functions between a variable occurrence and its binder."""
    binder_index: Mapping[str, int]
    """Label of the function or letassert binding each name."""

    def node(self, label: int) -> Expr:
        """Return the node with the given label."""
        try:
            return self.label_index[label]
        except KeyError as err:
            msg = f"Unknown label {label}"
            raise UnknownLabelError(msg) from err

    def fun(self, label: int) -> Fun:
        """Return the function node with the given label."""
        node = self.node(label)
        if not isinstance(node, Fun):
            msg = f"Label {label} is a {node.kind} node, not a function"
            raise UnknownLabelError(msg)
        return node

    def app(self, label: int) -> App:
        """Return the application node with the given label."""
        node = self.node(label)
        if not isinstance(node, App):
            msg = f"Label {label} is a {node.kind} node, not an application"
            raise UnknownLabelError(msg)
        return node

    @property
    def kinds(self) -> frozenset[NodeKind]:
        """Node kinds occurring in the program."""
        return frozenset(node.kind for node in self.label_index.values())

    def is_core(self) -> bool:
        """Whether only functions, applications, variables and literals occur."""
        return self.kinds <= CORE_KINDS

    def is_functional(self) -> bool:
        """Whether only functions, applications and variables occur."""
        return self.kinds <= FUNCTIONAL_KINDS

    def assertions(self) -> list[LetAssert]:
        """Return the letassert nodes in label order."""
        return [
            node
            for _, node in sorted(self.label_index.items())
            if isinstance(node, LetAssert)
        ]


def _binary(op: str) -> Callable[[_Labeler, Tree], Expr]:
    def build(self: _Labeler, tree: Tree) -> Expr:
        label = self.fresh()
        left, right = tree.children
        return BinOp(label, op, self.visit(left), self.visit(right))

    return build


class _Labeler(Interpreter):
    """Build Expr nodes from the parse tree, labeling them in pre-order."""

    def __init__(self) -> None:
        super().__init__()
        self._next = 0

    def fresh(self) -> int:
        label = self._next
        self._next += 1
        return label

    def fun(self, tree: Tree) -> Expr:
        label = self.fresh()
        name, body = tree.children
        return Fun(label, str(name), self.visit(body))

    def let(self, tree: Tree) -> Expr:
        # let x = e1 in e2  ==>  (fun x -> e2) e1
        name, bound, body = tree.children
        app_label = self.fresh()
        fun_label = self.fresh()
        fun = Fun(fun_label, str(name), self.visit(body))
        return App(app_label, fun, self.visit(bound))

    def letassert(self, tree: Tree) -> Expr:
        label = self.fresh()
        name, bound, predicate = tree.children
        return LetAssert(label, str(name), self.visit(bound), self.visit(predicate))

    def cond(self, tree: Tree) -> Expr:
        label = self.fresh()
        guard, then, otherwise = tree.children
        return Cond(label, self.visit(guard), self.visit(then), self.visit(otherwise))

    or_op = _binary("or")
    xor_op = _binary("xor")
    and_op = _binary("and")
    eq_op = _binary("=")
    lt_op = _binary("<")
    le_op = _binary("<=")
    ge_op = _binary(">=")
    add_op = _binary("+")
    sub_op = _binary("-")

    def apply(self, tree: Tree) -> Expr:
        label = self.fresh()
        fn, arg = tree.children
        return App(label, self.visit(fn), self.visit(arg))

    def project(self, tree: Tree) -> Expr:
        label = self.fresh()
        record, name = tree.children
        return Project(label, self.visit(record), str(name))

    def var(self, tree: Tree) -> Expr:
        (name,) = tree.children
        return Var(self.fresh(), str(name))

    def int(self, tree: Tree) -> Expr:
        (digits,) = tree.children
        return IntLit(self.fresh(), int(digits))

    def true(self, _tree: Tree) -> Expr:
        return BoolLit(self.fresh(), value=True)

    def false(self, _tree: Tree) -> Expr:
        return BoolLit(self.fresh(), value=False)

    def inspect(self, tree: Tree) -> Expr:
        label = self.fresh()
        name, record = tree.children
        return Inspect(label, str(name), self.visit(record))

    def record(self, tree: Tree) -> Expr:
        label = self.fresh()
        fields: list[tuple[str, Expr]] = []
        for item in tree.children:
            if item is None:
                continue
            name, expr = item.children
            if any(existing == name for existing, _ in fields):
                msg = f"Duplicate record field {name!s} at line {_line(name)}"
                raise ValidationError(msg)
            fields.append((str(name), self.visit(expr)))
        return Record(label, tuple(fields))


def _line(token: Token) -> int | None:
    return getattr(token, "line", None)


@cache
def _parser() -> Lark:
    return Lark(_GRAMMAR, parser="lalr", maybe_placeholders=True)


def _check_scopes(root: Expr) -> tuple[dict[str, int], dict[int, int | None], dict[int, int]]:
    binders: dict[str, int] = {}
    myfun: dict[int, int | None] = {}
    depth: dict[int, int] = {}

    # (node, enclosing function label, scope chain of (name, binder label, is_function))
    pending: list[tuple[Expr, int | None, tuple[tuple[str, int, bool], ...]]] = [
        (root, None, ())
    ]
    while pending:
        node, enclosing, scope = pending.pop()
        myfun[node.label] = enclosing
        match node:
            case Fun(binder=name) | LetAssert(binder=name):
                if name in binders:
                    msg = f"Duplicate binder {name} (labels {binders[name]} and {node.label})"
                    raise ValidationError(msg)
                binders[name] = node.label
            case Var(name=name):
                crossed = 0
                for bound_name, _, is_function in reversed(scope):
                    if bound_name == name:
                        break
                    crossed += is_function
                else:
                    msg = f"Unbound variable {name} (label {node.label})"
                    raise ValidationError(msg)
                depth[node.label] = crossed

        match node:
            case Fun(label=label, binder=name, body=body):
                pending.append((body, label, (*scope, (name, label, True))))
            case LetAssert(label=label, binder=name, bound=bound, predicate=predicate):
                _check_predicate(node)
                pending.append((predicate, enclosing, ((name, label, False),)))
                pending.append((bound, enclosing, scope))
            case _:
                pending.extend((child, enclosing, scope) for child in reversed(node.children))
    return binders, myfun, depth


def _check_predicate(node: LetAssert) -> None:
    for inner in walk(node.predicate):
        if inner.kind not in PREDICATE_KINDS:
            msg = (
                f"letassert {node.binder}: predicate may only use literals, operators "
                f"and {node.binder}, found {inner.kind} at label {inner.label}"
            )
            raise ValidationError(msg)


def build_program(root: Expr) -> Program:
    """Validate a labeled tree and compute its static indices."""
    label_index: dict[int, Expr] = {}
    for node in walk(root):
        assert node.label not in label_index, f"Label {node.label} is not unique"
        label_index[node.label] = node
    binders, myfun, depth = _check_scopes(root)
    return Program(
        root=root,
        label_index=label_index,
        myfun_index=myfun,
        depth_index=depth,
        binder_index=binders,
    )


def parse_program(text: str) -> Program:
    """Parse and validate a program."""
    try:
        tree = _parser().parse(text)
    except UnexpectedEOF as err:
        msg = "Unexpected end of input"
        raise ParseError(msg) from err
    except (UnexpectedCharacters, UnexpectedInput) as err:
        msg = f"Syntax error at line {err.line}, column {err.column}"
        raise ParseError(msg, err.line, err.column) from err

    root = _Labeler().visit(tree)
    program = build_program(root)
    _LOGGER.debug("Parsed program with %s labels", len(program.label_index))
    return program


def my_fun(program: Program, label: int) -> int | None:
    """Return the label of the innermost function strictly enclosing label."""
    program.node(label)
    return program.myfun_index[label]


def lexical_depth(program: Program, label: int) -> int:
    """Return the number of functions between a variable occurrence and its binder."""
    node = program.node(label)
    if not isinstance(node, Var):
        msg = f"Label {label} is a {node.kind} node, not a variable occurrence"
        raise UnknownLabelError(msg)
    return program.depth_index[label]


def pretty(expr: Expr) -> str:  # noqa: PLR0911
    """Print an expression so that it parses back to the identical labeled tree."""
    match expr:
        case Fun(binder=binder, body=body):
            return f"(fun {binder} -> {pretty(body)})"
        case App(fn=fn, arg=arg):
            return f"({pretty(fn)} {pretty(arg)})"
        case Var(name=name):
            return name
        case IntLit(value=value):
            return str(value) if value >= 0 else f"(0 - {-value})"
        case BoolLit(value=value):
            return "true" if value else "false"
        case BinOp(op=op, left=left, right=right):
            return f"({pretty(left)} {op} {pretty(right)})"
        case Cond(guard=guard, then=then, otherwise=otherwise):
            return f"(if {pretty(guard)} then {pretty(then)} else {pretty(otherwise)})"
        case Record(fields=fields):
            return "{" + "; ".join(f"{name} = {pretty(value)}" for name, value in fields) + "}"
        case Project(record=record, field=field):
            return f"{pretty(record)}.{field}"
        case Inspect(field=field, record=record):
            return f"({field} in {pretty(record)})"
        case LetAssert(binder=binder, bound=bound, predicate=predicate):
            return f"(letassert {binder} = {pretty(bound)} in {pretty(predicate)})"
    msg = f"Cannot print {expr!r}"
    raise TypeError(msg)


def dump_ast(program: Program) -> str:
    """Render one `label<TAB>kind<TAB>children` line per node, in label order."""
    lines = []
    for label, node in sorted(program.label_index.items()):
        children = ",".join(str(child.label) for child in node.children)
        lines.append(f"{label}\t{node.kind}\t{children}")
    return "\n".join(lines) + "\n"
