"""
Constrained Horn clauses for abstract results.

Every result set and atom becomes a unary predicate X_id over the values it
can take. A labeled set and the stubs pointing back at it share one
predicate, so recurrences come out as self-referential clauses. A property
of the root result is checked by adding the clause `X_root(v) and not P(v) =>
false`: if the solver answers sat, the property holds.
"""

from __future__ import annotations

import logging
import shlex
import subprocess
import tempfile
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from itertools import product
from pathlib import Path
from typing import TYPE_CHECKING

from .abstract import (
    AbsAtom,
    AbsRes,
    BoolAtom,
    FunAtom,
    Guarded,
    InspectAtom,
    IntAtom,
    Labeled,
    OpAtom,
    ProjAtom,
    RecordAtom,
    Site,
    Stub,
    render_inline,
    single,
)
from .const import (
    ARITHMETIC_OPS,
    COMPARISON_OPS,
    DEFAULT_SOLVER_TIMEOUT_MS,
    EQUALITY_OPS,
    LOGICAL_OPS,
)
from .exceptions import (
    ChcSortError,
    ChcTranslationError,
    TypeMismatchError,
    UnsupportedConstructError,
)
from .interpreters import check_predicate
from .resval import abs_eval, simplify
from .stack import recursion_headroom
from .syntax_core import BinOp, BoolLit, Expr, IntLit, LetAssert, Var
from .values import BoolVal, IntVal, apply_operator

if TYPE_CHECKING:
    from .analyzer import AnalyzeConfig

_LOGGER = logging.getLogger(__name__)

SORT_INT = "Int"
SORT_BOOL = "Bool"


class Verdict(StrEnum):
    """Outcome of checking a property with the solver."""

    VERIFIED = "verified"
    REFUTED_OR_UNKNOWN = "refuted-or-unknown"
    SOLVER_UNAVAILABLE = "solver-unavailable"
    TIMEOUT = "timeout"


@dataclass(frozen=True, kw_only=True)
class SolverConfig:
    """External Horn clause solver invocation."""

    path: str
    """Executable, optionally followed by arguments; the clause file is appended."""
    timeout_ms: int = DEFAULT_SOLVER_TIMEOUT_MS


@dataclass(frozen=True)
class TVar:
    """Clause variable."""

    name: str


@dataclass(frozen=True)
class TLit:
    """Integer or boolean literal."""

    value: int | bool


@dataclass(frozen=True)
class TOp:
    """Binary operator term."""

    op: str
    left: Term
    right: Term


@dataclass(frozen=True)
class TNot:
    """Boolean negation."""

    term: Term


type Term = TVar | TLit | TOp | TNot


@dataclass(frozen=True)
class PredApp:
    """Application of predicate X_pred to a term."""

    pred: int
    arg: Term


@dataclass(frozen=True)
class Constraint:
    """Boolean term that must hold."""

    term: Term


type BodyItem = PredApp | Constraint


@dataclass(frozen=True)
class Clause:
    """Horn clause: the conjunction of body implies head, or false if head is None."""

    variables: tuple[str, ...]
    body: tuple[BodyItem, ...]
    head: PredApp | None

    @property
    def is_query(self) -> bool:
        """Whether the head is false."""
        return self.head is None

    def predicates(self) -> Iterator[int]:
        """Yield the predicates used, body first."""
        for item in self.body:
            if isinstance(item, PredApp):
                yield item.pred
        if self.head is not None:
            yield self.head.pred


@dataclass(frozen=True)
class ChcSystem:
    """Clauses of one result together with the predicate of its root."""

    clauses: tuple[Clause, ...]
    root: int
    origins: Mapping[int, str] = field(default_factory=dict)
    """Rendering of the result each predicate was created for."""
    site_preds: Mapping[Site, int] = field(default_factory=dict)
    """Predicate shared by the labeled set and the stubs of each site."""


class _ClauseBuilder:
    """Allocates clause-local variables v0, v1, ..."""

    def __init__(self) -> None:
        self.variables: list[str] = []
        self.body: list[BodyItem] = []

    def holds(self, pred: int) -> TVar:
        var = TVar(f"v{len(self.variables)}")
        self.variables.append(var.name)
        self.body.append(PredApp(pred, var))
        return var

    def conditions(self, conds: tuple[tuple[int, bool], ...]) -> None:
        for pred, value in conds:
            var = self.holds(pred)
            self.body.append(Constraint(TOp("=", var, TLit(value))))

    def build(self, head: PredApp | None) -> Clause:
        return Clause(tuple(self.variables), tuple(self.body), head)


type Conds = tuple[tuple[int, bool], ...]


class _Translator:
    """Walks a result once, emitting clauses and sharing predicates per site."""

    def __init__(self) -> None:
        self.clauses: list[Clause] = []
        self.origins: dict[int, str] = {}
        self.site_preds: dict[Site, int] = {}
        self._memo: dict[tuple[int, Conds, frozenset[Site]], tuple[AbsRes, int]] = {}
        self._labeled: set[tuple[Site, int, Conds, frozenset[Site]]] = set()
        self._open: set[Site] = set()
        self._keep: list[AbsRes] = []

    def _fresh(self, origin: str) -> int:
        pred = len(self.origins)
        self.origins[pred] = origin
        return pred

    def _site(self, site: Site) -> int:
        if (pred := self.site_preds.get(site)) is None:
            pred = self.site_preds[site] = self._fresh(f"site {site}")
        return pred

    def res(
        self,
        result: AbsRes,
        conds: Conds,
        parents: frozenset[Site],
        target: int | None = None,
    ) -> int:
        key = (id(result), conds, parents)
        if target is None and (hit := self._memo.get(key)) is not None and hit[0] is result:
            return hit[1]
        if target is None:
            target = self._fresh(render_inline(result))
            self._memo[key] = (result, target)
        for atom in result.atoms:
            if (source := self.atom(atom, conds, parents)) is None:
                continue
            builder = _ClauseBuilder()
            var = builder.holds(source)
            builder.conditions(conds)
            self.clauses.append(builder.build(PredApp(target, var)))
        return target

    def atom(self, atom: AbsAtom, conds: Conds, parents: frozenset[Site]) -> int | None:  # noqa: PLR0911
        match atom:
            case IntAtom(value=value) | BoolAtom(value=value):
                pred = self._fresh(render_inline(single(atom)))
                builder = _ClauseBuilder()
                builder.conditions(conds)
                self.clauses.append(builder.build(PredApp(pred, TLit(value))))
                return pred
            case FunAtom() | RecordAtom():
                return None
            case ProjAtom() | InspectAtom():
                msg = f"Cannot translate {render_inline(single(atom))}: simplify it away first"
                raise ChcTranslationError(msg)
            case Labeled(inner=inner, site=site):
                pred = self._site(site)
                key = (site, id(inner), conds, parents)
                if key not in self._labeled:
                    self._labeled.add(key)
                    self._keep.append(inner)
                    self.res(inner, conds, parents | {site}, pred)
                return pred
            case Stub(site=site):
                pred = self._site(site)
                if site not in parents and site not in self._open:
                    self._open.add(site)
                    self.clauses.append(Clause(("v0",), (), PredApp(pred, TVar("v0"))))
                return pred
            case Guarded(guard=guard, inner=inner):
                condition = self.res(guard.result, conds, parents)
                return self.res(inner, (*conds, (condition, guard.value)), parents)
            case OpAtom(left=left, op=op, right=right):
                for side in (left, right):
                    for operand in side.atoms:
                        if isinstance(operand, FunAtom | RecordAtom):
                            msg = (
                                f"{render_inline(single(operand))} in operand position "
                                f"of {op} cannot be translated"
                            )
                            raise ChcTranslationError(msg)
                left_pred = self.res(left, conds, parents)
                right_pred = self.res(right, conds, parents)
                pred = self._fresh(render_inline(single(atom)))
                builder = _ClauseBuilder()
                x = builder.holds(left_pred)
                y = builder.holds(right_pred)
                builder.conditions(conds)
                self.clauses.append(builder.build(PredApp(pred, TOp(op, x, y))))
                return pred
        msg = f"Unknown atom {atom!r}"
        raise ChcTranslationError(msg)


def to_chc(result: AbsRes) -> ChcSystem:
    """Translate a result to Horn clauses whose least model is its value set."""
    translator = _Translator()
    with recursion_headroom():
        root = translator.res(result, (), frozenset())
    return ChcSystem(
        tuple(translator.clauses), root, dict(translator.origins), dict(translator.site_preds)
    )


class _SortInference:
    """Union-find over predicates and clause variables, with Int/Bool sorts at roots."""

    def __init__(self, origins: Mapping[int, str]) -> None:
        self._origins = origins
        self._parent: dict[tuple, tuple] = {}
        self._sort: dict[tuple, str] = {}

    def find(self, node: tuple) -> tuple:
        self._parent.setdefault(node, node)
        while (up := self._parent[node]) != node:
            self._parent[node] = self._parent[up]
            node = up
        return node

    def _describe(self, node: tuple) -> str:
        members = sorted(n for n in self._parent if n[0] == "pred" and self.find(n) == node)
        if not members:
            return "of a clause variable"
        pred = members[0][1]
        return f"X_{pred} ({self._origins.get(pred, '?')})"

    def _conflict(self, node: tuple) -> ChcSortError:
        msg = f"Predicate {self._describe(node)} is used at both Int and Bool"
        return ChcSortError(msg)

    def unify(self, a: tuple | str, b: tuple | str) -> None:
        if isinstance(a, str) and isinstance(b, str):
            if a != b:
                msg = f"Sort mismatch between {a} and {b}"
                raise ChcSortError(msg)
            return
        if isinstance(a, str):
            a, b = b, a
        root = self.find(a)  # type: ignore[arg-type]
        if isinstance(b, str):
            if self._sort.setdefault(root, b) != b:
                raise self._conflict(root)
            return
        other = self.find(b)
        if root == other:
            return
        self._parent[other] = root
        if (moved := self._sort.pop(other, None)) is not None and self._sort.setdefault(
            root, moved
        ) != moved:
            raise self._conflict(root)

    def term(self, term: Term, clause: int) -> tuple | str:
        match term:
            case TVar(name=name):
                return ("var", clause, name)
            case TLit(value=value):
                return SORT_BOOL if isinstance(value, bool) else SORT_INT
            case TNot(term=inner):
                self.unify(self.term(inner, clause), SORT_BOOL)
                return SORT_BOOL
            case TOp(op=op, left=left, right=right):
                a, b = self.term(left, clause), self.term(right, clause)
                if op in ARITHMETIC_OPS or op in COMPARISON_OPS:
                    self.unify(a, SORT_INT)
                    self.unify(b, SORT_INT)
                    return SORT_INT if op in ARITHMETIC_OPS else SORT_BOOL
                if op in LOGICAL_OPS:
                    self.unify(a, SORT_BOOL)
                    self.unify(b, SORT_BOOL)
                    return SORT_BOOL
                if op in EQUALITY_OPS:
                    self.unify(a, b)
                    return SORT_BOOL
        msg = f"Unknown term {term!r}"
        raise ChcTranslationError(msg)

    def sort_of(self, node: tuple) -> str:
        return self._sort.get(self.find(node), SORT_INT)


def _infer_sorts(
    clauses: list[Clause], origins: Mapping[int, str]
) -> tuple[dict[int, str], list[dict[str, str]]]:
    inference = _SortInference(origins)
    for index, clause in enumerate(clauses):
        for item in clause.body:
            if isinstance(item, PredApp):
                inference.unify(("pred", item.pred), inference.term(item.arg, index))
            else:
                inference.unify(inference.term(item.term, index), SORT_BOOL)
        if clause.head is not None:
            inference.unify(("pred", clause.head.pred), inference.term(clause.head.arg, index))
    preds = sorted({pred for clause in clauses for pred in clause.predicates()})
    pred_sorts = {pred: inference.sort_of(("pred", pred)) for pred in preds}
    var_sorts = [
        {name: inference.sort_of(("var", index, name)) for name in clause.variables}
        for index, clause in enumerate(clauses)
    ]
    return pred_sorts, var_sorts


def predicate_sorts(system: ChcSystem) -> dict[int, str]:
    """Return the inferred argument sort of every predicate of a system."""
    return _infer_sorts(list(system.clauses), system.origins)[0]


_SMT_OPS = {"and": "and", "or": "or", "xor": "xor", "=": "="}


def _term_text(term: Term) -> str:
    match term:
        case TVar(name=name):
            return name
        case TLit(value=bool() as value):
            return "true" if value else "false"
        case TLit(value=value):
            return str(value) if value >= 0 else f"(- {-value})"
        case TNot(term=inner):
            return f"(not {_term_text(inner)})"
        case TOp(op=op, left=left, right=right):
            return f"({_SMT_OPS.get(op, op)} {_term_text(left)} {_term_text(right)})"
    msg = f"Unknown term {term!r}"
    raise ChcTranslationError(msg)


def _item_text(item: BodyItem | None) -> str:
    match item:
        case None:
            return "false"
        case PredApp(pred=pred, arg=arg):
            return f"(X_{pred} {_term_text(arg)})"
        case Constraint(term=term):
            return _term_text(term)
    msg = f"Unknown clause item {item!r}"
    raise ChcTranslationError(msg)


def _clause_text(clause: Clause, sorts: Mapping[str, str]) -> str:
    head = _item_text(clause.head)
    if not clause.body:
        formula = head
    elif len(clause.body) == 1:
        formula = f"(=> {_item_text(clause.body[0])} {head})"
    else:
        body = " ".join(_item_text(item) for item in clause.body)
        formula = f"(=> (and {body}) {head})"
    if not clause.variables:
        return formula
    bound = " ".join(f"({name} {sorts[name]})" for name in clause.variables)
    return f"(forall ({bound}) {formula})"


def emit_smtlib(system: ChcSystem, query: Clause | None = None) -> str:
    """Render clauses, and the query if any, as an SMT-LIB HORN problem."""
    clauses = [*system.clauses, *([query] if query is not None else [])]
    pred_sorts, var_sorts = _infer_sorts(clauses, system.origins)
    lines = ["(set-logic HORN)"]
    lines.extend(f"(declare-fun X_{pred} ({sort}) Bool)" for pred, sort in pred_sorts.items())
    lines.extend(
        f"(assert {_clause_text(clause, sorts)})"
        for clause, sorts in zip(clauses, var_sorts, strict=True)
    )
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def solve(
    system: ChcSystem,
    query: Clause | None,
    solver_path: str,
    timeout_ms: int = DEFAULT_SOLVER_TIMEOUT_MS,
) -> Verdict:
    """Run the external solver on the clauses plus query."""
    if timeout_ms <= 0:
        return Verdict.TIMEOUT
    text = emit_smtlib(system, query)
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as handle:
        handle.write(text)
    path = Path(handle.name)
    try:
        completed = subprocess.run(  # noqa: S603
            [*shlex.split(solver_path), str(path)],
            capture_output=True,
            text=True,
            timeout=timeout_ms / 1000,
            check=False,
        )
    except subprocess.TimeoutExpired:
        _LOGGER.info("Solver timed out after %s ms", timeout_ms)
        return Verdict.TIMEOUT
    except OSError as err:
        _LOGGER.warning("Solver %s could not be started: %s", solver_path, err)
        return Verdict.SOLVER_UNAVAILABLE
    finally:
        path.unlink(missing_ok=True)
    answer = completed.stdout.strip().splitlines()[0] if completed.stdout.strip() else ""
    if answer == "sat":
        return Verdict.VERIFIED
    if answer in ("unsat", "unknown"):
        return Verdict.REFUTED_OR_UNKNOWN
    if answer == "timeout":
        return Verdict.TIMEOUT
    _LOGGER.warning(
        "Solver exited with code %s and no verdict: %s",
        completed.returncode,
        completed.stderr.strip() or completed.stdout.strip(),
    )
    return Verdict.SOLVER_UNAVAILABLE


def predicate_term(expr: Expr, value: Term) -> Term:
    """Translate a letassert predicate, its binder standing for value."""
    match expr:
        case Var():
            return value
        case IntLit(value=n):
            return TLit(n)
        case BoolLit(value=b):
            return TLit(b)
        case BinOp(op=op, left=left, right=right):
            return TOp(op, predicate_term(left, value), predicate_term(right, value))
    msg = f"Unsupported predicate construct {expr.kind}"
    raise UnsupportedConstructError(msg)


def protected_query(system: ChcSystem, assertion: LetAssert) -> Clause:
    """Return the clause `X_root(v0) and not P(v0) => false`."""
    var = TVar("v0")
    return Clause(
        ("v0",),
        (
            PredApp(system.root, var),
            Constraint(TNot(predicate_term(assertion.predicate, var))),
        ),
        None,
    )


def _bounded_verdict(result: AbsRes, assertion: LetAssert, depth: int) -> Verdict:
    conc = abs_eval(result, depth)
    if conc.widened:
        return Verdict.REFUTED_OR_UNKNOWN
    try:
        holds = all(check_predicate(assertion, value) for value in conc.values)
    except TypeMismatchError:
        return Verdict.REFUTED_OR_UNKNOWN
    return Verdict.VERIFIED if holds else Verdict.REFUTED_OR_UNKNOWN


def verify_letassert(result: AbsRes, assertion: LetAssert, cfg: AnalyzeConfig) -> Verdict:
    """Check that every value of result satisfies the assertion's predicate."""
    simplified = simplify(result)
    if cfg.solver is None:
        return _bounded_verdict(simplified, assertion, cfg.eval_depth)
    try:
        system = to_chc(simplified)
        query = protected_query(system, assertion)
        emit_smtlib(system, query)
    except ChcTranslationError as err:
        _LOGGER.info("letassert %s checked by bounded evaluation: %s", assertion.binder, err)
        return _bounded_verdict(simplified, assertion, cfg.eval_depth)
    return solve(system, query, cfg.solver.path, cfg.solver.timeout_ms)


def exclusion_verdict(result: AbsRes, value: bool, solver: SolverConfig) -> Verdict:  # noqa: FBT001
    """Ask the solver whether result can never be the boolean value."""
    system = to_chc(simplify(result))
    var = TVar("v0")
    query = Clause(
        ("v0",),
        (PredApp(system.root, var), Constraint(TOp("=", var, TLit(value)))),
        None,
    )
    emit_smtlib(system, query)
    return solve(system, query, solver.path, solver.timeout_ms)


@dataclass(frozen=True)
class LeastModel:
    """Facts derived by bottom-up saturation."""

    facts: Mapping[int, frozenset[IntVal | BoolVal]]
    complete: bool
    """False when saturation was cut off or a clause could not be enumerated."""

    def values(self, pred: int) -> frozenset[IntVal | BoolVal]:
        """Return the facts of a predicate."""
        return self.facts.get(pred, frozenset())


def _evaluate(term: Term, env: Mapping[str, IntVal | BoolVal]) -> IntVal | BoolVal:
    match term:
        case TVar(name=name):
            return env[name]
        case TLit(value=bool() as value):
            return BoolVal(value)
        case TLit(value=value):
            return IntVal(value)
        case TNot(term=inner):
            operand = _evaluate(inner, env)
            if not isinstance(operand, BoolVal):
                msg = "Negation of a non-boolean"
                raise TypeMismatchError(msg)
            return BoolVal(not operand.value)
        case TOp(op=op, left=left, right=right):
            return apply_operator(op, _evaluate(left, env), _evaluate(right, env))  # type: ignore[return-value]
    msg = f"Unknown term {term!r}"
    raise ChcTranslationError(msg)


def _bindings(
    clause: Clause, facts: Mapping[int, set[IntVal | BoolVal]]
) -> Iterator[dict[str, IntVal | BoolVal]]:
    apps = [item for item in clause.body if isinstance(item, PredApp)]
    constraints = [item for item in clause.body if isinstance(item, Constraint)]
    choices = [sorted(facts.get(app.pred, ()), key=repr) for app in apps]
    for combo in product(*choices):
        env: dict[str, IntVal | BoolVal] = {}
        consistent = True
        for app, value in zip(apps, combo, strict=True):
            if not isinstance(app.arg, TVar) or env.setdefault(app.arg.name, value) != value:
                consistent = False
                break
        if not consistent:
            continue
        try:
            if all(_evaluate(c.term, env) == BoolVal(True) for c in constraints):  # noqa: FBT003
                yield env
        except TypeMismatchError:
            continue


def least_model(system: ChcSystem, max_rounds: int = 64, max_facts: int = 4096) -> LeastModel:
    """Saturate the clauses bottom-up, for small systems and as a test oracle."""
    facts: dict[int, set[IntVal | BoolVal]] = {}
    complete = True
    for _ in range(max_rounds):
        changed = False
        for clause in system.clauses:
            if clause.head is None:
                continue
            for env in list(_bindings(clause, facts)):
                try:
                    value = _evaluate(clause.head.arg, env)
                except KeyError:
                    complete = False
                    break
                except TypeMismatchError:
                    continue
                known = facts.setdefault(clause.head.pred, set())
                if value not in known:
                    known.add(value)
                    changed = True
            if sum(len(found) for found in facts.values()) > max_facts:
                return LeastModel({p: frozenset(v) for p, v in facts.items()}, complete=False)
        if not changed:
            break
    else:
        complete = False
    return LeastModel({p: frozenset(v) for p, v in facts.items()}, complete)
