"""
Concrete big-step semantics.

The pure demand interpreter keeps nothing but a stack of call-site labels:
variables are looked up by walking back to the call that bound them. The
environment interpreter is the conventional closure semantics used as the
reference. Chaining, display and optimized-frame interpreters are alternative
formulations of the demand semantics defined for the core language only.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Callable
from dataclasses import dataclass, field

from .const import (
    CORE_KINDS,
    DEFAULT_FUEL,
    RULE_APPLICATION,
    RULE_CONDITIONAL,
    RULE_INSPECT,
    RULE_LETASSERT,
    RULE_OPERATION,
    RULE_PROJECT,
    RULE_RECORD,
    RULE_VALUE,
    RULE_VAR_CHAIN,
    RULE_VAR_DISPLAY,
    RULE_VAR_LOCAL,
    RULE_VAR_NON_LOCAL,
)
from .exceptions import (
    FuelExhaustedError,
    MalformedDisplayError,
    NestingLimitError,
    StuckError,
    TypeMismatchError,
    UnsupportedConstructError,
)
from .stack import Stack, StackArena, recursion_headroom
from .syntax_core import (
    App,
    BinOp,
    BoolLit,
    Cond,
    Expr,
    Fun,
    Inspect,
    IntLit,
    LetAssert,
    Program,
    Project,
    Record,
    Var,
)
from .values import (
    BoolVal,
    Closure,
    Env,
    EnvRecord,
    EnvValue,
    FunTag,
    FunVal,
    IntVal,
    RecordOf,
    RecordVal,
    ResidualInspect,
    ResidualOp,
    ResidualProj,
    ResVal,
    Value,
    apply_operator,
    env_to_value,
    inspect_value,
    project_value,
)

_LOGGER = logging.getLogger(__name__)

type TraceCallback = Callable[[str], None]
type CacheKey = tuple[Stack, int, str | None]


@dataclass(frozen=True, kw_only=True)
class EvalOptions:
    """Options shared by the concrete interpreters."""

    cache: bool = True
    """Memoize demand lookups by (stack, label) and forcing by result identity."""
    fuel: int | None = DEFAULT_FUEL
    """Maximum number of rule firings, or None for no limit."""
    skip_arg: bool = False
    """Do not evaluate arguments at applications (stack-based semantics only)."""
    trace: TraceCallback | None = None
    """Receives one `RULE<TAB>label<TAB>stack` line per rule firing."""


@dataclass
class EvalStats:
    """Instrumentation counters of one interpreter session."""

    rule_firings: Counter[str] = field(default_factory=Counter)
    cache_hits: int = 0
    cache_misses: int = 0
    force_cache_hits: int = 0
    function_position_lookups: int = 0
    """Function-position evaluations performed on behalf of non-local lookups."""
    key_evaluations: Counter[CacheKey] = field(default_factory=Counter)
    """Uncached evaluations per cache key (cache enabled only)."""
    assertions: list[tuple[int, bool]] = field(default_factory=list)
    """letassert outcomes as (label, predicate holds)."""
    branches: dict[int, set[bool]] = field(default_factory=dict)
    """Branches taken per conditional label."""

    @property
    def total_firings(self) -> int:
        """Total number of rule firings."""
        return self.rule_firings.total()

    @property
    def application_firings(self) -> int:
        """Number of Application rule firings."""
        return self.rule_firings[RULE_APPLICATION]


def check_predicate(assertion: LetAssert, value: Value) -> bool:
    """Evaluate a letassert predicate with its binder bound to a forced value."""

    def evaluate(expr: Expr) -> Value:
        match expr:
            case Var():
                return value
            case IntLit(value=n):
                return IntVal(n)
            case BoolLit(value=b):
                return BoolVal(b)
            case BinOp(op=op, left=left, right=right):
                return apply_operator(op, evaluate(left), evaluate(right))
        msg = f"Unsupported predicate construct {expr.kind}"
        raise UnsupportedConstructError(msg)

    outcome = evaluate(assertion.predicate)
    if not isinstance(outcome, BoolVal):
        msg = f"letassert {assertion.binder}: predicate is not boolean"
        raise TypeMismatchError(msg)
    return outcome.value


class Forcer:
    """Reduces lazy results to values, optionally caching by result identity."""

    def __init__(self, stats: EvalStats | None = None, *, cache: bool = False) -> None:
        """Create a forcer."""
        self._stats = stats
        self._cache: dict[int, tuple[ResVal, Value]] | None = {} if cache else None

    def force(self, result: ResVal) -> Value:
        """Return the value of a lazy result."""
        if self._cache is None:
            return self._force(result)
        if (hit := self._cache.get(id(result))) is not None and hit[0] is result:
            if self._stats is not None:
                self._stats.force_cache_hits += 1
            return hit[1]
        value = self._force(result)
        self._cache[id(result)] = (result, value)
        return value

    def _force(self, result: ResVal) -> Value:
        match result:
            case IntVal() | BoolVal():
                return result
            case FunVal(label=label):
                return FunTag(label)
            case ResidualOp(left=left, op=op, right=right):
                return apply_operator(op, self.force(left), self.force(right))
            case RecordVal(fields=fields):
                return RecordOf.create({name: self.force(value) for name, value in fields})
            case ResidualProj(record=record, field=name):
                return project_value(self.force(record), name)
            case ResidualInspect(field=name, record=record):
                return inspect_value(name, self.force(record))
        msg = f"Cannot force {result!r}"
        raise TypeMismatchError(msg)


def force(result: ResVal) -> Value:
    """Return the value of a lazy result."""
    return Forcer().force(result)


class _Session:
    """Fuel, counters and tracing shared by all interpreters."""

    semantics = ""

    def __init__(self, program: Program, options: EvalOptions | None = None) -> None:
        self.program = program
        self.options = options or EvalOptions()
        self.stats = EvalStats()
        self.arena = StackArena()
        self._fuel_left = self.options.fuel

    def _fire(self, rule: str, label: int, where: object) -> None:
        self.stats.rule_firings[rule] += 1
        if self._fuel_left is not None:
            if self._fuel_left <= 0:
                msg = f"Fuel exhausted after {self.stats.total_firings - 1} rule firings"
                raise FuelExhaustedError(msg)
            self._fuel_left -= 1
        if self.options.trace is not None:
            self.options.trace(f"{rule}\t{label}\t{where}")

    def _require_core(self) -> None:
        if not self.program.is_core():
            unsupported = sorted(self.program.kinds - CORE_KINDS)
            msg = f"{', '.join(unsupported)} unsupported in the {self.semantics} semantics"
            raise UnsupportedConstructError(msg)

    def _start(self) -> Expr:
        self._require_core()
        return self.program.root

    def run(self) -> object:
        """Evaluate the program."""
        root = self._start()
        with recursion_headroom():
            try:
                result = self._run(root)
            except RecursionError as err:
                msg = f"Evaluation nested too deeply in the {self.semantics} semantics"
                raise NestingLimitError(msg) from err
        _LOGGER.debug(
            "%s semantics: %s rule firings, %s cache hits",
            self.semantics,
            self.stats.total_firings,
            self.stats.cache_hits,
        )
        return result

    def _run(self, root: Expr) -> object:
        raise NotImplementedError


class DemandInterpreter(_Session):
    """Pure demand semantics: the call stack is the only state."""

    semantics = "demand"

    def __init__(self, program: Program, options: EvalOptions | None = None) -> None:
        """Create a session with its own stack arena and caches."""
        super().__init__(program, options)
        self._lookup_cache: dict[CacheKey, ResVal] = {}
        self.forcer = Forcer(self.stats, cache=self.options.cache)

    def _start(self) -> Expr:
        return self.program.root

    def run(self) -> ResVal:
        """Evaluate the program at the empty stack."""
        return super().run()  # type: ignore[return-value]

    def _run(self, root: Expr) -> ResVal:
        return self.eval(root, self.arena.empty)

    def force(self, result: ResVal) -> Value:
        """Force a result of this session."""
        return self.forcer.force(result)

    def eval(self, expr: Expr, stack: Stack) -> ResVal:
        """Evaluate expr at stack."""
        if isinstance(expr, Var):
            return self.lookup(expr.name, expr.label, stack)
        return self._cached((stack, expr.label, None), lambda: self._eval(expr, stack))

    def lookup(self, name: str, context: int, stack: Stack) -> ResVal:
        """Look up name occurring in the function enclosing context, at stack."""
        return self._cached(
            (stack, context, name), lambda: self._lookup(name, context, stack)
        )

    def _cached(self, key: CacheKey, compute: Callable[[], ResVal]) -> ResVal:
        if not self.options.cache:
            return compute()
        if (hit := self._lookup_cache.get(key)) is not None:
            self.stats.cache_hits += 1
            return hit
        self.stats.cache_misses += 1
        self.stats.key_evaluations[key] += 1
        result = self._lookup_cache[key] = compute()
        return result

    def _lookup(self, name: str, context: int, stack: Stack) -> ResVal:
        if stack.is_empty:
            msg = f"Variable {name} looked up with an empty stack"
            raise StuckError(msg, context, stack)
        if (fun_label := self.program.myfun_index.get(context)) is None:
            msg = f"Variable {name} has no enclosing function"
            raise StuckError(msg, context, stack)
        call = self.program.app(stack.head)
        if self.program.fun(fun_label).binder == name:
            self._fire(RULE_VAR_LOCAL, context, stack)
            return self.eval(call.arg, stack.tail)

        self._fire(RULE_VAR_NON_LOCAL, context, stack)
        self.stats.function_position_lookups += 1
        callee = self._callee(self.eval(call.fn, stack.tail), call.label, stack)
        if callee.label != fun_label:
            msg = f"Non-local lookup of {name} reached function {callee.label}"
            raise StuckError(msg, context, stack)
        return self.lookup(name, fun_label, callee.stack)

    def _callee(self, result: ResVal, label: int, stack: Stack) -> FunVal:
        while isinstance(result, ResidualProj):
            record = self._callee_record(result.record, label, stack)
            if (result := record.get(result.field)) is None:
                msg = "Projection of a missing field in function position"
                raise StuckError(msg, label, stack)
        if not isinstance(result, FunVal):
            msg = "Calling a non-function"
            raise StuckError(msg, label, stack)
        return result

    def _callee_record(self, result: ResVal, label: int, stack: Stack) -> RecordVal:
        while isinstance(result, ResidualProj):
            record = self._callee_record(result.record, label, stack)
            if (result := record.get(result.field)) is None:
                msg = "Projection of a missing field in function position"
                raise StuckError(msg, label, stack)
        if not isinstance(result, RecordVal):
            msg = "Projecting out of a non-record in function position"
            raise StuckError(msg, label, stack)
        return result

    def _eval(self, expr: Expr, stack: Stack) -> ResVal:  # noqa: PLR0911
        match expr:
            case Fun(label=label):
                self._fire(RULE_VALUE, label, stack)
                return FunVal(label, stack)
            case IntLit(label=label, value=n):
                self._fire(RULE_VALUE, label, stack)
                return IntVal(n)
            case BoolLit(label=label, value=b):
                self._fire(RULE_VALUE, label, stack)
                return BoolVal(b)
            case App(label=label, fn=fn, arg=arg):
                self._fire(RULE_APPLICATION, label, stack)
                callee = self._callee(self.eval(fn, stack), label, stack)
                if not self.options.skip_arg:
                    self.eval(arg, stack)
                body = self.program.fun(callee.label).body
                return self.eval(body, self.arena.push(label, stack))
            case BinOp(label=label, op=op, left=left, right=right):
                self._fire(RULE_OPERATION, label, stack)
                return ResidualOp(self.eval(left, stack), op, self.eval(right, stack))
            case Record(label=label, fields=fields):
                self._fire(RULE_RECORD, label, stack)
                return RecordVal(tuple((name, self.eval(e, stack)) for name, e in fields))
            case Project(label=label, record=record, field=name):
                self._fire(RULE_PROJECT, label, stack)
                return ResidualProj(self.eval(record, stack), name)
            case Inspect(label=label, field=name, record=record):
                self._fire(RULE_INSPECT, label, stack)
                return ResidualInspect(name, self.eval(record, stack))
            case Cond(label=label, guard=guard):
                self._fire(RULE_CONDITIONAL, label, stack)
                taken = self.force(self.eval(guard, stack))
                if not isinstance(taken, BoolVal):
                    msg = "Conditional guard is not a boolean"
                    raise StuckError(msg, label, stack)
                self.stats.branches.setdefault(label, set()).add(taken.value)
                return self.eval(expr.branch(taken=taken.value), stack)
            case LetAssert(label=label, bound=bound):
                self._fire(RULE_LETASSERT, label, stack)
                result = self.eval(bound, stack)
                holds = check_predicate(expr, self.force(result))
                self.stats.assertions.append((label, holds))
                return result
        msg = f"No rule for {expr.kind}"
        raise StuckError(msg, expr.label, stack)


class EnvInterpreter(_Session):
    """Call-by-value environment and closure semantics, used as the reference."""

    semantics = "environment"

    def _start(self) -> Expr:
        return self.program.root

    def run(self) -> EnvValue:
        """Evaluate the program in the empty environment."""
        return super().run()  # type: ignore[return-value]

    def _run(self, root: Expr) -> EnvValue:
        return self.eval(root, ())

    def eval(self, expr: Expr, env: Env) -> EnvValue:  # noqa: PLR0911, PLR0912
        """Evaluate expr in env."""
        match expr:
            case Fun(label=label):
                self._fire(RULE_VALUE, label, _render_env(env))
                return Closure(label, env)
            case IntLit(label=label, value=n):
                self._fire(RULE_VALUE, label, _render_env(env))
                return IntVal(n)
            case BoolLit(label=label, value=b):
                self._fire(RULE_VALUE, label, _render_env(env))
                return BoolVal(b)
            case Var(label=label, name=name):
                self._fire(RULE_VAR_LOCAL, label, _render_env(env))
                for bound_name, value in env:
                    if bound_name == name:
                        return value
                msg = f"Variable {name} not in environment"
                raise StuckError(msg, label, _render_env(env))
            case App(label=label, fn=fn, arg=arg):
                self._fire(RULE_APPLICATION, label, _render_env(env))
                callee = self.eval(fn, env)
                argument = self.eval(arg, env)
                if not isinstance(callee, Closure):
                    msg = "Calling a non-function"
                    raise StuckError(msg, label, _render_env(env))
                fun = self.program.fun(callee.label)
                return self.eval(fun.body, ((fun.binder, argument), *callee.env))
            case BinOp(label=label, op=op, left=left, right=right):
                self._fire(RULE_OPERATION, label, _render_env(env))
                return apply_operator(
                    op, env_to_value(self.eval(left, env)), env_to_value(self.eval(right, env))
                )
            case Record(label=label, fields=fields):
                self._fire(RULE_RECORD, label, _render_env(env))
                return EnvRecord(tuple((name, self.eval(e, env)) for name, e in fields))
            case Project(label=label, record=record, field=name):
                self._fire(RULE_PROJECT, label, _render_env(env))
                value = self.eval(record, env)
                if isinstance(value, EnvRecord) and (found := value.get(name)) is not None:
                    return found
                msg = f"Cannot project field {name}"
                raise TypeMismatchError(msg)
            case Inspect(label=label, field=name, record=record):
                self._fire(RULE_INSPECT, label, _render_env(env))
                value = self.eval(record, env)
                if not isinstance(value, EnvRecord):
                    msg = f"Cannot inspect field {name} of a non-record"
                    raise TypeMismatchError(msg)
                return BoolVal(value.get(name) is not None)
            case Cond(label=label, guard=guard):
                self._fire(RULE_CONDITIONAL, label, _render_env(env))
                taken = self.eval(guard, env)
                if not isinstance(taken, BoolVal):
                    msg = "Conditional guard is not a boolean"
                    raise StuckError(msg, label, _render_env(env))
                return self.eval(expr.branch(taken=taken.value), env)
            case LetAssert(label=label, bound=bound):
                self._fire(RULE_LETASSERT, label, _render_env(env))
                value = self.eval(bound, env)
                self.stats.assertions.append((label, check_predicate(expr, env_to_value(value))))
                return value
        msg = f"No rule for {expr.kind}"
        raise StuckError(msg, expr.label, _render_env(env))


def _render_env(env: Env) -> str:
    return "[" + ", ".join(name for name, _ in env) + "]"


class ChainInterpreter(_Session):
    """Demand semantics whose variable rule chains through all scopes at once."""

    semantics = "chaining"

    def run(self) -> ResVal:
        """Evaluate the program at the empty stack."""
        return super().run()  # type: ignore[return-value]

    def _run(self, root: Expr) -> ResVal:
        return self.eval(root, self.arena.empty)

    def eval(self, expr: Expr, stack: Stack) -> ResVal:
        """Evaluate expr at stack."""
        match expr:
            case Fun(label=label):
                self._fire(RULE_VALUE, label, stack)
                return FunVal(label, stack)
            case IntLit(label=label, value=n):
                self._fire(RULE_VALUE, label, stack)
                return IntVal(n)
            case BoolLit(label=label, value=b):
                self._fire(RULE_VALUE, label, stack)
                return BoolVal(b)
            case Var(label=label, name=name):
                self._fire(RULE_VAR_CHAIN, label, stack)
                return self._chain(name, label, stack)
            case App(label=label, fn=fn, arg=arg):
                self._fire(RULE_APPLICATION, label, stack)
                callee = self._function(self.eval(fn, stack), label, stack)
                if not self.options.skip_arg:
                    self.eval(arg, stack)
                body = self.program.fun(callee.label).body
                return self.eval(body, self.arena.push(label, stack))
        msg = f"No rule for {expr.kind}"
        raise StuckError(msg, expr.label, stack)

    def _chain(self, name: str, label: int, stack: Stack) -> ResVal:
        current = stack
        while not current.is_empty:
            call = self.program.app(current.head)
            callee = self._function(self.eval(call.fn, current.tail), call.label, current)
            if self.program.fun(callee.label).binder == name:
                return self.eval(call.arg, current.tail)
            current = callee.stack
        msg = f"Variable {name} not bound along the chain"
        raise StuckError(msg, label, stack)

    @staticmethod
    def _function(result: ResVal, label: int, stack: Stack) -> FunVal:
        if not isinstance(result, FunVal):
            msg = "Calling a non-function"
            raise StuckError(msg, label, stack)
        return result


@dataclass(frozen=True, slots=True)
class DisplayFrame:
    """Display entry: a call site and the display in force at that call."""

    call: int
    saved: Display


type Display = tuple[DisplayFrame, ...]


@dataclass(frozen=True, slots=True)
class DisplayFunVal:
    """Function result of the display semantics."""

    label: int
    display: Display


def _render_display(display: Display) -> str:
    return "[" + ", ".join(str(frame.call) for frame in display) + "]"


class DisplayInterpreter(_Session):
    """Semantics with displays indexed by each variable's lexical depth."""

    semantics = "display"

    def run(self) -> DisplayFunVal | IntVal | BoolVal:
        """Evaluate the program with the empty display."""
        return super().run()  # type: ignore[return-value]

    def _run(self, root: Expr) -> DisplayFunVal | IntVal | BoolVal:
        return self.eval(root, ())

    def eval(self, expr: Expr, display: Display) -> DisplayFunVal | IntVal | BoolVal:
        """Evaluate expr under display."""
        match expr:
            case Fun(label=label):
                self._fire(RULE_VALUE, label, _render_display(display))
                return DisplayFunVal(label, display)
            case IntLit(label=label, value=n):
                self._fire(RULE_VALUE, label, _render_display(display))
                return IntVal(n)
            case BoolLit(label=label, value=b):
                self._fire(RULE_VALUE, label, _render_display(display))
                return BoolVal(b)
            case Var(label=label, name=name):
                self._fire(RULE_VAR_DISPLAY, label, _render_display(display))
                depth = self.program.depth_index[label]
                if depth >= len(display):
                    msg = f"Display of length {len(display)} has no entry {depth} for {name}"
                    raise MalformedDisplayError(msg)
                frame = display[depth]
                return self.eval(self.program.app(frame.call).arg, frame.saved)
            case App(label=label, fn=fn, arg=arg):
                self._fire(RULE_APPLICATION, label, _render_display(display))
                callee = self.eval(fn, display)
                if not isinstance(callee, DisplayFunVal):
                    msg = "Calling a non-function"
                    raise StuckError(msg, label, _render_display(display))
                if not self.options.skip_arg:
                    self.eval(arg, display)
                body = self.program.fun(callee.label).body
                return self.eval(body, (DisplayFrame(label, display), *callee.display))
        msg = f"No rule for {expr.kind}"
        raise StuckError(msg, expr.label, _render_display(display))


@dataclass(frozen=True, slots=True)
class OptFrame:
    """Call site paired with the function value that was called there."""

    call: int
    callee: OptFunVal


@dataclass(frozen=True, slots=True)
class OptStack:
    """Non-empty stack of optimized frames."""

    frame: OptFrame
    tail: OptStack | None

    def __str__(self) -> str:
        calls = []
        node: OptStack | None = self
        while node is not None:
            calls.append(str(node.frame.call))
            node = node.tail
        return "[" + ", ".join(calls) + "]"


@dataclass(frozen=True, slots=True)
class OptFunVal:
    """Function result of the optimized-frame semantics."""

    label: int
    stack: OptStack | None


class OptimizedInterpreter(_Session):
    """Demand semantics whose frames carry the called function, so non-local lookup re-evaluates nothing."""

    semantics = "optimized"

    def run(self) -> OptFunVal | IntVal | BoolVal:
        """Evaluate the program at the empty stack."""
        return super().run()  # type: ignore[return-value]

    def _run(self, root: Expr) -> OptFunVal | IntVal | BoolVal:
        return self.eval(root, None)

    def eval(self, expr: Expr, stack: OptStack | None) -> OptFunVal | IntVal | BoolVal:
        """Evaluate expr at stack."""
        where = str(stack) if stack is not None else "[]"
        match expr:
            case Fun(label=label):
                self._fire(RULE_VALUE, label, where)
                return OptFunVal(label, stack)
            case IntLit(label=label, value=n):
                self._fire(RULE_VALUE, label, where)
                return IntVal(n)
            case BoolLit(label=label, value=b):
                self._fire(RULE_VALUE, label, where)
                return BoolVal(b)
            case Var(label=label, name=name):
                return self._lookup(name, label, stack)
            case App(label=label, fn=fn, arg=arg):
                self._fire(RULE_APPLICATION, label, where)
                callee = self.eval(fn, stack)
                if not isinstance(callee, OptFunVal):
                    msg = "Calling a non-function"
                    raise StuckError(msg, label, where)
                if not self.options.skip_arg:
                    self.eval(arg, stack)
                body = self.program.fun(callee.label).body
                return self.eval(body, OptStack(OptFrame(label, callee), stack))
        msg = f"No rule for {expr.kind}"
        raise StuckError(msg, expr.label, where)

    def _lookup(
        self, name: str, context: int, stack: OptStack | None
    ) -> OptFunVal | IntVal | BoolVal:
        while True:
            if stack is None:
                msg = f"Variable {name} looked up with an empty stack"
                raise StuckError(msg, context, "[]")
            fun_label = self.program.myfun_index.get(context)
            assert fun_label is not None, f"Variable {name} outside any function"
            if self.program.fun(fun_label).binder == name:
                self._fire(RULE_VAR_LOCAL, context, stack)
                return self.eval(self.program.app(stack.frame.call).arg, stack.tail)
            self._fire(RULE_VAR_NON_LOCAL, context, stack)
            callee = stack.frame.callee
            assert callee.label == fun_label, (
                f"Frame for call {stack.frame.call} carries function {callee.label}, "
                f"expected {fun_label}"
            )
            context, stack = fun_label, callee.stack


def eval_demand(
    program: Program,
    *,
    cache: bool = True,
    fuel: int | None = DEFAULT_FUEL,
    skip_arg: bool = False,
) -> ResVal:
    """Evaluate a program under the pure demand semantics."""
    options = EvalOptions(cache=cache, fuel=fuel, skip_arg=skip_arg)
    return DemandInterpreter(program, options).run()


def eval_env(program: Program, *, fuel: int | None = DEFAULT_FUEL) -> EnvValue:
    """Evaluate a program under the environment semantics."""
    return EnvInterpreter(program, EvalOptions(fuel=fuel)).run()


def eval_chain(program: Program, *, fuel: int | None = DEFAULT_FUEL) -> ResVal:
    """Evaluate a core program under the chaining semantics."""
    return ChainInterpreter(program, EvalOptions(fuel=fuel)).run()


def eval_display(
    program: Program, *, fuel: int | None = DEFAULT_FUEL
) -> DisplayFunVal | IntVal | BoolVal:
    """Evaluate a core program under the display semantics."""
    return DisplayInterpreter(program, EvalOptions(fuel=fuel)).run()


def eval_optimized(
    program: Program, *, fuel: int | None = DEFAULT_FUEL
) -> OptFunVal | IntVal | BoolVal:
    """Evaluate a core program under the optimized-frame semantics."""
    return OptimizedInterpreter(program, EvalOptions(fuel=fuel)).run()


def result_label(result: object) -> int | None:
    """Return the function label of any interpreter's function result."""
    match result:
        case FunVal(label=label) | DisplayFunVal(label=label) | OptFunVal(label=label):
            return label
        case Closure(label=label) | FunTag(label=label):
            return label
    return None


def erase(result: object) -> Value:
    """Map any interpreter's result to a comparable value."""
    match result:
        case FunVal() | DisplayFunVal() | OptFunVal():
            return FunTag(result.label)
        case Closure() | EnvRecord():
            return env_to_value(result)
        case IntVal() | BoolVal() | FunTag() | RecordOf():
            return result
    return force(result)  # type: ignore[arg-type]


INTERPRETERS: dict[str, type[_Session]] = {
    "demand": DemandInterpreter,
    "env": EnvInterpreter,
    "chain": ChainInterpreter,
    "display": DisplayInterpreter,
    "opt": OptimizedInterpreter,
}
"""Interpreter classes by command-line semantics name."""
