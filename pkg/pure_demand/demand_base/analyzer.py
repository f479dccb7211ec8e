"""
Finitized demand analyses.

Stacks are truncated to their top k frames when a call is pushed. The frames
lost that way are recovered on a pop by stitching: any recorded fragment that
starts with the popped frame followed by the current stack tells which frames
could have been below it. Revisiting a goal that is already being derived ends
in a stub.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .abstract import (
    EMPTY,
    AbsRes,
    BoolAtom,
    FunAtom,
    Guard,
    Guarded,
    InspectAtom,
    IntAtom,
    Labeled,
    OpAtom,
    PathCond,
    ProjAtom,
    RecordAtom,
    Site,
    Stub,
    extend_path,
    single,
)
from .const import (
    DEFAULT_EVAL_DEPTH,
    DEFAULT_K,
    DEFAULT_NODE_BUDGET,
    DEFAULT_SINGLE_PATH_BUDGET,
    FUNCTIONAL_KINDS,
    RULE_APP_STUB,
    RULE_APPLICATION,
    RULE_CONDITIONAL,
    RULE_INSPECT,
    RULE_LETASSERT,
    RULE_OPERATION,
    RULE_PROJECT,
    RULE_RECORD,
    RULE_VALUE,
    RULE_VAR_LOCAL,
    RULE_VAR_NON_LOCAL,
    RULE_VAR_STUB,
)
from .exceptions import AnalysisBudgetError, ConfigError, UnsupportedConstructError
from .resval import branch_feasibility, resolve_functions
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

if TYPE_CHECKING:
    from .chc_bridge import SolverConfig

_LOGGER = logging.getLogger(__name__)

type FragmentSet = frozenset[Stack]
type SiteKey = int | tuple[str, int]
type VisitedEntry = tuple[SiteKey, Stack, FragmentSet]
type VisitedSet = frozenset[VisitedEntry]


@dataclass(frozen=True, kw_only=True)
class AnalyzeConfig:
    """Parameters of one analysis run."""

    k: int = DEFAULT_K
    """Number of stack frames kept."""
    eval_depth: int = DEFAULT_EVAL_DEPTH
    """Stub unrolling depth used by branch feasibility and function resolution."""
    node_budget: int = DEFAULT_NODE_BUDGET
    """Maximum number of derivation nodes."""
    solver: SolverConfig | None = None
    """External Horn clause solver refining branch feasibility, if any."""
    strict_var_visited: bool = False
    """Also guard the function-position premise of non-local lookups."""

    def __post_init__(self) -> None:
        """Validate the parameters."""
        if self.k < 1:
            msg = f"k must be at least 1, got {self.k}"
            raise ConfigError(msg)
        if self.eval_depth < 0:
            msg = f"eval_depth must not be negative, got {self.eval_depth}"
            raise ConfigError(msg)
        if self.node_budget < 1:
            msg = f"node_budget must be positive, got {self.node_budget}"
            raise ConfigError(msg)


@dataclass
class AnalysisStats:
    """Instrumentation counters of one analysis run."""

    rule_firings: Counter[str] = field(default_factory=Counter)
    nodes: int = 0
    stitched_pops: int = 0
    """Stacks produced by suffixes at variable lookups."""
    stubs_emitted: int = 0
    monotonicity_checks: int = 0
    feasible_branches: dict[int, set[bool]] = field(default_factory=dict)
    """Union of branch feasibility results per conditional label."""


@dataclass(frozen=True)
class AssertionResult:
    """Abstract result of a letassert's bound expression."""

    assertion: LetAssert
    result: AbsRes


@dataclass(frozen=True)
class AnalysisResult:
    """Outcome of an analysis: unpacks as (result, fragments)."""

    result: AbsRes
    fragments: FragmentSet
    assertions: tuple[AssertionResult, ...] = ()
    stats: AnalysisStats = field(default_factory=AnalysisStats, compare=False)

    def __iter__(self) -> Iterator[object]:
        yield self.result
        yield self.fragments


@dataclass(frozen=True)
class SinglePathResult:
    """Conclusions found by the single-path search."""

    conclusions: frozenset[tuple[FunAtom, FragmentSet]]
    exhausted: bool
    """Whether the search budget ran out, leaving the set partial."""
    nodes: int

    @property
    def atoms(self) -> frozenset[FunAtom]:
        """Function atoms of all conclusions."""
        return frozenset(atom for atom, _ in self.conclusions)


def push_frame_k(label: int, stack: Stack, k: int) -> Stack:
    """Push label onto stack, keeping at most k frames."""
    assert k >= 1, "k must be at least 1"
    if len(stack) < k:
        return stack.arena.push(label, stack)
    return stack.arena.from_frames((label, *stack.frames[: k - 1]))


def fragments_in_order(frags: FragmentSet) -> list[Stack]:
    """Return fragments in canonical order."""
    return sorted(frags, key=lambda stack: stack.frames)


def suffixes(label: int, stack: Stack, frags: FragmentSet) -> list[Stack]:
    """Return the tails of fragments starting with label followed by stack."""
    prefix = stack.frames
    found = {
        stack.arena.adopt(fragment.tail)
        for fragment in frags
        if fragment.head == label
        and fragment.tail is not None
        and fragment.tail.frames[: len(prefix)] == prefix
    }
    return sorted(found)


class _Derivation:
    """Shared bookkeeping: node counting, rule firings and truncation."""

    def __init__(self, program: Program, k: int, node_budget: int) -> None:
        self.program = program
        self.k = k
        self.node_budget = node_budget
        self.arena = StackArena()
        self.stats = AnalysisStats()

    def _fire(self, rule: str) -> None:
        self.stats.rule_firings[rule] += 1
        self.stats.nodes += 1
        if self.stats.nodes > self.node_budget:
            msg = f"Analysis exceeded its budget of {self.node_budget} derivation nodes"
            raise AnalysisBudgetError(msg, self.stats.nodes)

    def _push(self, label: int, stack: Stack) -> Stack:
        return push_frame_k(label, stack, self.k)

    def _suffixes(self, label: int, stack: Stack, frags: FragmentSet) -> list[Stack]:
        found = suffixes(label, stack, frags)
        self.stats.stitched_pops += len(found)
        return found

    def _grew(self, before: FragmentSet, after: FragmentSet) -> FragmentSet:
        self.stats.monotonicity_checks += 1
        assert before <= after, "Fragment set shrank during a derivation"
        return after


def _require_functional(program: Program, what: str) -> None:
    if not program.is_functional():
        unsupported = sorted(program.kinds - FUNCTIONAL_KINDS)
        msg = f"{', '.join(unsupported)} unsupported by the {what}"
        raise UnsupportedConstructError(msg)


class _SinglePathSearch(_Derivation):
    """Exhaustive depth-first enumeration of single-path derivations."""

    def __init__(self, program: Program, k: int, budget: int) -> None:
        super().__init__(program, k, budget)
        self.exhausted = False

    def _fire(self, rule: str) -> None:
        self.stats.rule_firings[rule] += 1
        self.stats.nodes += 1
        if self.stats.nodes > self.node_budget:
            self.exhausted = True

    def derive(
        self,
        expr: Expr,
        stack: Stack,
        frags: FragmentSet,
        goals: VisitedSet,
    ) -> set[tuple[FunAtom, FragmentSet]]:
        if self.exhausted:
            return set()
        match expr:
            case Fun(label=label):
                self._fire(RULE_VALUE)
                return {(FunAtom(label, stack), frags)}
            case Var(label=label, name=name):
                return self.lookup(name, label, stack, frags, goals)
            case App(label=label, fn=fn):
                goal = (label, stack, frags)
                if goal in goals:
                    return set()
                self._fire(RULE_APPLICATION)
                inner = goals | {goal}
                pushed = self._push(label, stack)
                found: set[tuple[FunAtom, FragmentSet]] = set()
                for callee, frags1 in self.derive(fn, stack, frags, inner):
                    body = self.program.fun(callee.label).body
                    found |= self.derive(body, pushed, frags1 | {pushed}, inner)
                return found
        msg = f"No analysis rule for {expr.kind}"
        raise UnsupportedConstructError(msg)

    def lookup(
        self,
        name: str,
        context: int,
        stack: Stack,
        frags: FragmentSet,
        goals: VisitedSet,
    ) -> set[tuple[FunAtom, FragmentSet]]:
        goal = ((name, context), stack, frags)
        if stack.is_empty or goal in goals:
            return set()
        if (fun_label := self.program.myfun_index.get(context)) is None:
            return set()
        inner = goals | {goal}
        call = self.program.app(stack.head)
        found: set[tuple[FunAtom, FragmentSet]] = set()
        if self.program.fun(fun_label).binder == name:
            self._fire(RULE_VAR_LOCAL)
            for popped in self._suffixes(stack.head, stack.tail, frags):
                found |= self.derive(call.arg, popped, frags, inner)
            return found
        self._fire(RULE_VAR_NON_LOCAL)
        for popped in self._suffixes(stack.head, stack.tail, frags):
            for callee, frags1 in self.derive(call.fn, popped, frags, inner):
                if callee.label == fun_label:
                    found |= self.lookup(name, fun_label, callee.stack, frags1, inner)
        return found


def analyze_single_path(
    program: Program, k: int = DEFAULT_K, budget: int = DEFAULT_SINGLE_PATH_BUDGET
) -> SinglePathResult:
    """Enumerate every single-path derivation of a functional program."""
    _require_functional(program, "single-path analysis")
    if k < 1:
        msg = f"k must be at least 1, got {k}"
        raise ConfigError(msg)
    search = _SinglePathSearch(program, k, budget)
    with recursion_headroom():
        found = search.derive(program.root, search.arena.empty, frozenset(), frozenset())
    if search.exhausted:
        _LOGGER.warning("Single-path search stopped after %s nodes", search.stats.nodes)
    return SinglePathResult(frozenset(found), search.exhausted, search.stats.nodes)


class _CoreAnalysis(_Derivation):
    """All-paths analysis of functional programs: results are function atoms."""

    def __init__(self, program: Program, cfg: AnalyzeConfig) -> None:
        super().__init__(program, cfg.k, cfg.node_budget)
        self.strict = cfg.strict_var_visited

    def eval(
        self, expr: Expr, stack: Stack, frags: FragmentSet, visited: VisitedSet
    ) -> tuple[frozenset[FunAtom], FragmentSet]:
        match expr:
            case Fun(label=label):
                self._fire(RULE_VALUE)
                return frozenset({FunAtom(label, stack)}), frags
            case Var(label=label, name=name):
                return self.lookup(name, label, stack, frags, visited)
            case App(label=label, fn=fn):
                return self._apply(label, fn, stack, frags, visited)
        msg = f"No analysis rule for {expr.kind}"
        raise UnsupportedConstructError(msg)

    def _apply(
        self, label: int, fn: Expr, stack: Stack, frags: FragmentSet, visited: VisitedSet
    ) -> tuple[frozenset[FunAtom], FragmentSet]:
        if (label, stack, frags) in visited:
            self._fire(RULE_APP_STUB)
            self.stats.stubs_emitted += 1
            return frozenset(), frags
        self._fire(RULE_APPLICATION)
        callees, frags1 = self.eval(fn, stack, frags, visited | {(label, stack, frags)})
        pushed = self._push(label, stack)
        frags_body = self._grew(frags, frags1 | {pushed})
        body_entry = (label, stack, frags_body)
        if body_entry in visited:
            self._fire(RULE_APP_STUB)
            self.stats.stubs_emitted += 1
            return frozenset(), frags_body
        found: set[FunAtom] = set()
        out = frags_body
        for callee in sorted(callees, key=lambda atom: atom.sort_key):
            body = self.program.fun(callee.label).body
            result, frags2 = self.eval(body, pushed, frags_body, visited | {body_entry})
            found |= result
            out |= frags2
        return frozenset(found), self._grew(frags, out)

    def lookup(
        self,
        name: str,
        context: int,
        stack: Stack,
        frags: FragmentSet,
        visited: VisitedSet,
    ) -> tuple[frozenset[FunAtom], FragmentSet]:
        entry = ((name, context), stack, frags)
        if entry in visited:
            self._fire(RULE_VAR_STUB)
            self.stats.stubs_emitted += 1
            return frozenset(), frags
        if stack.is_empty or (fun_label := self.program.myfun_index.get(context)) is None:
            return frozenset(), frags
        call = self.program.app(stack.head)
        popped = self._suffixes(stack.head, stack.tail, frags)
        found: set[FunAtom] = set()
        if self.program.fun(fun_label).binder == name:
            self._fire(RULE_VAR_LOCAL)
            out = frags
            for tail in popped:
                result, frags1 = self.eval(call.arg, tail, frags, visited | {entry})
                found |= result
                out |= frags1
            return frozenset(found), self._grew(frags, out)

        self._fire(RULE_VAR_NON_LOCAL)
        first = visited | {entry} if self.strict else visited
        callees: set[FunAtom] = set()
        frags1 = frags
        for tail in popped:
            result, grown = self.eval(call.fn, tail, frags, first)
            callees |= result
            frags1 |= grown
        second = visited | {((name, context), stack, frags1)}
        out = frags1
        for callee in sorted(callees, key=lambda atom: atom.sort_key):
            if callee.label != fun_label:
                continue
            result, grown = self.lookup(name, fun_label, callee.stack, frags1, second)
            found |= result
            out |= grown
        return frozenset(found), self._grew(frags, out)


def analyze_all_paths_core(
    program: Program, cfg: AnalyzeConfig | None = None
) -> AnalysisResult:
    """Analyze a functional program, returning its function atoms and fragments."""
    _require_functional(program, "core all-paths analysis")
    analysis = _CoreAnalysis(program, cfg or AnalyzeConfig())
    with recursion_headroom():
        atoms, frags = analysis.eval(
            program.root, analysis.arena.empty, frozenset(), frozenset()
        )
    _LOGGER.debug(
        "Core analysis: %s nodes, %s stubs", analysis.stats.nodes, analysis.stats.stubs_emitted
    )
    return AnalysisResult(AbsRes.of(atoms), frags, (), analysis.stats)


class _ExtendedAnalysis(_Derivation):
    """All-paths analysis with stubs, lazy operations and path conditions."""

    def __init__(self, program: Program, cfg: AnalyzeConfig) -> None:
        super().__init__(program, cfg.k, cfg.node_budget)
        self.cfg = cfg
        self._assertions: dict[int, list[AbsRes]] = {}

    def assertion_results(self) -> tuple[AssertionResult, ...]:
        return tuple(
            AssertionResult(assertion, AbsRes.union(self._assertions.get(assertion.label, [])))
            for assertion in self.program.assertions()
        )

    def _stub(self, rule: str, site: Site) -> AbsRes:
        self._fire(rule)
        self.stats.stubs_emitted += 1
        return single(Stub(site))

    @staticmethod
    def _labeled(result: AbsRes, site: Site) -> AbsRes:
        return EMPTY if result.is_empty else single(Labeled(result, site))

    def eval(  # noqa: PLR0911
        self,
        expr: Expr,
        stack: Stack,
        frags: FragmentSet,
        path: PathCond,
        visited: VisitedSet,
    ) -> tuple[AbsRes, FragmentSet]:
        match expr:
            case Fun(label=label):
                self._fire(RULE_VALUE)
                return single(FunAtom(label, stack)), frags
            case IntLit(value=n):
                self._fire(RULE_VALUE)
                return single(IntAtom(n)), frags
            case BoolLit(value=b):
                self._fire(RULE_VALUE)
                return single(BoolAtom(b)), frags
            case Var(label=label, name=name):
                return self.lookup(name, label, stack, frags, path, visited)
            case App():
                return self._apply(expr, stack, frags, path, visited)
            case BinOp(op=op, left=left, right=right):
                self._fire(RULE_OPERATION)
                left_result, frags1 = self.eval(left, stack, frags, path, visited)
                right_result, frags2 = self.eval(right, stack, frags1, path, visited)
                return single(OpAtom(left_result, op, right_result)), self._grew(frags, frags2)
            case Record(fields=fields):
                self._fire(RULE_RECORD)
                entries = []
                out = frags
                for name, value in fields:
                    result, grown = self.eval(value, stack, frags, path, visited)
                    entries.append((name, result))
                    out |= grown
                return single(RecordAtom(tuple(entries))), self._grew(frags, out)
            case Project(label=label, record=record, field=name):
                self._fire(RULE_PROJECT)
                result, frags1 = self.eval(record, stack, frags, path, visited)
                return single(ProjAtom(result, name, label)), frags1
            case Inspect(label=label, field=name, record=record):
                self._fire(RULE_INSPECT)
                result, frags1 = self.eval(record, stack, frags, path, visited)
                return single(InspectAtom(name, result, label)), frags1
            case Cond():
                return self._branch(expr, stack, frags, path, visited)
            case LetAssert(label=label, bound=bound):
                self._fire(RULE_LETASSERT)
                result, frags1 = self.eval(bound, stack, frags, path, visited)
                self._assertions.setdefault(label, []).append(result)
                return result, frags1
        msg = f"No analysis rule for {expr.kind}"
        raise UnsupportedConstructError(msg)

    def _apply(
        self, expr: App, stack: Stack, frags: FragmentSet, path: PathCond, visited: VisitedSet
    ) -> tuple[AbsRes, FragmentSet]:
        label = expr.label
        pushed = self._push(label, stack)
        site = Site(label, pushed)
        if (label, stack, frags) in visited:
            return self._stub(RULE_APP_STUB, site), frags
        self._fire(RULE_APPLICATION)
        callees, frags1 = self.eval(
            expr.fn, stack, frags, path, visited | {(label, stack, frags)}
        )
        frags_body = self._grew(frags, frags1 | {pushed})
        body_entry = (label, stack, frags_body)
        if body_entry in visited:
            return self._stub(RULE_APP_STUB, site), frags_body
        results = []
        out = frags_body
        for callee in resolve_functions(callees, self.cfg.eval_depth):
            body = self.program.fun(callee.label).body
            result, grown = self.eval(body, pushed, frags_body, path, visited | {body_entry})
            results.append(result)
            out |= grown
        return self._labeled(AbsRes.union(results), site), self._grew(frags, out)

    def _branch(
        self, expr: Cond, stack: Stack, frags: FragmentSet, path: PathCond, visited: VisitedSet
    ) -> tuple[AbsRes, FragmentSet]:
        self._fire(RULE_CONDITIONAL)
        guard_result, frags0 = self.eval(expr.guard, stack, frags, path, visited)
        feasible = branch_feasibility(guard_result, path, self.cfg)
        self.stats.feasible_branches.setdefault(expr.label, set()).update(feasible)
        atoms = []
        out = frags0
        for taken in sorted(feasible, reverse=True):
            guard = Guard(guard_result, taken)
            result, grown = self.eval(
                expr.branch(taken=taken), stack, frags0, extend_path(path, guard), visited
            )
            if not result.is_empty:
                atoms.append(Guarded(guard, result))
            out |= grown
        return AbsRes.of(atoms), self._grew(frags, out)

    def lookup(
        self,
        name: str,
        context: int,
        stack: Stack,
        frags: FragmentSet,
        path: PathCond,
        visited: VisitedSet,
    ) -> tuple[AbsRes, FragmentSet]:
        site = Site(context, stack, name)
        entry = ((name, context), stack, frags)
        if entry in visited:
            return self._stub(RULE_VAR_STUB, site), frags
        if stack.is_empty or (fun_label := self.program.myfun_index.get(context)) is None:
            return EMPTY, frags
        call = self.program.app(stack.head)
        popped = self._suffixes(stack.head, stack.tail, frags)
        inner = visited | {entry}
        if self.program.fun(fun_label).binder == name:
            self._fire(RULE_VAR_LOCAL)
            results = []
            out = frags
            for tail in popped:
                result, grown = self.eval(call.arg, tail, frags, path, inner)
                results.append(result)
                out |= grown
            return self._labeled(AbsRes.union(results), site), self._grew(frags, out)

        self._fire(RULE_VAR_NON_LOCAL)
        first = inner if self.cfg.strict_var_visited else visited
        callers = []
        frags1 = frags
        for tail in popped:
            result, grown = self.eval(call.fn, tail, frags, path, first)
            callers.append(result)
            frags1 |= grown
        results = []
        out = frags1
        for callee in resolve_functions(AbsRes.union(callers), self.cfg.eval_depth):
            if callee.label != fun_label:
                continue
            result, grown = self.lookup(name, fun_label, callee.stack, frags1, path, inner)
            results.append(result)
            out |= grown
        return self._labeled(AbsRes.union(results), site), self._grew(frags, out)


def analyze(program: Program, cfg: AnalyzeConfig | None = None) -> AnalysisResult:
    """Analyze a program of the extended language."""
    cfg = cfg or AnalyzeConfig()
    analysis = _ExtendedAnalysis(program, cfg)
    with recursion_headroom():
        result, frags = analysis.eval(
            program.root, analysis.arena.empty, frozenset(), (), frozenset()
        )
    _LOGGER.debug(
        "Analysis: %s nodes, %s stubs, %s fragments",
        analysis.stats.nodes,
        analysis.stats.stubs_emitted,
        len(frags),
    )
    return AnalysisResult(result, frags, analysis.assertion_results(), analysis.stats)

