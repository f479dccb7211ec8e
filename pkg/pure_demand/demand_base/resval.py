"""Bounded evaluation, branch feasibility and simplification of abstract results."""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .abstract import (
    AbsAtom,
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
    open_stubs,
    single,
)
from .const import ARITHMETIC_OPS, MAX_CONCRETE_VALUES, MAX_DISTRIBUTED_ATOMS, MAX_REWRITES
from .exceptions import ChcTranslationError, TypeMismatchError
from .stack import recursion_headroom
from .values import BoolVal, FunTag, IntVal, RecordOf, Value, apply_operator, render_value

if TYPE_CHECKING:
    from .analyzer import AnalyzeConfig

_LOGGER = logging.getLogger(__name__)

_MAX_PAIRS = MAX_CONCRETE_VALUES * 64


@dataclass(frozen=True)
class ConcSet:
    """Concrete values of an abstract result, explored to a bounded depth."""

    values: frozenset[Value] = frozenset()
    widened: bool = False
    """Set when a stub was cut off, so any value may be missing."""

    def may_contain(self, value: Value) -> bool:
        """Whether value is among the values or could be beyond the explored depth."""
        return value in self.values or self.widened

    @property
    def booleans(self) -> frozenset[bool]:
        """Booleans the result may take."""
        if self.widened:
            return frozenset({True, False})
        return frozenset(v.value for v in self.values if isinstance(v, BoolVal))

    def __str__(self) -> str:
        rendered = ", ".join(sorted(render_value(v) for v in self.values))
        return "{" + rendered + (", ..." if self.widened else "") + "}"


_NOTHING = ConcSet()
_ANYTHING = ConcSet(frozenset(), widened=True)


@dataclass(frozen=True)
class EvalContext:
    """Enclosing labeled sets by site, for resolving stubs."""

    parents: dict[Site, AbsRes] = field(default_factory=dict)

    def bind(self, site: Site, inner: AbsRes) -> EvalContext:
        """Return the context with site bound to inner."""
        if not inner.has_stub:
            return self
        return EvalContext({**self.parents, site: inner})


def _capped(values: set[Value], widened: bool) -> ConcSet:  # noqa: FBT001
    if len(values) > MAX_CONCRETE_VALUES:
        kept = sorted(values, key=render_value)[:MAX_CONCRETE_VALUES]
        return ConcSet(frozenset(kept), widened=True)
    return ConcSet(frozenset(values), widened)


class _Evaluator:
    """Unrolls stubs into their parents up to a depth, memoizing stub-free sets."""

    def __init__(self, *, strict: bool = False) -> None:
        self.strict = strict
        self._memo: dict[int, tuple[AbsRes, ConcSet]] = {}

    def _mismatch(self, err: TypeMismatchError) -> None:
        if self.strict:
            raise err

    def values(self, result: AbsRes, ctx: EvalContext, depth: int) -> ConcSet:
        if not result.has_stub and (hit := self._memo.get(id(result))) is not None:
            if hit[0] is result:
                return hit[1]
        found: set[Value] = set()
        widened = False
        for atom in result.atoms:
            part = self._atom(atom, ctx, depth)
            found |= part.values
            widened |= part.widened
        conc = _capped(found, widened)
        if not result.has_stub:
            self._memo[id(result)] = (result, conc)
        return conc

    def _atom(self, atom: AbsAtom, ctx: EvalContext, depth: int) -> ConcSet:  # noqa: PLR0911
        match atom:
            case IntAtom(value=n):
                return ConcSet(frozenset({IntVal(n)}))
            case BoolAtom(value=b):
                return ConcSet(frozenset({BoolVal(b)}))
            case FunAtom(label=label):
                return ConcSet(frozenset({FunTag(label)}))
            case Labeled(inner=inner, site=site):
                return self.values(inner, ctx.bind(site, inner), depth)
            case Stub(site=site):
                if (parent := ctx.parents.get(site)) is None or depth == 0:
                    return _ANYTHING
                return self.values(parent, ctx, depth - 1)
            case Guarded(guard=guard, inner=inner):
                condition = self.values(guard.result, ctx, depth)
                if BoolVal(guard.value) in condition.values:
                    return self.values(inner, ctx, depth)
                return _ANYTHING if condition.widened else _NOTHING
            case OpAtom(left=left, op=op, right=right):
                return self._operation(
                    self.values(left, ctx, depth), op, self.values(right, ctx, depth)
                )
            case RecordAtom(fields=fields):
                return self._record(
                    [(name, self.values(value, ctx, depth)) for name, value in fields]
                )
            case ProjAtom(record=record, field=name):
                return self._project(self.values(record, ctx, depth), name)
            case InspectAtom(field=name, record=record):
                return self._inspect(name, self.values(record, ctx, depth))
        msg = f"Unknown atom {atom!r}"
        raise TypeError(msg)

    def _operation(self, left: ConcSet, op: str, right: ConcSet) -> ConcSet:
        found: set[Value] = set()
        widened = left.widened or right.widened
        if len(left.values) * len(right.values) > _MAX_PAIRS:
            widened = True
        for a, b in itertools.islice(itertools.product(left.values, right.values), _MAX_PAIRS):
            try:
                found.add(apply_operator(op, a, b))
            except TypeMismatchError as err:
                self._mismatch(err)
        return _capped(found, widened)

    def _record(self, fields: list[tuple[str, ConcSet]]) -> ConcSet:
        widened = any(conc.widened for _, conc in fields)
        if math.prod(len(conc.values) for _, conc in fields) > MAX_CONCRETE_VALUES:
            return _ANYTHING
        names = [name for name, _ in fields]
        found: set[Value] = {
            RecordOf.create(dict(zip(names, combo, strict=True)))
            for combo in itertools.product(*(conc.values for _, conc in fields))
        }
        return ConcSet(frozenset(found), widened)

    def _project(self, record: ConcSet, name: str) -> ConcSet:
        found: set[Value] = set()
        for value in record.values:
            if isinstance(value, RecordOf) and (inner := value.get(name)) is not None:
                found.add(inner)
            else:
                self._mismatch(TypeMismatchError(f"No field {name} in {render_value(value)}"))
        return ConcSet(frozenset(found), record.widened)

    def _inspect(self, name: str, record: ConcSet) -> ConcSet:
        found: set[Value] = set()
        for value in record.values:
            if isinstance(value, RecordOf):
                found.add(BoolVal(value.get(name) is not None))
            else:
                self._mismatch(TypeMismatchError(f"Cannot inspect {render_value(value)}"))
        return ConcSet(frozenset(found), record.widened)

    def heads(
        self, result: AbsRes, ctx: EvalContext, depth: int
    ) -> Iterator[tuple[AbsAtom, EvalContext]]:
        """Yield atoms that are not labels, stubs, guards or projections."""
        for atom in result.atoms:
            match atom:
                case Labeled(inner=inner, site=site):
                    yield from self.heads(inner, ctx.bind(site, inner), depth)
                case Stub(site=site):
                    if (parent := ctx.parents.get(site)) is not None and depth > 0:
                        yield from self.heads(parent, ctx, depth - 1)
                case Guarded(guard=guard, inner=inner):
                    condition = self.values(guard.result, ctx, depth)
                    if condition.may_contain(BoolVal(guard.value)):
                        yield from self.heads(inner, ctx, depth)
                case ProjAtom(record=record, field=name):
                    for head, head_ctx in self.heads(record, ctx, depth):
                        if isinstance(head, RecordAtom) and (value := head.get(name)):
                            yield from self.heads(value, head_ctx, depth)
                case _:
                    yield atom, ctx


def abs_eval(result: AbsRes, depth: int, *, strict: bool = False) -> ConcSet:
    """Return the values of result, unrolling each stub at most depth times."""
    assert depth >= 0, "depth must not be negative"
    with recursion_headroom():
        return _Evaluator(strict=strict).values(result, EvalContext(), depth)


def resolve_functions(result: AbsRes, depth: int) -> list[FunAtom]:
    """Return the function atoms result may evaluate to, in canonical order."""
    evaluator = _Evaluator()
    found = {
        atom
        for atom, _ in evaluator.heads(result, EvalContext(), depth)
        if isinstance(atom, FunAtom)
    }
    return sorted(found, key=lambda atom: atom.sort_key)


def branch_feasibility(
    r_cond: AbsRes, pi: PathCond, cfg: AnalyzeConfig
) -> frozenset[bool]:
    """Return the booleans r_cond may take on paths satisfying pi."""
    evaluator = _Evaluator()
    ctx = EvalContext()
    for guard in pi:
        holds = evaluator.values(guard.result, ctx, cfg.eval_depth)
        if not holds.may_contain(BoolVal(guard.value)):
            return frozenset()
    feasible = evaluator.values(r_cond, ctx, cfg.eval_depth).booleans
    if cfg.solver is not None and len(feasible) > 1:
        feasible = _refine_with_solver(r_cond, pi, cfg)
    return feasible


def _refine_with_solver(r_cond: AbsRes, pi: PathCond, cfg: AnalyzeConfig) -> frozenset[bool]:
    from .chc_bridge import Verdict, exclusion_verdict  # noqa: PLC0415

    assert cfg.solver is not None
    guarded = r_cond
    for guard in reversed(pi):
        guarded = single(Guarded(guard, guarded))
    kept = set()
    for value in (True, False):
        try:
            verdict = exclusion_verdict(guarded, value, cfg.solver)
        except ChcTranslationError as err:
            _LOGGER.debug("No solver refinement of a branch: %s", err)
            return frozenset({True, False})
        if verdict is not Verdict.VERIFIED:
            kept.add(value)
    return frozenset(kept)


def _value_atom(value: Value) -> AbsAtom | None:
    match value:
        case IntVal(n):
            return IntAtom(n)
        case BoolVal(b):
            return BoolAtom(b)
        case RecordOf(fields=fields):
            converted = [(name, _value_atom(inner)) for name, inner in fields]
            if any(atom is None for _, atom in converted):
                return None
            return RecordAtom(tuple((name, single(atom)) for name, atom in converted))  # type: ignore[arg-type]
    return None


def _literal(atom: AbsAtom) -> Value | None:
    match atom:
        case IntAtom(value=n):
            return IntVal(n)
        case BoolAtom(value=b):
            return BoolVal(b)
    return None


def _substitute(result: AbsRes, site: Site, replacement: AbsAtom) -> AbsRes:
    """Replace stubs of site not shadowed by a nested Labeled of the same site."""
    if not result.has_stub:
        return result
    atoms: list[AbsAtom] = []
    for atom in result.atoms:
        match atom:
            case Stub(site=stub_site) if stub_site == site:
                atoms.append(replacement)
            case Labeled(site=labeled_site) if labeled_site == site:
                atoms.append(atom)
            case _:
                children = tuple(_substitute(child, site, replacement) for child in atom.children)
                atoms.append(atom.with_children(children))
    return AbsRes.of(atoms)


class _Simplifier:
    """One innermost-first rewriting pass per call to res."""

    def __init__(self) -> None:
        self.rewrites = 0
        self.unrolled: set[tuple[str, int]] = set()
        self._exact = _Evaluator(strict=True)

    def _rewrite(self) -> None:
        self.rewrites += 1

    def res(self, result: AbsRes, parents: dict[Site, AbsRes]) -> AbsRes:
        if self.rewrites >= MAX_REWRITES:
            return result
        atoms: list[AbsAtom] = []
        changed = False
        for atom in result.atoms:
            rewritten = self.atom(atom, parents)
            changed |= len(rewritten) != 1 or rewritten[0] is not atom
            atoms.extend(rewritten)
        if changed:
            result = AbsRes.of(atoms)
        return self._non_recurrence(result)

    def _non_recurrence(self, result: AbsRes) -> AbsRes:
        if result.has_stub or all(_literal(atom) is not None for atom in result.atoms):
            return result
        try:
            conc = self._exact.values(result, EvalContext(), 0)
        except TypeMismatchError:
            return result
        if conc.widened:
            return result
        atoms = [_value_atom(value) for value in conc.values]
        if any(atom is None for atom in atoms):
            return result
        folded = AbsRes.of(atoms)  # type: ignore[arg-type]
        if folded == result:
            return result
        self._rewrite()
        return folded

    def _children(self, atom: AbsAtom, parents: dict[Site, AbsRes]) -> AbsAtom:
        children = atom.children
        rewritten = tuple(self.res(child, parents) for child in children)
        if all(new is old for new, old in zip(rewritten, children, strict=True)):
            return atom
        return atom.with_children(rewritten)

    def atom(self, atom: AbsAtom, parents: dict[Site, AbsRes]) -> tuple[AbsAtom, ...]:
        match atom:
            case Labeled():
                return self._labeled(atom, parents)
            case Guarded():
                rebuilt = self._children(atom, parents)
                assert isinstance(rebuilt, Guarded)
                if rebuilt.inner.is_empty:
                    self._rewrite()
                    return ()
                return (rebuilt,)
            case OpAtom():
                return self._operation(atom, parents)
            case ProjAtom() | InspectAtom():
                return self._access(atom, parents)
        return (self._children(atom, parents),)

    def _labeled(self, atom: Labeled, parents: dict[Site, AbsRes]) -> tuple[AbsAtom, ...]:
        site = atom.site
        previous = parents.get(site)
        parents[site] = atom.inner
        try:
            inner = self.res(atom.inner, parents)
        finally:
            if previous is None:
                del parents[site]
            else:
                parents[site] = previous
        if site not in open_stubs(inner):
            self._rewrite()
            return inner.atoms
        own = Stub(site)
        if own in inner.atoms:
            self._rewrite()
            inner = AbsRes.of(a for a in inner.atoms if a != own)
            if inner.is_empty:
                return ()
        return (atom,) if inner is atom.inner else (Labeled(inner, site),)

    def _operation(self, atom: OpAtom, parents: dict[Site, AbsRes]) -> tuple[AbsAtom, ...]:  # noqa: PLR0911
        rebuilt = self._children(atom, parents)
        assert isinstance(rebuilt, OpAtom)
        left, op, right = rebuilt.left, rebuilt.op, rebuilt.right
        if len(left) == 1 and len(right) == 1:
            a, b = _literal(left.atoms[0]), _literal(right.atoms[0])
            if a is not None and b is not None:
                try:
                    folded = _value_atom(apply_operator(op, a, b))
                except TypeMismatchError:
                    return (rebuilt,)
                self._rewrite()
                return (folded,)  # type: ignore[return-value]
        if (
            op == "+"
            and len(right) == 1
            and isinstance(nested := right.atoms[0], OpAtom)
            and nested.op in ARITHMETIC_OPS
            and not left.has_stub
            and not nested.left.has_stub
        ):
            self._rewrite()
            return (OpAtom(single(OpAtom(left, "+", nested.left)), nested.op, nested.right),)
        if (len(left) > 1 or len(right) > 1) and len(left) * len(right) <= MAX_DISTRIBUTED_ATOMS:
            self._rewrite()
            return tuple(
                OpAtom(single(a), op, single(b)) for a in left.atoms for b in right.atoms
            )
        if len(left) == 1 and len(right) == 1:
            a, b = left.atoms[0], right.atoms[0]
            if isinstance(a, Labeled) and isinstance(b, Labeled) and a.site == b.site:
                self._rewrite()
                return (Labeled(single(OpAtom(a.inner, op, b.inner)), a.site),)
            if isinstance(a, Guarded) and isinstance(b, Guarded) and a.guard == b.guard:
                self._rewrite()
                return (Guarded(a.guard, single(OpAtom(a.inner, op, b.inner))),)
        return (rebuilt,)

    def _access(
        self, atom: ProjAtom | InspectAtom, parents: dict[Site, AbsRes]
    ) -> tuple[AbsAtom, ...]:
        rebuilt = self._children(atom, parents)
        assert isinstance(rebuilt, ProjAtom | InspectAtom)
        record = rebuilt.record
        if record.atoms and all(isinstance(a, RecordAtom) for a in record.atoms):
            return self._access_records(rebuilt, record)
        if 1 < len(record) <= MAX_DISTRIBUTED_ATOMS:
            self._rewrite()
            return tuple(rebuilt.with_children((single(a),)) for a in record.atoms)
        if len(record) != 1:
            return (rebuilt,)
        only = record.atoms[0]
        if isinstance(only, Guarded):
            self._rewrite()
            return (Guarded(only.guard, single(rebuilt.with_children((only.inner,)))),)
        key = (type(rebuilt).__name__, rebuilt.site if rebuilt.site is not None else id(atom))
        if key in self.unrolled:
            return (rebuilt,)
        if isinstance(only, Stub) and (parent := parents.get(only.site)) is not None:
            self.unrolled.add(key)
            self._rewrite()
            return (rebuilt.with_children((parent,)),)
        if isinstance(only, Labeled):
            self.unrolled.add(key)
            self._rewrite()
            return (rebuilt.with_children((_substitute(only.inner, only.site, only),)),)
        return (rebuilt,)

    def _access_records(
        self, atom: ProjAtom | InspectAtom, record: AbsRes
    ) -> tuple[AbsAtom, ...]:
        records = [a for a in record.atoms if isinstance(a, RecordAtom)]
        if isinstance(atom, InspectAtom):
            self._rewrite()
            return tuple(BoolAtom(r.get(atom.field) is not None) for r in records)
        fields = [r.get(atom.field) for r in records]
        if any(value is None for value in fields):
            return (atom,)
        self._rewrite()
        return tuple(a for value in fields for a in value.atoms)  # type: ignore[union-attr]


def simplify(result: AbsRes) -> AbsRes:
    """Rewrite result to a fixpoint of the simplification rules."""
    simplifier = _Simplifier()
    with recursion_headroom():
        while simplifier.rewrites < MAX_REWRITES:
            before = simplifier.rewrites
            result = simplifier.res(result, {})
            if simplifier.rewrites == before:
                break
        else:
            _LOGGER.warning("Simplification stopped after %s rewrites", simplifier.rewrites)
    return result
