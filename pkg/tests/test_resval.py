"""Tests for bounded evaluation, simplification and branch feasibility."""

from __future__ import annotations

import pytest

from pure_demand.demand_base.abstract import (
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
    ProjAtom,
    RecordAtom,
    Site,
    Stub,
    single,
)
from pure_demand.demand_base.analyzer import AnalyzeConfig, analyze
from pure_demand.demand_base.exceptions import TypeMismatchError
from pure_demand.demand_base.resval import (
    ConcSet,
    abs_eval,
    branch_feasibility,
    resolve_functions,
    simplify,
)
from pure_demand.demand_base.stack import StackArena
from pure_demand.demand_base.values import BoolVal, FunTag, IntVal, RecordOf

from .common import CorpusProgram

ARENA = StackArena()
SITE = Site(4, ARENA.from_frames((4,)))
OTHER = Site(9, ARENA.from_frames((9, 4)), "n")


def _ints(*values: int) -> frozenset[IntVal]:
    return frozenset(IntVal(v) for v in values)


def _counter() -> AbsRes:
    """{0, 1 + stub} labeled at SITE: every natural number."""
    step = OpAtom(single(IntAtom(1)), "+", single(Stub(SITE)))
    return single(Labeled(AbsRes.of([IntAtom(0), step]), SITE))


def test_literal() -> None:
    assert abs_eval(single(IntAtom(5)), 0) == ConcSet(_ints(5))


def test_unsatisfied_guard_is_empty() -> None:
    guard = Guard(single(BoolAtom(False)), True)
    assert abs_eval(single(Guarded(guard, single(IntAtom(1)))), 3) == ConcSet()


def test_satisfied_guard() -> None:
    guard = Guard(single(OpAtom(single(IntAtom(2)), "<", single(IntAtom(3)))), True)
    assert abs_eval(single(Guarded(guard, single(IntAtom(1)))), 0).values == _ints(1)


def test_unrolling_depth() -> None:
    conc = abs_eval(_counter(), 3)
    assert conc.values == _ints(0, 1, 2, 3)
    assert conc.widened
    assert conc.may_contain(IntVal(100))
    assert str(conc) == "{0, 1, 2, 3, ...}"


def test_open_stub_is_anything() -> None:
    conc = abs_eval(single(Stub(SITE)), 5)
    assert conc.widened
    assert not conc.values
    assert conc.booleans == {True, False}


def test_stub_at_depth_zero() -> None:
    conc = abs_eval(_counter(), 0)
    assert conc.values == _ints(0)
    assert conc.widened


def test_booleans_of_exact_set() -> None:
    conc = abs_eval(AbsRes.of([BoolAtom(True), IntAtom(3)]), 0)
    assert conc.booleans == {True}


def test_records_and_access() -> None:
    record = RecordAtom((("hd", AbsRes.of([IntAtom(1), IntAtom(2)])), ("tl", single(IntAtom(0)))))
    conc = abs_eval(single(record), 0)
    assert conc.values == {
        RecordOf.create({"hd": IntVal(1), "tl": IntVal(0)}),
        RecordOf.create({"hd": IntVal(2), "tl": IntVal(0)}),
    }
    assert abs_eval(single(ProjAtom(single(record), "hd")), 0).values == _ints(1, 2)
    inspected = abs_eval(single(InspectAtom("tl", single(record))), 0)
    assert inspected.values == {BoolVal(True)}


def test_type_errors_drop_values() -> None:
    mixed = single(OpAtom(AbsRes.of([IntAtom(1), BoolAtom(True)]), "+", single(IntAtom(1))))
    assert abs_eval(mixed, 0).values == _ints(2)
    with pytest.raises(TypeMismatchError):
        abs_eval(mixed, 0, strict=True)


def test_functions_erase_to_labels() -> None:
    fun = FunAtom(7, ARENA.from_frames((1,)))
    assert abs_eval(single(fun), 0).values == {FunTag(7)}


def test_depth_monotonicity(terminating_program: CorpusProgram) -> None:
    """Deeper unrolling finds at least the values found by shallower unrolling."""
    result = analyze(terminating_program.program).result
    previous = abs_eval(result, 0).values
    for depth in range(1, 4):
        current = abs_eval(result, depth).values
        assert previous <= current
        previous = current


def test_stub_free_results_are_exact() -> None:
    result = AbsRes.of(
        [OpAtom(AbsRes.of([IntAtom(1), IntAtom(2)]), "-", single(IntAtom(1))), IntAtom(9)]
    )
    conc = abs_eval(result, 0)
    assert not conc.widened
    assert conc.values == _ints(0, 1, 9)
    assert simplify(result) == AbsRes.of([IntAtom(0), IntAtom(1), IntAtom(9)])


@pytest.mark.parametrize("depth", [0, 2])
def test_simplify_is_sound(terminating_program: CorpusProgram, depth: int) -> None:
    """Simplification keeps every value the unsimplified result has."""
    result = analyze(terminating_program.program).result
    before = abs_eval(result, depth)
    after = abs_eval(simplify(result), depth)
    assert after.widened or before.values <= after.values


def test_simplify_folds_constants() -> None:
    nested = single(OpAtom(single(IntAtom(3)), "-", single(IntAtom(1))))
    result = single(OpAtom(single(IntAtom(1)), "+", nested))
    assert simplify(result) == single(IntAtom(3))


def test_simplify_unwraps_closed_labels() -> None:
    labeled = single(Labeled(single(IntAtom(4)), SITE))
    assert simplify(labeled) == single(IntAtom(4))


def test_simplify_drops_self_reference() -> None:
    looping = single(Labeled(AbsRes.of([Stub(SITE)]), SITE))
    assert simplify(looping) == EMPTY


def test_simplify_keeps_recursion() -> None:
    simplified = simplify(_counter())
    assert simplified.has_stub
    assert abs_eval(simplified, 3).values >= _ints(0, 1, 2, 3)


def test_simplify_drops_empty_guards() -> None:
    guard = Guard(single(Stub(OTHER)), True)
    result = AbsRes.of([Guarded(guard, EMPTY), IntAtom(1)])
    assert simplify(result) == single(IntAtom(1))


def test_simplify_deep_nesting() -> None:
    """Long operation chains simplify without exhausting the call stack."""
    result = single(IntAtom(0))
    for _ in range(800):
        result = single(OpAtom(single(IntAtom(1)), "+", result))
    assert simplify(result) == single(IntAtom(800))


def test_resolve_functions_through_labels() -> None:
    first = FunAtom(2, ARENA.empty)
    second = FunAtom(3, ARENA.from_frames((4,)))
    result = single(Labeled(AbsRes.of([second, first, Stub(SITE)]), SITE))
    assert resolve_functions(result, 3) == [first, second]
    assert resolve_functions(single(Stub(SITE)), 3) == []


def test_resolve_functions_through_projection() -> None:
    fun = FunAtom(2, ARENA.empty)
    record = RecordAtom((("f", single(fun)), ("g", single(IntAtom(1)))))
    assert resolve_functions(single(ProjAtom(single(record), "f")), 0) == [fun]


def test_branch_feasibility() -> None:
    cfg = AnalyzeConfig()
    always = single(OpAtom(single(IntAtom(1)), "<", single(IntAtom(2))))
    assert branch_feasibility(always, (), cfg) == {True}
    unknown = single(OpAtom(_counter(), "=", single(IntAtom(0))))
    assert branch_feasibility(unknown, (), cfg) == {True, False}
    blocked = (Guard(single(BoolAtom(False)), True),)
    assert branch_feasibility(unknown, blocked, cfg) == frozenset()
