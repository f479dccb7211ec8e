"""Tests for the Horn clause translation and the solver bridge."""

from __future__ import annotations

import stat
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pure_demand.demand_base.abstract import (
    AbsRes,
    BoolAtom,
    FunAtom,
    Guard,
    Guarded,
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
from pure_demand.demand_base.chc_bridge import (
    ChcSystem,
    PredApp,
    SolverConfig,
    Verdict,
    emit_smtlib,
    least_model,
    predicate_sorts,
    protected_query,
    solve,
    to_chc,
    verify_letassert,
)
from pure_demand.demand_base.exceptions import ChcSortError, ChcTranslationError
from pure_demand.demand_base.resval import abs_eval
from pure_demand.demand_base.stack import StackArena
from pure_demand.demand_base.syntax_core import LetAssert, parse_program
from pure_demand.demand_base.values import BoolVal, IntVal

from .common import CorpusProgram

ARENA = StackArena()
SITE = Site(4, ARENA.from_frames((4,)))


def _counter() -> AbsRes:
    step = OpAtom(single(IntAtom(1)), "+", single(Stub(SITE)))
    return single(Labeled(AbsRes.of([IntAtom(0), step]), SITE))


def _script(tmp_path: Path, body: str) -> str:
    script = tmp_path / "solver.sh"
    script.write_text(f"#!/bin/sh\n{body}\n", encoding="utf-8")
    script.chmod(script.stat().st_mode | stat.S_IXUSR)
    return str(script)


def _assertion_result(program_text: str) -> tuple[AbsRes, LetAssert]:
    program = parse_program(program_text)
    (checked,) = analyze(program).assertions
    return checked.result, checked.assertion


def test_facts_have_no_variables() -> None:
    system = to_chc(single(IntAtom(5)))
    facts = [clause for clause in system.clauses if not clause.body]
    assert facts
    assert all(not clause.variables for clause in facts)
    assert least_model(system).values(system.root) == {IntVal(5)}
    text = emit_smtlib(system)
    assert text.startswith("(set-logic HORN)\n")
    assert text.endswith("(check-sat)\n")
    assert f"(declare-fun X_{system.root} (Int) Bool)" in text


def test_negative_literals() -> None:
    system = to_chc(single(IntAtom(-3)))
    assert "(- 3))" in emit_smtlib(system)


def test_booleans() -> None:
    system = to_chc(AbsRes.of([BoolAtom(True), BoolAtom(False)]))
    assert set(predicate_sorts(system).values()) == {"Bool"}
    assert least_model(system).values(system.root) == {BoolVal(True), BoolVal(False)}


def test_mixed_sorts_are_rejected() -> None:
    system = to_chc(AbsRes.of([IntAtom(1), BoolAtom(True)]))
    with pytest.raises(ChcSortError, match="both Int and Bool"):
        emit_smtlib(system)


def test_untranslatable_atoms() -> None:
    record = single(RecordAtom((("hd", single(IntAtom(1))),)))
    with pytest.raises(ChcTranslationError, match="simplify"):
        to_chc(single(ProjAtom(record, "hd")))
    fun = single(FunAtom(2, ARENA.empty))
    with pytest.raises(ChcTranslationError, match="operand position"):
        to_chc(single(OpAtom(fun, "+", single(IntAtom(1)))))


def test_functions_contribute_no_clauses() -> None:
    system = to_chc(single(FunAtom(2, ARENA.empty)))
    assert not system.clauses
    assert least_model(system).values(system.root) == frozenset()


def test_labeled_stubs_share_a_recursive_predicate() -> None:
    system = to_chc(_counter())
    pred = system.site_preds[SITE]
    readers = [
        clause
        for clause in system.clauses
        if any(isinstance(item, PredApp) and item.pred == pred for item in clause.body)
    ]
    assert {clause.head.pred for clause in readers if clause.head} >= {system.root}
    assert len(readers) >= 2
    model = least_model(system, max_rounds=5)
    assert not model.complete
    assert {IntVal(0), IntVal(1)} <= model.values(pred)


def test_open_stub_is_unconstrained() -> None:
    system = to_chc(single(Stub(SITE)))
    (fact,) = (clause for clause in system.clauses if not clause.body)
    assert fact.variables == ("v0",)
    assert fact.head == PredApp(system.site_preds[SITE], fact.head.arg)
    assert "(forall ((v0 Int)) (X_" in emit_smtlib(system)
    assert not least_model(system).complete


_leaves = st.integers(min_value=0, max_value=6).map(IntAtom)


def _sets(atoms: st.SearchStrategy) -> st.SearchStrategy[AbsRes]:
    return st.lists(atoms, min_size=1, max_size=2).map(AbsRes.of)


def _extend(children: st.SearchStrategy) -> st.SearchStrategy:
    operations = st.builds(OpAtom, _sets(children), st.sampled_from(["+", "-"]), _sets(children))
    comparisons = st.builds(
        lambda left, right: single(OpAtom(left, "<", right)), _sets(children), _sets(children)
    )
    guarded = st.builds(
        lambda cond, value, inner: Guarded(Guard(cond, value), inner),
        comparisons,
        st.booleans(),
        _sets(children),
    )
    return operations | guarded


@settings(max_examples=50, deadline=None)
@given(_sets(st.recursive(_leaves, _extend, max_leaves=8)))
def test_least_model_matches_bounded_evaluation(result: AbsRes) -> None:
    """For stub-free integer results the clauses denote exactly the result's values."""
    system = to_chc(result)
    model = least_model(system)
    assert model.complete
    assert model.values(system.root) == abs_eval(result, 0).values


def test_protected_query(corpus: dict[str, CorpusProgram]) -> None:
    result, assertion = _assertion_result(corpus["assert_simple"].text)
    system = to_chc(result)
    query = protected_query(system, assertion)
    assert query.is_query
    text = emit_smtlib(system, query)
    assert "(not (>= v0 5))" in text
    assert text.rstrip().splitlines()[-2].endswith("false)))")


def test_bounded_verdicts(corpus: dict[str, CorpusProgram]) -> None:
    cfg = AnalyzeConfig()
    result, assertion = _assertion_result(corpus["assert_simple"].text)
    assert verify_letassert(result, assertion, cfg) is Verdict.VERIFIED
    result, assertion = _assertion_result(corpus["id_assert"].text)
    assert verify_letassert(result, assertion, cfg) is Verdict.REFUTED_OR_UNKNOWN
    result, assertion = _assertion_result("letassert r = 1 in r >= 2")
    assert verify_letassert(result, assertion, cfg) is Verdict.REFUTED_OR_UNKNOWN


@pytest.mark.parametrize(
    ("body", "verdict"),
    [
        ('grep -q "(check-sat)" "$1" && echo sat', Verdict.VERIFIED),
        ("echo unsat", Verdict.REFUTED_OR_UNKNOWN),
        ("echo unknown", Verdict.REFUTED_OR_UNKNOWN),
        ("echo timeout", Verdict.TIMEOUT),
        ("echo oops >&2; exit 3", Verdict.SOLVER_UNAVAILABLE),
    ],
)
def test_solver_answers(tmp_path: Path, body: str, verdict: Verdict) -> None:
    system = to_chc(single(IntAtom(5)))
    assert solve(system, None, _script(tmp_path, body)) is verdict


def test_solver_timeout(tmp_path: Path) -> None:
    system = to_chc(single(IntAtom(5)))
    assert solve(system, None, _script(tmp_path, "sleep 5"), timeout_ms=100) is Verdict.TIMEOUT
    assert solve(system, None, _script(tmp_path, "echo sat"), timeout_ms=0) is Verdict.TIMEOUT


def test_missing_solver() -> None:
    system = ChcSystem((), 0)
    assert solve(system, None, "/nonexistent/horn-solver") is Verdict.SOLVER_UNAVAILABLE


def test_verify_with_configured_solver(tmp_path: Path, corpus: dict[str, CorpusProgram]) -> None:
    cfg = AnalyzeConfig(solver=SolverConfig(path=_script(tmp_path, "echo sat")))
    result, assertion = _assertion_result(corpus["id_assert"].text)
    assert verify_letassert(result, assertion, cfg) is Verdict.VERIFIED


def test_untranslatable_results_fall_back(tmp_path: Path) -> None:
    """Results the clauses cannot express are checked by bounded evaluation instead."""
    cfg = AnalyzeConfig(solver=SolverConfig(path=_script(tmp_path, "echo unsat")))
    result, assertion = _assertion_result("letassert r = (fun q -> q) + 1 in r >= 1")
    assert verify_letassert(result, assertion, cfg) is Verdict.VERIFIED


def test_real_solver(solver_path: str, corpus: dict[str, CorpusProgram]) -> None:
    cfg = AnalyzeConfig(solver=SolverConfig(path=solver_path))
    for name in ("assert_simple", "id_assert"):
        result, assertion = _assertion_result(corpus[name].text)
        assert verify_letassert(result, assertion, cfg) is Verdict.VERIFIED
    result, assertion = _assertion_result("letassert r = 1 in r >= 2")
    assert verify_letassert(result, assertion, cfg) is Verdict.REFUTED_OR_UNKNOWN


def test_emitted_clauses_are_stable(corpus: dict[str, CorpusProgram]) -> None:
    texts = set()
    for _ in range(2):
        result, assertion = _assertion_result(corpus["id_assert"].text)
        system = to_chc(result)
        texts.add(emit_smtlib(system, protected_query(system, assertion)))
    assert len(texts) == 1
