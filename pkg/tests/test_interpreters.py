"""Tests for the concrete interpreters and their agreement."""

from __future__ import annotations

import itertools
from collections.abc import Callable

import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from pure_demand.demand_base.const import RULE_VAR_LOCAL, RULE_VAR_NON_LOCAL
from pure_demand.demand_base.exceptions import (
    FuelExhaustedError,
    PureDemandError,
    StuckError,
    TypeMismatchError,
    UnsupportedConstructError,
)
from pure_demand.demand_base.interpreters import (
    INTERPRETERS,
    DemandInterpreter,
    EnvInterpreter,
    EvalOptions,
    OptimizedInterpreter,
    check_predicate,
    erase,
    eval_chain,
    eval_demand,
    eval_display,
    eval_env,
    eval_optimized,
    force,
)
from pure_demand.demand_base.syntax_core import Program, parse_program
from pure_demand.demand_base.values import (
    BoolVal,
    FunTag,
    IntVal,
    RecordOf,
    ResidualOp,
    render_result,
)

from .common import SLOW_UNCACHED, CorpusProgram

TWO_ARG = parse_program("((fun x -> fun y -> x) 1) 2")


@pytest.mark.parametrize("semantics", sorted(INTERPRETERS))
def test_two_argument_example(semantics: str) -> None:
    """Every semantics returns the first argument."""
    session = INTERPRETERS[semantics](TWO_ARG, EvalOptions())
    assert erase(session.run()) == IntVal(1)


def test_two_argument_example_by_name() -> None:
    """Skipping argument evaluation reproduces the call-by-name derivation."""
    options = EvalOptions(skip_arg=True)
    session = DemandInterpreter(TWO_ARG, options)
    assert session.force(session.run()) == IntVal(1)
    assert session.stats.rule_firings[RULE_VAR_NON_LOCAL] == 1
    assert session.stats.rule_firings[RULE_VAR_LOCAL] == 1
    assert eval_display(TWO_ARG) == IntVal(1)
    assert eval_optimized(TWO_ARG) == IntVal(1)


def test_trace_lines() -> None:
    lines: list[str] = []
    session = DemandInterpreter(TWO_ARG, EvalOptions(trace=lines.append))
    session.run()
    assert len(lines) == session.stats.total_firings
    rule, label, stack = lines[0].split("\t")
    assert rule == "Application"
    assert label == "0"
    assert stack == "[]"


def test_environment_agrees_with_demand(terminating_program: CorpusProgram) -> None:
    """Forced demand results equal environment values, closures compared by label."""
    program = terminating_program.program
    expected = erase(eval_env(program))
    assert force(eval_demand(program)) == expected
    assert terminating_program.matches(expected)


def test_core_semantics_agree(core_program: CorpusProgram) -> None:
    program = core_program.program
    expected = erase(eval_env(program))
    assert erase(eval_chain(program)) == expected
    assert erase(eval_display(program)) == expected
    assert erase(eval_optimized(program)) == expected


@pytest.mark.parametrize("evaluate", [eval_chain, eval_display, eval_optimized])
def test_core_only_semantics_reject_extensions(
    evaluate: Callable[[Program], object], corpus: dict[str, CorpusProgram]
) -> None:
    with pytest.raises(UnsupportedConstructError, match="unsupported"):
        evaluate(corpus["map"].program)


def test_cache_is_transparent(terminating_program: CorpusProgram) -> None:
    """Caching changes neither the lazy result nor its value."""
    if terminating_program.name in SLOW_UNCACHED:
        pytest.skip("uncached run too slow")
    program = terminating_program.program
    cached = eval_demand(program, cache=True)
    uncached = eval_demand(program, cache=False)
    assert render_result(cached) == render_result(uncached)
    assert force(cached) == force(uncached)


def test_cached_fibonacci_matches_environment_calls(corpus: dict[str, CorpusProgram]) -> None:
    """With the cache every call site is evaluated once per stack."""
    program = corpus["fib20"].program
    demand = DemandInterpreter(program, EvalOptions(cache=True))
    assert demand.force(demand.run()) == IntVal(6765)
    env = EnvInterpreter(program, EvalOptions())
    env.run()
    assert demand.stats.application_firings == env.stats.application_firings
    assert max(demand.stats.key_evaluations.values()) == 1


def test_cache_saves_work(corpus: dict[str, CorpusProgram]) -> None:
    program = corpus["fib5"].program
    cached = DemandInterpreter(program, EvalOptions(cache=True))
    cached.run()
    uncached = DemandInterpreter(program, EvalOptions(cache=False))
    uncached.run()
    assert cached.stats.cache_hits > 0
    assert uncached.stats.cache_hits == 0
    assert uncached.stats.total_firings > cached.stats.total_firings


def test_fuel_exhaustion(corpus: dict[str, CorpusProgram]) -> None:
    with pytest.raises(FuelExhaustedError):
        eval_demand(corpus["omega"].program, fuel=1000)
    with pytest.raises(FuelExhaustedError):
        eval_env(corpus["mutual"].program, fuel=1000)


@pytest.mark.parametrize(
    "text",
    [
        "1 2",
        "(fun x -> x) true 3",
    ],
)
def test_calling_a_non_function_is_stuck(text: str) -> None:
    program = parse_program(text)
    with pytest.raises(StuckError):
        eval_demand(program)
    with pytest.raises(StuckError):
        eval_env(program)


def test_operator_type_mismatch() -> None:
    program = parse_program("1 + true")
    with pytest.raises(TypeMismatchError):
        force(eval_demand(program))
    with pytest.raises(TypeMismatchError):
        eval_env(program)


def test_results_stay_lazy() -> None:
    """Operations are residual until forced."""
    result = eval_demand(parse_program("(fun a -> a + 1) 2"))
    assert isinstance(result, ResidualOp)
    assert render_result(result) == "(2 + 1)"
    assert force(result) == IntVal(3)


def test_records_force_sorted() -> None:
    result = force(eval_demand(parse_program("{tl = 2; hd = 1}")))
    assert result == RecordOf((("hd", IntVal(1)), ("tl", IntVal(2))))


def test_letassert_outcomes(corpus: dict[str, CorpusProgram]) -> None:
    program = corpus["id_assert"].program
    (assertion,) = program.assertions()
    demand = DemandInterpreter(program)
    assert demand.force(demand.run()) == IntVal(10)
    env = EnvInterpreter(program)
    assert erase(env.run()) == IntVal(10)
    assert demand.stats.assertions == env.stats.assertions == [(assertion.label, True)]


def test_violated_letassert() -> None:
    program = parse_program("letassert r = 1 in r >= 2")
    session = DemandInterpreter(program)
    assert session.force(session.run()) == IntVal(1)
    (assertion,) = program.assertions()
    assert session.stats.assertions == [(assertion.label, False)]
    assert not check_predicate(assertion, IntVal(1))
    assert check_predicate(assertion, IntVal(5))


def test_branches_recorded(corpus: dict[str, CorpusProgram]) -> None:
    session = DemandInterpreter(corpus["sum_to"].program)
    session.force(session.run())
    assert set().union(*session.stats.branches.values()) == {True, False}


@pytest.mark.parametrize("name", ["nonlocal_functions", "nonlocal_depth2"])
def test_optimized_lookup_reevaluates_nothing(
    corpus: dict[str, CorpusProgram], name: str
) -> None:
    """Non-local steps follow the frame's function instead of evaluating the call's operator."""
    program = corpus[name].program
    optimized = OptimizedInterpreter(program)
    optimized.run()
    assert optimized.stats.rule_firings[RULE_VAR_NON_LOCAL] > 0
    assert optimized.stats.function_position_lookups == 0
    demand = DemandInterpreter(program)
    demand.force(demand.run())
    assert demand.stats.function_position_lookups > 0


def test_functions_compare_by_label(corpus: dict[str, CorpusProgram]) -> None:
    program = corpus["nonlocal_functions"].program
    value = force(eval_demand(program))
    assert isinstance(value, FunTag)
    assert program.fun(value.label).binder == "z"
    assert erase(eval_env(program)) == value


@st.composite
def closed_terms(draw: st.DrawFn, depth: int = 5) -> str:
    """Closed core programs with unique binders."""
    counter = itertools.count()

    def term(scope: tuple[str, ...], budget: int) -> str:
        choices = ["int", "var"] if scope else ["int"]
        if budget > 0:
            choices += ["fun", "app", "app"]
        match draw(st.sampled_from(choices)):
            case "var":
                return draw(st.sampled_from(scope))
            case "int":
                return str(draw(st.integers(min_value=0, max_value=9)))
            case "fun":
                name = f"v{next(counter)}"
                return f"(fun {name} -> {term((*scope, name), budget - 1)})"
        return f"({term(scope, budget - 1)} {term(scope, budget - 1)})"

    return term((), depth)


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(closed_terms())
def test_generated_programs_agree(text: str) -> None:
    """On terminating closed programs all semantics produce the same value."""
    program = parse_program(text)
    try:
        expected = erase(eval_env(program, fuel=5_000))
    except PureDemandError:
        assume(False)
        return
    assert force(eval_demand(program, fuel=1_000_000)) == expected
    assert force(eval_demand(program, fuel=1_000_000, cache=False)) == expected
    assert erase(eval_chain(program, fuel=1_000_000)) == expected
    assert erase(eval_display(program, fuel=1_000_000)) == expected
    assert erase(eval_optimized(program, fuel=1_000_000)) == expected


def test_boolean_values() -> None:
    program: Program = parse_program("(1 < 2) and (3 = 3)")
    assert force(eval_demand(program)) == BoolVal(True)
