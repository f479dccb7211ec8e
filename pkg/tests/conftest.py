"""Shared fixtures: the program corpus and the solver."""

from __future__ import annotations

import os

import pytest

from pure_demand.const import ENV_SOLVER

from .common import CORPUS, CorpusProgram

_SELECTIONS = {
    "corpus_program": lambda p: True,
    "terminating_program": lambda p: not p.diverges,
    "core_program": lambda p: not p.diverges and p.program.is_core(),
    "functional_program": lambda p: p.program.is_functional(),
    "terminating_functional_program": lambda p: (
        not p.diverges and p.program.is_functional()
    ),
}


def pytest_generate_tests(metafunc: pytest.Metafunc) -> None:
    """Parametrize corpus fixtures over the matching programs."""
    for fixture, select in _SELECTIONS.items():
        if fixture in metafunc.fixturenames:
            chosen = [p for p in CORPUS if select(p)]
            metafunc.parametrize(fixture, chosen, ids=[p.name for p in chosen])


@pytest.fixture
def corpus() -> dict[str, CorpusProgram]:
    """Corpus programs by name."""
    return {p.name: p for p in CORPUS}


@pytest.fixture
def solver_path() -> str:
    """Configured solver command, skipping the test when there is none."""
    if not (path := os.environ.get(ENV_SOLVER)):
        pytest.skip(f"{ENV_SOLVER} is not set")
    return path
