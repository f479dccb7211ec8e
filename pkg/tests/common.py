"""Corpus loading shared by the tests."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from pure_demand.demand_base.syntax_core import Program, parse_program
from pure_demand.demand_base.values import FunTag, Value, render_value

CORPUS_DIR = Path(__file__).parent.parent / "corpus"

_EXPECT = re.compile(r"^#\s*expect:\s*(?P<value>.+?)\s*$", re.MULTILINE)

# Demand runs without the cache take too long on these.
SLOW_UNCACHED = frozenset({"fact4", "fib10", "fib20"})


@dataclass(frozen=True)
class CorpusProgram:
    """A corpus program with its expected value."""

    name: str
    text: str
    expect: str

    @cached_property
    def program(self) -> Program:
        """The parsed program."""
        return parse_program(self.text)

    @property
    def diverges(self) -> bool:
        """Whether evaluation is expected not to terminate."""
        return self.expect == "diverges"

    def matches(self, value: Value) -> bool:
        """Whether a forced value is the expected one."""
        if self.expect == "fun":
            return isinstance(value, FunTag)
        return render_value(value) == self.expect

    def __str__(self) -> str:
        return self.name


def load_corpus() -> list[CorpusProgram]:
    """Read every program of the corpus directory."""
    programs = []
    for path in sorted(CORPUS_DIR.glob("*.pd")):
        text = path.read_text(encoding="utf-8")
        match = _EXPECT.search(text)
        assert match is not None, f"{path.name} has no expect line"
        programs.append(CorpusProgram(path.stem, text, match["value"]))
    return programs


CORPUS = load_corpus()
