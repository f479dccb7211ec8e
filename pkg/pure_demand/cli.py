"""Command-line front end for the pure demand toolkit."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections.abc import Callable, Iterator, Mapping, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TextIO

import colorlog

from .config import CONF_ANALYSIS, CONF_INTERPRETER, CONF_SOLVER, ToolConfig, load_config
from .const import (
    DEFAULT_FUEL,
    DOMAIN,
    EXIT_BUDGET,
    EXIT_DISAGREEMENT,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_STUCK,
    REPORT_SCHEMA_VERSION,
    SEMANTICS,
    VERSION,
)
from .demand_base.abstract import (
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
    format_tree,
    render_inline,
    to_json,
)
from .demand_base.analyzer import (
    AnalysisResult,
    analyze,
    analyze_all_paths_core,
    analyze_single_path,
)
from .demand_base.chc_bridge import emit_smtlib, protected_query, to_chc, verify_letassert
from .demand_base.exceptions import (
    AnalysisBudgetError,
    ChcTranslationError,
    ConfigError,
    EvaluationError,
    FuelExhaustedError,
    ParseError,
    PureDemandError,
    StuckError,
    TypeMismatchError,
    UnsupportedConstructError,
)
from .demand_base.interpreters import INTERPRETERS, DemandInterpreter, EvalOptions, erase
from .demand_base.resval import simplify
from .demand_base.syntax_core import Program, dump_ast, parse_program, pretty
from .demand_base.values import Value, render_value

_LOGGER = logging.getLogger(__name__)

type Interpreters = Mapping[str, Callable[[Program, EvalOptions], Any]]

ENGINES = ("extended", "core", "single-path")

_LOG_FORMAT = "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s"


@dataclass
class RunReport:
    """Summary of one command-line run."""

    program: str
    mode: str
    result: str | None = None
    timings: dict[str, float] = field(default_factory=dict)
    """Phase durations in milliseconds."""
    counters: dict[str, int] = field(default_factory=dict)
    verdicts: dict[str, str] = field(default_factory=dict)
    """Outcome per letassert, keyed binder@label."""
    outcomes: dict[str, str] = field(default_factory=dict)
    """Outcome per semantics (check only)."""
    abstract_result: list[dict[str, Any]] | None = None
    error: dict[str, str] | None = None
    """Kind and message of the error that ended the run."""
    exit_code: int = EXIT_OK

    @contextmanager
    def timed(self, phase: str) -> Iterator[None]:
        """Add the duration of the block to the phase timing."""
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = (time.perf_counter() - start) * 1000
            self.timings[phase] = self.timings.get(phase, 0.0) + elapsed

    def to_json(self) -> dict[str, Any]:
        """Return the versioned JSON document."""
        data: dict[str, Any] = {
            "version": REPORT_SCHEMA_VERSION,
            "program": self.program,
            "mode": self.mode,
            "result": self.result,
            "timings_ms": {phase: round(ms, 3) for phase, ms in self.timings.items()},
            "counters": dict(self.counters),
            "verdicts": dict(self.verdicts),
        }
        if self.outcomes:
            data["outcomes"] = dict(self.outcomes)
        if self.abstract_result is not None:
            data["abstract_result"] = self.abstract_result
        if self.error is not None:
            data["error"] = dict(self.error)
        return data


@dataclass(frozen=True)
class CheckOutcome:
    """Result of one semantics in a differential check."""

    semantics: str
    value: Value | None = None
    error: str | None = None
    supported: bool = True

    def __str__(self) -> str:
        if not self.supported:
            return "unsupported"
        if self.error is not None:
            return self.error
        assert self.value is not None
        return render_value(self.value)


def _error_kind(err: PureDemandError) -> str:
    match err:
        case AnalysisBudgetError():
            return "budget exhausted"
        case FuelExhaustedError():
            return "fuel exhausted"
        case StuckError():
            return "stuck"
        case EvaluationError():
            return "evaluation error"
        case TypeMismatchError():
            return "type mismatch"
    return type(err).__name__


def _mode(args: argparse.Namespace) -> str:
    match args.command:
        case "interp":
            return f"interp:{args.semantics}"
        case "analyze":
            return f"analyze:{args.engine}"
    return args.command


def _read_program(path: Path, report: RunReport) -> Program:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        msg = f"Cannot read program {path}: {err.strerror}"
        raise ParseError(msg) from err
    with report.timed("parse"):
        return parse_program(text)


def _value_of(session: Any, result: Any) -> Value:
    if isinstance(session, DemandInterpreter):
        return session.force(result)
    return erase(result)


def check_program(
    program: Program,
    interpreters: Interpreters = INTERPRETERS,
    fuel: int | None = DEFAULT_FUEL,
) -> list[CheckOutcome]:
    """Run every semantics that supports the program and collect the outcomes."""
    outcomes = []
    for name, interpreter in interpreters.items():
        session = interpreter(program, EvalOptions(fuel=fuel))
        try:
            value = _value_of(session, session.run())
        except UnsupportedConstructError as err:
            _LOGGER.debug("%s semantics skipped: %s", name, err)
            outcomes.append(CheckOutcome(name, supported=False))
        except (EvaluationError, TypeMismatchError) as err:
            outcomes.append(CheckOutcome(name, error=_error_kind(err)))
        else:
            outcomes.append(CheckOutcome(name, value=value))
    return outcomes


def agree(outcomes: Sequence[CheckOutcome]) -> bool:
    """Whether all supporting semantics produced the same outcome."""
    seen = {(outcome.value, outcome.error) for outcome in outcomes if outcome.supported}
    return len(seen) <= 1


def cmd_interp(args: argparse.Namespace, config: ToolConfig, out: TextIO) -> RunReport:
    """Evaluate a program under one semantics and print its value."""
    report = RunReport(str(args.program), _mode(args))
    program = _read_program(args.program, report)
    trace = (lambda line: print(line, file=sys.stderr)) if args.trace else None
    options = EvalOptions(
        cache=config.cache, fuel=config.fuel, skip_arg=args.skip_arg, trace=trace
    )
    session = INTERPRETERS[args.semantics](program, options)
    with report.timed("eval"):
        value = _value_of(session, session.run())
    report.result = render_value(value)
    stats = session.stats
    report.counters = {
        "rule_firings": stats.total_firings,
        "application_firings": stats.application_firings,
        "cache_hits": stats.cache_hits,
        "cache_misses": stats.cache_misses,
        "force_cache_hits": stats.force_cache_hits,
        "function_position_lookups": stats.function_position_lookups,
    }
    by_label = {node.label: node for node in program.assertions()}
    for label, holds in stats.assertions:
        key = f"{by_label[label].binder}@{label}"
        if report.verdicts.get(key) != "violated":
            report.verdicts[key] = "holds" if holds else "violated"
    if not args.json:
        print(report.result, file=out)
        for key, verdict in report.verdicts.items():
            print(f"letassert {key}: {verdict}", file=out)
    _LOGGER.debug("Counters: %s", report.counters)
    return report


def cmd_check(args: argparse.Namespace, config: ToolConfig, out: TextIO) -> RunReport:
    """Compare the value of a program across all semantics."""
    report = RunReport(str(args.program), "check")
    program = _read_program(args.program, report)
    with report.timed("eval"):
        outcomes = check_program(program, fuel=config.fuel)
    report.outcomes = {outcome.semantics: str(outcome) for outcome in outcomes}
    agreed = agree(outcomes)
    report.result = "agree" if agreed else "disagree"
    if not args.json:
        for semantics, outcome in report.outcomes.items():
            print(f"{semantics}\t{outcome}", file=out)
        print(report.result, file=out)
    if not agreed:
        _LOGGER.error("Semantics disagree on %s: %s", args.program, report.outcomes)
        report.exit_code = EXIT_DISAGREEMENT
    return report


def _run_analysis(
    program: Program, engine: str, config: ToolConfig, report: RunReport
) -> AnalysisResult | None:
    cfg = config.analysis
    with report.timed("analyze"):
        if engine == "single-path":
            found = analyze_single_path(program, cfg.k, cfg.node_budget)
            report.counters = {"nodes": found.nodes, "exhausted": int(found.exhausted)}
            report.result = render_inline(AbsRes.of(found.atoms))
            return None
        if engine == "core":
            analysis = analyze_all_paths_core(program, cfg)
        else:
            analysis = analyze(program, cfg)
    stats = analysis.stats
    report.counters = {
        "rule_firings": stats.rule_firings.total(),
        "nodes": stats.nodes,
        "stitched_pops": stats.stitched_pops,
        "stubs_emitted": stats.stubs_emitted,
        "monotonicity_checks": stats.monotonicity_checks,
        "fragments": len(analysis.fragments),
    }
    return analysis


def _write_chc(path: Path, result: AbsRes, analysis: AnalysisResult) -> None:
    try:
        if analysis.assertions:
            first = analysis.assertions[0]
            system = to_chc(simplify(first.result))
            text = emit_smtlib(system, protected_query(system, first.assertion))
            if len(analysis.assertions) > 1:
                _LOGGER.info("Clauses written for letassert %s only", first.assertion.binder)
        else:
            text = emit_smtlib(to_chc(result))
    except ChcTranslationError as err:
        _LOGGER.warning("No clauses written to %s: %s", path, err)
        return
    path.write_text(text, encoding="utf-8")
    _LOGGER.info("Clauses written to %s", path)


def cmd_analyze(args: argparse.Namespace, config: ToolConfig, out: TextIO) -> RunReport:
    """Analyze a program, check its assertions and write the requested renderings."""
    report = RunReport(str(args.program), _mode(args))
    program = _read_program(args.program, report)
    analysis = _run_analysis(program, args.engine, config, report)
    if analysis is None:
        if not args.json:
            print(report.result, file=out)
        return report

    with report.timed("simplify"):
        result = simplify(analysis.result)
    report.result = render_inline(result)
    report.abstract_result = to_json(result)
    with report.timed("solve"):
        for found in analysis.assertions:
            key = f"{found.assertion.binder}@{found.assertion.label}"
            verdict = verify_letassert(found.result, found.assertion, config.analysis)
            report.verdicts[key] = str(verdict)

    if args.dot is not None:
        args.dot.write_text(render_dot(result), encoding="utf-8")
        _LOGGER.info("Graph written to %s", args.dot)
    if args.chc is not None:
        _write_chc(args.chc, result, analysis)
    if not args.json:
        if args.tree:
            print(format_tree(result), file=out, end="")
        else:
            print(report.result, file=out)
        for key, verdict in report.verdicts.items():
            print(f"letassert {key}: {verdict}", file=out)
        print(f"fragments: {len(analysis.fragments)}", file=out)
    return report


def cmd_pretty(args: argparse.Namespace, _config: ToolConfig, out: TextIO) -> RunReport:
    """Print the program in canonical concrete syntax."""
    report = RunReport(str(args.program), "pretty")
    report.result = pretty(_read_program(args.program, report).root)
    if not args.json:
        print(report.result, file=out)
    return report


def cmd_dump_ast(args: argparse.Namespace, _config: ToolConfig, out: TextIO) -> RunReport:
    """Print one line per labeled node."""
    report = RunReport(str(args.program), "dump-ast")
    report.result = dump_ast(_read_program(args.program, report))
    if not args.json:
        print(report.result, file=out, end="")
    return report


class _DotWriter:
    """Lays out a result as a graph, one node per atom under each parent scope."""

    def __init__(self) -> None:
        self.nodes: list[str] = []
        self.edges: list[str] = []
        self._seen: dict[tuple[int, tuple[tuple[Site, str], ...]], str] = {}

    def res(
        self, result: AbsRes, scope: tuple[tuple[Site, str], ...], parent: str | None, label: str
    ) -> None:
        for atom in result.atoms:
            name = self.atom(atom, scope)
            if parent is not None:
                attrs = f' [label="{_escape(label)}"]' if label else ""
                self.edges.append(f"  {parent} -> {name}{attrs};")

    def atom(self, atom: AbsAtom, scope: tuple[tuple[Site, str], ...]) -> str:
        key = (id(atom), scope)
        if (name := self._seen.get(key)) is not None:
            return name
        name = f"n{len(self.nodes)}"
        self._seen[key] = name
        shape = "box" if isinstance(atom, Labeled | Guarded) else "ellipse"
        self.nodes.append(f'  {name} [label="{_escape(_caption(atom))}", shape={shape}];')
        match atom:
            case Labeled(inner=inner, site=site):
                inner_scope = (*((s, n) for s, n in scope if s != site), (site, name))
                self.res(inner, inner_scope, name, "")
            case Stub(site=site):
                if (target := dict(scope).get(site)) is not None:
                    self.edges.append(f"  {name} -> {target} [style=dashed];")
            case OpAtom(left=left, right=right):
                self.res(left, scope, name, "left")
                self.res(right, scope, name, "right")
            case RecordAtom(fields=fields):
                for field_name, value in fields:
                    self.res(value, scope, name, field_name)
            case Guarded(guard=guard, inner=inner):
                self.res(guard.result, scope, name, "when")
                self.res(inner, scope, name, "then")
            case _:
                for child in atom.children:
                    self.res(child, scope, name, "")
        return name


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _caption(atom: AbsAtom) -> str:  # noqa: PLR0911
    match atom:
        case FunAtom(label=label, stack=stack):
            return f"fun@{label} {stack}"
        case IntAtom(value=value):
            return str(value)
        case BoolAtom(value=value):
            return "true" if value else "false"
        case OpAtom(op=op):
            return op
        case RecordAtom():
            return "record"
        case ProjAtom(field=name):
            return f".{name}"
        case InspectAtom(field=name):
            return f"{name} in"
        case Labeled(site=site):
            return str(site)
        case Stub(site=site):
            return f"stub {site}"
        case Guarded(guard=guard):
            return f"guard = {'true' if guard.value else 'false'}"
    return type(atom).__name__


def render_dot(result: AbsRes) -> str:
    """Render a result as a DOT digraph; stubs point back at their parent with dashed edges."""
    writer = _DotWriter()
    writer.res(result, (), None, "")
    return "\n".join(["digraph result {", *writer.nodes, *writer.edges, "}"]) + "\n"


COMMANDS: dict[str, Callable[[argparse.Namespace, ToolConfig, TextIO], RunReport]] = {
    "interp": cmd_interp,
    "check": cmd_check,
    "analyze": cmd_analyze,
    "pretty": cmd_pretty,
    "dump-ast": cmd_dump_ast,
}


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser."""
    parser = argparse.ArgumentParser(
        prog=DOMAIN, description="Pure demand interpreters and stack-stitching analysis."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--config", type=Path, help="YAML configuration file")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at debug level")
    commands = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("program", type=Path, help="Program file")
    common.add_argument("--json", action="store_true", help="Print the run report as JSON")

    interp = commands.add_parser("interp", parents=[common], help="Evaluate a program")
    interp.add_argument("--semantics", choices=SEMANTICS, default="demand")
    interp.add_argument(
        "--cache", action=argparse.BooleanOptionalAction, default=None, help="Memoize lookups"
    )
    interp.add_argument("--skip-arg", action="store_true", help="Do not evaluate arguments")
    interp.add_argument("--fuel", type=int, help="Maximum number of rule firings")
    interp.add_argument("--trace", action="store_true", help="Print rule firings to stderr")

    check = commands.add_parser("check", parents=[common], help="Compare all semantics")
    check.add_argument("--fuel", type=int, help="Maximum number of rule firings")

    analyze_cmd = commands.add_parser("analyze", parents=[common], help="Analyze a program")
    analyze_cmd.add_argument("--engine", choices=ENGINES, default="extended")
    analyze_cmd.add_argument("--k", type=int, help="Stack frames kept")
    analyze_cmd.add_argument("--eval-depth", type=int, help="Stub unrolling depth")
    analyze_cmd.add_argument("--budget", type=int, help="Derivation node budget")
    analyze_cmd.add_argument(
        "--strict-var-visited",
        action="store_true",
        default=None,
        help="Mark function-position lookups of non-local variables as visited",
    )
    analyze_cmd.add_argument("--solver", help="Horn clause solver command")
    analyze_cmd.add_argument("--timeout", type=int, help="Solver timeout in milliseconds")
    analyze_cmd.add_argument("--dot", type=Path, help="Write the result graph here")
    analyze_cmd.add_argument("--chc", type=Path, help="Write the SMT-LIB clauses here")
    analyze_cmd.add_argument("--tree", action="store_true", help="Print the result as a tree")

    commands.add_parser("pretty", parents=[common], help="Print canonical source")
    commands.add_parser("dump-ast", parents=[common], help="Print the labeled syntax tree")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, dict[str, Any]]:
    def flag(name: str) -> Any:
        return getattr(args, name, None)

    return {
        CONF_INTERPRETER: {"fuel": flag("fuel"), "cache": flag("cache")},
        CONF_ANALYSIS: {
            "k": flag("k"),
            "eval_depth": flag("eval_depth"),
            "node_budget": flag("budget"),
            "strict_var_visited": flag("strict_var_visited"),
        },
        CONF_SOLVER: {"path": flag("solver"), "timeout_ms": flag("timeout")},
    }


def setup_logging(config: ToolConfig, *, verbose: bool = False) -> None:
    """Send package logs to stderr with colored level names."""
    logger = logging.getLogger(DOMAIN)
    for handler in list(logger.handlers):
        if getattr(handler, DOMAIN, False):
            logger.removeHandler(handler)
    handler = colorlog.StreamHandler(sys.stderr)
    handler.setFormatter(colorlog.ColoredFormatter(_LOG_FORMAT))
    setattr(handler, DOMAIN, True)
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else config.log_level.upper())
    for name, level in config.log_levels.items():
        logging.getLogger(name).setLevel(level.upper())


def _error_report(args: argparse.Namespace, err: PureDemandError, code: int) -> RunReport:
    return RunReport(
        str(args.program),
        _mode(args),
        error={"kind": _error_kind(err), "message": str(err)},
        exit_code=code,
    )


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    """Run the command line and return the exit code."""
    args = build_parser().parse_args(argv)
    out = out or sys.stdout
    try:
        config = load_config(args.config, _overrides(args))
    except ConfigError as err:
        print(f"{DOMAIN}: {err}", file=sys.stderr)
        if args.json:
            report = _error_report(args, err, EXIT_INVALID)
            print(json.dumps(report.to_json(), indent=2), file=out)
        return EXIT_INVALID
    setup_logging(config, verbose=args.verbose)

    try:
        report = COMMANDS[args.command](args, config, out)
    except AnalysisBudgetError as err:
        _LOGGER.error("Analysis budget exhausted after %s nodes: %s", err.nodes, err)
        report = _error_report(args, err, EXIT_BUDGET)
    except (EvaluationError, TypeMismatchError) as err:
        _LOGGER.error("%s: %s", _error_kind(err), err)
        report = _error_report(args, err, EXIT_STUCK)
    except PureDemandError as err:
        _LOGGER.error("%s: %s", type(err).__name__, err)
        report = _error_report(args, err, EXIT_INVALID)
    except Exception:
        _LOGGER.exception("Unexpected error")
        raise

    if args.json:
        print(json.dumps(report.to_json(), indent=2), file=out)
    return report.exit_code
