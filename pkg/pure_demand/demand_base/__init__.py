"""Pure demand semantics, its analyses and the Horn clause bridge."""

from .abstract import AbsAtom, AbsRes, Site, format_tree, open_stubs, render_inline, to_json
from .analyzer import (
    AnalysisResult,
    AnalyzeConfig,
    analyze,
    analyze_all_paths_core,
    analyze_single_path,
    push_frame_k,
    suffixes,
)
from .chc_bridge import (
    ChcSystem,
    SolverConfig,
    Verdict,
    emit_smtlib,
    least_model,
    protected_query,
    solve,
    to_chc,
    verify_letassert,
)
from .interpreters import (
    INTERPRETERS,
    EvalOptions,
    eval_chain,
    eval_demand,
    eval_display,
    eval_env,
    eval_optimized,
    force,
)
from .resval import ConcSet, abs_eval, branch_feasibility, simplify
from .stack import Stack, StackArena
from .syntax_core import Program, dump_ast, lexical_depth, my_fun, parse_program, pretty

__all__ = [
    "INTERPRETERS",
    "AbsAtom",
    "AbsRes",
    "AnalysisResult",
    "AnalyzeConfig",
    "ChcSystem",
    "ConcSet",
    "EvalOptions",
    "Program",
    "Site",
    "SolverConfig",
    "Stack",
    "StackArena",
    "Verdict",
    "abs_eval",
    "analyze",
    "analyze_all_paths_core",
    "analyze_single_path",
    "branch_feasibility",
    "dump_ast",
    "emit_smtlib",
    "eval_chain",
    "eval_demand",
    "eval_display",
    "eval_env",
    "eval_optimized",
    "force",
    "format_tree",
    "least_model",
    "lexical_depth",
    "my_fun",
    "open_stubs",
    "parse_program",
    "pretty",
    "protected_query",
    "push_frame_k",
    "render_inline",
    "simplify",
    "solve",
    "suffixes",
    "to_chc",
    "to_json",
    "verify_letassert",
]
