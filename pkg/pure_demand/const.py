"""Constants for the pure demand command-line tool."""

import json
from pathlib import Path

from .demand_base.const import (
    DEFAULT_EVAL_DEPTH,
    DEFAULT_FUEL,
    DEFAULT_K,
    DEFAULT_NODE_BUDGET,
    DEFAULT_SOLVER_TIMEOUT_MS,
)

DOMAIN = "pure_demand"

MANIFEST = json.loads(Path(__file__).with_name("manifest.json").read_text(encoding="utf-8"))
VERSION: str = MANIFEST["version"]

ENV_SOLVER = "PURE_DEMAND_SOLVER"
"""Environment variable naming the default Horn clause solver."""

DEFAULT_LOG_LEVEL = "info"
LOG_LEVELS = ("debug", "info", "warning", "error", "critical")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_STUCK = 2
EXIT_BUDGET = 3
EXIT_DISAGREEMENT = 4

REPORT_SCHEMA_VERSION = 1

SEMANTICS = ("demand", "env", "chain", "display", "opt")

__all__ = [
    "DEFAULT_EVAL_DEPTH",
    "DEFAULT_FUEL",
    "DEFAULT_K",
    "DEFAULT_LOG_LEVEL",
    "DEFAULT_NODE_BUDGET",
    "DEFAULT_SOLVER_TIMEOUT_MS",
    "DOMAIN",
    "ENV_SOLVER",
    "EXIT_BUDGET",
    "EXIT_DISAGREEMENT",
    "EXIT_INVALID",
    "EXIT_OK",
    "EXIT_STUCK",
    "LOG_LEVELS",
    "MANIFEST",
    "REPORT_SCHEMA_VERSION",
    "SEMANTICS",
    "VERSION",
]
