"""Tests for configuration loading."""

from __future__ import annotations

import logging
from pathlib import Path

import pytest

from pure_demand.cli import setup_logging
from pure_demand.config import CONF_ANALYSIS, CONF_INTERPRETER, CONF_SOLVER, load_config
from pure_demand.const import DEFAULT_EVAL_DEPTH, DEFAULT_FUEL, DEFAULT_K, DOMAIN, ENV_SOLVER
from pure_demand.demand_base.exceptions import ConfigError


def _write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "configuration.yaml"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults() -> None:
    config = load_config(environ={})
    assert config.fuel == DEFAULT_FUEL
    assert config.cache
    assert config.analysis.k == DEFAULT_K
    assert config.analysis.eval_depth == DEFAULT_EVAL_DEPTH
    assert config.analysis.solver is None
    assert config.log_level == "info"


def test_file_values(tmp_path: Path) -> None:
    path = _write(
        tmp_path,
        """
interpreter:
  fuel: 5000
  cache: false
analysis:
  k: 3
  strict_var_visited: true
solver:
  path: z3 fp.engine=spacer
  timeout_ms: 250
logger:
  default: warning
  logs:
    pure_demand.demand_base.analyzer: DEBUG
""",
    )
    config = load_config(path, environ={})
    assert config.fuel == 5000
    assert not config.cache
    assert config.analysis.k == 3
    assert config.analysis.strict_var_visited
    assert config.analysis.solver is not None
    assert config.analysis.solver.path == "z3 fp.engine=spacer"
    assert config.analysis.solver.timeout_ms == 250
    assert config.log_level == "warning"
    assert config.log_levels == {"pure_demand.demand_base.analyzer": "debug"}


def test_precedence(tmp_path: Path) -> None:
    """Flags beat the environment, which beats the file."""
    path = _write(tmp_path, "analysis:\n  k: 3\nsolver:\n  path: from-file\n")
    config = load_config(path, environ={ENV_SOLVER: "from-env"})
    assert config.analysis.k == 3
    assert config.analysis.solver.path == "from-env"
    config = load_config(
        path,
        {CONF_ANALYSIS: {"k": 5, "eval_depth": None}, CONF_SOLVER: {"path": "from-flag"}},
        environ={ENV_SOLVER: "from-env"},
    )
    assert config.analysis.k == 5
    assert config.analysis.eval_depth == DEFAULT_EVAL_DEPTH
    assert config.analysis.solver.path == "from-flag"


def test_unset_flags_keep_file_values(tmp_path: Path) -> None:
    path = _write(tmp_path, "interpreter:\n  fuel: 77\n")
    config = load_config(path, {CONF_INTERPRETER: {"fuel": None, "cache": None}}, environ={})
    assert config.fuel == 77
    assert config.cache


def test_empty_file(tmp_path: Path) -> None:
    assert load_config(_write(tmp_path, ""), environ={}).fuel == DEFAULT_FUEL


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ("analysis:\n  k: 0\n", "analysis.k"),
        ("interpreter:\n  fuel: lots\n", "interpreter.fuel"),
        ("logger:\n  default: loud\n", "logger.default"),
        ("colors: true\n", "colors"),
        ("- just\n- a list\n", "must contain a mapping"),
        ("analysis: [1\n", "not valid YAML"),
    ],
)
def test_invalid_files(tmp_path: Path, text: str, message: str) -> None:
    with pytest.raises(ConfigError, match=message):
        load_config(_write(tmp_path, text), environ={})


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ConfigError, match="Cannot read configuration file"):
        load_config(tmp_path / "absent.yaml", environ={})


def test_logging_setup(tmp_path: Path) -> None:
    path = _write(tmp_path, "logger:\n  default: error\n  logs:\n    pure_demand.cli: debug\n")
    config = load_config(path, environ={})
    setup_logging(config)
    setup_logging(config)
    logger = logging.getLogger(DOMAIN)
    assert len([h for h in logger.handlers if getattr(h, DOMAIN, False)]) == 1
    assert logger.level == logging.ERROR
    assert logging.getLogger("pure_demand.cli").level == logging.DEBUG
    setup_logging(config, verbose=True)
    assert logger.level == logging.DEBUG


def test_strict_var_visited_flag() -> None:
    config = load_config(None, {CONF_ANALYSIS: {"strict_var_visited": True}}, environ={})
    assert config.analysis.strict_var_visited
    config = load_config(None, {CONF_ANALYSIS: {"strict_var_visited": None}}, environ={})
    assert not config.analysis.strict_var_visited
