"""Configuration for the pure demand command-line tool."""

from __future__ import annotations

import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import voluptuous as vol
import yaml

from .const import (
    DEFAULT_EVAL_DEPTH,
    DEFAULT_FUEL,
    DEFAULT_K,
    DEFAULT_LOG_LEVEL,
    DEFAULT_NODE_BUDGET,
    DEFAULT_SOLVER_TIMEOUT_MS,
    ENV_SOLVER,
    LOG_LEVELS,
)
from .demand_base.analyzer import AnalyzeConfig
from .demand_base.chc_bridge import SolverConfig
from .demand_base.exceptions import ConfigError

if TYPE_CHECKING:
    from pathlib import Path

_LOGGER = logging.getLogger(__name__)

CONF_INTERPRETER = "interpreter"
CONF_ANALYSIS = "analysis"
CONF_SOLVER = "solver"
CONF_LOGGER = "logger"

_POSITIVE = vol.All(int, vol.Range(min=1))
_NATURAL = vol.All(int, vol.Range(min=0))
_LEVEL = vol.All(str, vol.Lower, vol.In(LOG_LEVELS))

INTERPRETER_SCHEMA = vol.Schema(
    {
        vol.Optional("fuel", default=DEFAULT_FUEL): vol.Any(None, _POSITIVE),
        vol.Optional("cache", default=True): bool,
    }
)

ANALYSIS_SCHEMA = vol.Schema(
    {
        vol.Optional("k", default=DEFAULT_K): _POSITIVE,
        vol.Optional("eval_depth", default=DEFAULT_EVAL_DEPTH): _NATURAL,
        vol.Optional("node_budget", default=DEFAULT_NODE_BUDGET): _POSITIVE,
        vol.Optional("strict_var_visited", default=False): bool,
    }
)

SOLVER_SCHEMA = vol.Schema(
    {
        vol.Optional("path", default=None): vol.Any(None, str),
        vol.Optional("timeout_ms", default=DEFAULT_SOLVER_TIMEOUT_MS): _NATURAL,
    }
)

LOGGER_SCHEMA = vol.Schema(
    {
        vol.Optional("default", default=DEFAULT_LOG_LEVEL): _LEVEL,
        vol.Optional("logs", default={}): {str: _LEVEL},
    }
)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_INTERPRETER, default={}): INTERPRETER_SCHEMA,
        vol.Optional(CONF_ANALYSIS, default={}): ANALYSIS_SCHEMA,
        vol.Optional(CONF_SOLVER, default={}): SOLVER_SCHEMA,
        vol.Optional(CONF_LOGGER, default={}): LOGGER_SCHEMA,
    }
)


@dataclass(frozen=True, kw_only=True)
class ToolConfig:
    """Resolved configuration of one command-line run."""

    fuel: int | None = DEFAULT_FUEL
    cache: bool = True
    analysis: AnalyzeConfig = field(default_factory=AnalyzeConfig)
    log_level: str = DEFAULT_LOG_LEVEL
    log_levels: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ToolConfig:
        """Create the configuration from data validated by CONFIG_SCHEMA."""
        solver = data[CONF_SOLVER]
        analysis = data[CONF_ANALYSIS]
        return cls(
            fuel=data[CONF_INTERPRETER]["fuel"],
            cache=data[CONF_INTERPRETER]["cache"],
            analysis=AnalyzeConfig(
                k=analysis["k"],
                eval_depth=analysis["eval_depth"],
                node_budget=analysis["node_budget"],
                strict_var_visited=analysis["strict_var_visited"],
                solver=(
                    SolverConfig(path=solver["path"], timeout_ms=solver["timeout_ms"])
                    if solver["path"]
                    else None
                ),
            ),
            log_level=data[CONF_LOGGER]["default"],
            log_levels=dict(data[CONF_LOGGER]["logs"]),
        )


def _read_file(path: Path) -> dict[str, Any]:
    try:
        with path.open(encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as err:
        msg = f"Cannot read configuration file {path}: {err.strerror}"
        raise ConfigError(msg) from err
    except yaml.YAMLError as err:
        msg = f"Configuration file {path} is not valid YAML: {err}"
        raise ConfigError(msg) from err
    if data is None:
        return {}
    if not isinstance(data, dict):
        msg = f"Configuration file {path} must contain a mapping"
        raise ConfigError(msg)
    return data


def _merge(base: dict[str, Any], overrides: Mapping[str, Mapping[str, Any]]) -> dict[str, Any]:
    merged = dict(base)
    for section, values in overrides.items():
        present = {key: value for key, value in values.items() if value is not None}
        if not present:
            continue
        current = merged.get(section) or {}
        if not isinstance(current, dict):
            msg = f"Configuration section {section} must be a mapping"
            raise ConfigError(msg)
        merged[section] = {**current, **present}
    return merged


def load_config(
    path: Path | None = None,
    overrides: Mapping[str, Mapping[str, Any]] | None = None,
    environ: Mapping[str, str] | None = None,
) -> ToolConfig:
    """
    Resolve the configuration.

    Built-in defaults are overridden by the configuration file, then by the
    solver environment variable, then by overrides (the command-line flags,
    where None means not given).
    """
    data = _read_file(path) if path is not None else {}
    environ = os.environ if environ is None else environ
    if solver_path := environ.get(ENV_SOLVER):
        data = _merge(data, {CONF_SOLVER: {"path": solver_path}})
    data = _merge(data, overrides or {})
    try:
        validated = CONFIG_SCHEMA(data)
    except vol.Invalid as err:
        where = ".".join(str(part) for part in err.path) or "top level"
        msg = f"Invalid configuration at {where}: {err.msg}"
        raise ConfigError(msg) from err
    config = ToolConfig.from_dict(validated)
    _LOGGER.debug("Resolved configuration: %s", config)
    return config
