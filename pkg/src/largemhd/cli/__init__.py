"""Configuration, scenarios, plots and the command-line entry point."""

from .config import ConfigError, RunConfig, load_config, parse_config, serialize_config
from .scenarios import SCENARIOS, Check, ScenarioResult, execute, run_scenario

__all__ = [
    "Check",
    "ConfigError",
    "RunConfig",
    "SCENARIOS",
    "ScenarioResult",
    "execute",
    "load_config",
    "parse_config",
    "run_scenario",
    "serialize_config",
]
