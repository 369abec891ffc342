"""Scenario harness: configs, engine, metrics, trace I/O, session, CLI."""

from .config import ConfigError, ScenarioConfig, apply_overrides, from_json, preset
from .engine import Engine, EngineDivergence, ScenarioTrace, run_scenario
from .metrics import DEFAULT_BINS, MetricsReport, compute_metrics, mean_error_above
from .traceio import export_trace, load_trace

__all__ = [
    "ConfigError", "ScenarioConfig", "apply_overrides", "from_json", "preset",
    "Engine", "EngineDivergence", "ScenarioTrace", "run_scenario",
    "DEFAULT_BINS", "MetricsReport", "compute_metrics", "mean_error_above",
    "export_trace", "load_trace",
]
