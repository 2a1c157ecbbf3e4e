# Scenario configuration, closed-loop simulation, traces and metrics
from src.runner.config import (
    ConfigError,
    ScenarioConfig,
    SystemParameters,
    load_config,
    parse_config,
)
from src.runner.metrics import Metrics, compute_metrics, metrics_from_frame
from src.runner.simulation import ScenarioSimulation, SimulationDivergedError, run_simulation
from src.runner.trace import COLUMNS, SimTrace, TraceRecord, emit_trace, read_trace

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "SystemParameters",
    "load_config",
    "parse_config",
    "Metrics",
    "compute_metrics",
    "metrics_from_frame",
    "ScenarioSimulation",
    "SimulationDivergedError",
    "run_simulation",
    "COLUMNS",
    "SimTrace",
    "TraceRecord",
    "emit_trace",
    "read_trace",
]
