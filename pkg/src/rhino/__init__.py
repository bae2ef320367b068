"""Deterministic fixed-tick reactive skill engine for hand-occupancy driven
human-robot interaction: intention debouncing, skill chaining over an
occupancy graph, reversible interruption, and a keypoint-distance safety
supervisor, plus a simulated world, trace tooling and a session server.
"""

from .episode import (
    MODE_DIRECT,
    MODE_RAW,
    Session,
    collect_gesture_samples,
    run_script,
    verify_trace,
)
from .features import CentroidModel, encode_features, fit_centroids, load_model, save_model
from .graph import OccupancyGraph
from .occupancy import HandOccupancy, OccupancyPattern, TransitionPattern, apply_transition, matches
from .planner import Planner, PlannerState
from .safety import SafetyStatus, check_safety
from .scenario import Scenario, ScenarioError, load_bundled, load_scenario, resolve_scenario
from .trace import compute_metrics, dump_trace, parse_trace, read_trace, write_trace
from .world import LeaderInput, World

__all__ = [
    "CentroidModel",
    "HandOccupancy",
    "LeaderInput",
    "MODE_DIRECT",
    "MODE_RAW",
    "OccupancyGraph",
    "OccupancyPattern",
    "Planner",
    "PlannerState",
    "SafetyStatus",
    "Scenario",
    "ScenarioError",
    "Session",
    "TransitionPattern",
    "World",
    "apply_transition",
    "check_safety",
    "collect_gesture_samples",
    "compute_metrics",
    "dump_trace",
    "encode_features",
    "fit_centroids",
    "load_bundled",
    "load_model",
    "load_scenario",
    "matches",
    "parse_trace",
    "read_trace",
    "resolve_scenario",
    "run_script",
    "save_model",
    "verify_trace",
    "write_trace",
]

__version__ = "0.1.0"
