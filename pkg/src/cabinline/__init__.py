"""Access control and simulation for cabin-based transport lines."""

from .control import (ControlInput, Gamora, NoControl, Static, decide, feedback_input, gamora,
                      gamora_block, parse_policy)
from .model import (BlockPartition, ControlDecision, LineConfig, RateProfile, StationConfig,
                    ValidationError, validate)
from .sim import SimParams, SimTrace, generate_arrivals, run_simulation, service_station
from .stability import capacity, stability
from .stats import WaitingStats, aggregate_runs

__version__ = "0.1.0"

__all__ = [
    "BlockPartition", "ControlDecision", "ControlInput", "Gamora", "LineConfig", "NoControl",
    "RateProfile", "SimParams", "SimTrace", "Static", "StationConfig", "ValidationError",
    "WaitingStats", "aggregate_runs", "capacity", "decide", "feedback_input", "gamora",
    "gamora_block", "generate_arrivals", "parse_policy", "run_simulation", "service_station",
    "stability", "validate",
]
