"""Layered missile defense simulator: electronic warfare, cyber and deception
against an AI-guided seeker, coordinated by a learned or scripted policy."""

from .config import BUILTIN_SCENARIOS, DEFAULT_BATTERY, Calibration, ScenarioConfig, load_battery
from .coordinator import Outcome, action_space, load_policy, save_policy
from .errors import ConfigError, DefenseSimError, RejectedActionError
from .harness import BatteryReport, Episode, RunResult, compare_to_reference, run_battery, run_episode

__all__ = [
    "BUILTIN_SCENARIOS",
    "DEFAULT_BATTERY",
    "BatteryReport",
    "Calibration",
    "ConfigError",
    "DefenseSimError",
    "Episode",
    "Outcome",
    "RejectedActionError",
    "RunResult",
    "ScenarioConfig",
    "action_space",
    "compare_to_reference",
    "load_battery",
    "load_policy",
    "run_battery",
    "run_episode",
    "save_policy",
]
__version__ = "0.1.0"
