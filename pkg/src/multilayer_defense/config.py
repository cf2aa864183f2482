"""Scenario configuration: frozen calibration constants, built-in scenarios and YAML loading.

A configuration file is a YAML mapping with three optional top-level keys::

    constants:            # overrides for Calibration fields (nested for ew/costs/reward)
      nav_drift_sd: 20.0
      ew: {noise_floor_dbm: -100.0}
    scenarios:            # new scenarios or overrides of built-ins, keyed by name
      multi_layer: {policy: scripted-coordinated}
    battery:
      base_seed: 1
      runs: 100           # default per scenario
      scenarios: [baseline, ew_only, cyber_only, multi_layer]

Every key is checked; an unknown or ill-typed entry raises ConfigError naming it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .coordinator import ActionCosts, RewardWeights
from .core import PRESETS
from .errors import ConfigError
from .ew import EWConstants
from .policies import CoordinatedSchedule

LAYERS = ("ew", "cyber", "deception")
POLICY_SOURCES = ("none", "scripted-max", "scripted-coordinated", "random", "trained")
DEFAULT_CONFIG_PATH = Path(__file__).with_name("data") / "default_battery.yaml"
DEFAULT_REFERENCE_PATH = Path(__file__).with_name("data") / "reference.yaml"


@dataclass(frozen=True)
class Calibration:
    """Every tunable constant of the simulation, in one place."""

    # kinematics
    speed_mps: float = 250.0
    max_turn_rate: float = 0.35
    fuel_steps: int = 1200
    spawn_range_m: float = 15000.0
    impact_radius_m: float = 200.0
    # navigation
    nav_error_sd_m: float = 10.0
    nav_drift_sd: float = 15.0  # m / sqrt(s) per horizontal axis while jammed
    track_noise_m: float = 50.0
    # seeker and scene
    seeker_freq_hz: float = 3e9
    target_emit_dbm: float = 30.0
    sensing_sigma0: float = 0.25
    q_detect_floor: float = 0.05
    clutter_count: int = 10
    clutter_radius_m: tuple[float, float] = (40.0, 120.0)
    clutter_resemblance: tuple[float, float] = (0.5, 0.9)
    seeker_weights: Optional[str] = None
    surrogate_seed: int = 7
    # electronic warfare
    ew: EWConstants = EWConstants()
    # cyber
    intrusion_rate: float = 0.5
    max_bias_m: float = 400.0
    barrage_difficulty: float = 1.2
    inject_intensity: float = 1.0
    tamper_eps_random: float = 0.3
    tamper_eps_targeted: float = 0.02
    # deception
    decoy_stock: int = 12
    decoy_fidelity: float = 0.9
    decoy_radius_m: float = 1200.0
    decoy_standoff_m: float = 300.0
    decoy_emit_dbm: float = 45.0
    drift_coefficient: float = 0.3
    # coordinator
    jamming_energy: float = 600.0
    cyber_bandwidth: float = 80.0
    costs: ActionCosts = ActionCosts()
    reward: RewardWeights = RewardWeights()
    engage_range_m: float = 3000.0
    schedule: CoordinatedSchedule = CoordinatedSchedule()


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    layers: frozenset = frozenset()
    region: str = "mixed"
    policy: str = "none"
    policy_path: Optional[str] = None
    dt: float = 0.1
    max_steps: int = 1200
    hit_radius_m: float = 50.0
    calibration: Calibration = Calibration()

    def validate(self) -> None:
        if self.dt <= 0:
            raise ConfigError("dt must be positive", key=f"scenarios.{self.name}.dt")
        if self.hit_radius_m <= 0:
            raise ConfigError("hit_radius_m must be positive", key=f"scenarios.{self.name}.hit_radius_m")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1", key=f"scenarios.{self.name}.max_steps")
        bad = set(self.layers) - set(LAYERS)
        if bad:
            raise ConfigError(f"unknown layers {sorted(bad)}", key=f"scenarios.{self.name}.layers")
        if self.region != "mixed" and self.region not in PRESETS:
            raise ConfigError(f"unknown region {self.region!r}", key=f"scenarios.{self.name}.region")
        if self.policy not in POLICY_SOURCES:
            raise ConfigError(f"unknown policy source {self.policy!r}", key=f"scenarios.{self.name}.policy")
        if self.policy == "trained" and not self.policy_path:
            raise ConfigError("trained policy needs policy_path", key=f"scenarios.{self.name}.policy_path")


BUILTIN_SCENARIOS: dict[str, ScenarioConfig] = {
    s.name: s
    for s in (
        ScenarioConfig("baseline", frozenset(), policy="none"),
        ScenarioConfig("ew_only", frozenset({"ew"}), policy="scripted-max"),
        ScenarioConfig("cyber_only", frozenset({"cyber"}), policy="scripted-max"),
        ScenarioConfig("deception_only", frozenset({"deception"}), policy="scripted-max"),
        ScenarioConfig("multi_layer", frozenset(LAYERS), policy="scripted-coordinated"),
    )
}
DEFAULT_BATTERY = ("baseline", "ew_only", "cyber_only", "multi_layer")
SINGLE_LAYER = ("ew_only", "cyber_only", "deception_only")


@dataclass(frozen=True)
class BatteryConfig:
    scenarios: tuple[ScenarioConfig, ...]
    runs: tuple[int, ...]
    base_seed: int = 1
    catalog: dict = field(default_factory=dict, compare=False)

    def items(self):
        return list(zip(self.scenarios, self.runs))


# --------------------------------------------------------------------------- loading


def _coerce(value: Any, current: Any, key: str) -> Any:
    if dataclasses.is_dataclass(current):
        if not isinstance(value, dict):
            raise ConfigError("expected a mapping", key=key)
        return _override(current, value, key)
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError("expected true/false", key=key)
        return value
    if isinstance(current, int) and not isinstance(current, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("expected an integer", key=key)
        return value
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("expected a number", key=key)
        return float(value)
    if isinstance(current, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(current):
            raise ConfigError(f"expected a list of {len(current)} values", key=key)
        return tuple(_coerce(v, c, f"{key}[{i}]") for i, (v, c) in enumerate(zip(value, current)))
    if isinstance(current, dict):
        if not isinstance(value, dict):
            raise ConfigError("expected a mapping", key=key)
        return dict(value)
    if current is None or isinstance(current, str):
        if value is not None and not isinstance(value, str):
            raise ConfigError("expected a string", key=key)
        return value
    raise ConfigError("unsupported value", key=key)


def _override(obj, values: dict, prefix: str):
    names = {f.name for f in fields(obj)}
    changes = {}
    for k, v in values.items():
        key = f"{prefix}.{k}"
        if k not in names:
            raise ConfigError(f"unknown key {k!r}", key=key)
        changes[k] = _coerce(v, getattr(obj, k), key)
    return replace(obj, **changes)


def calibration_from_dict(values: Optional[dict], base: Calibration = Calibration()) -> Calibration:
    return _override(base, values or {}, "constants")


def scenario_from_dict(name: str, values: dict, calibration: Calibration) -> ScenarioConfig:
    base = BUILTIN_SCENARIOS.get(name, ScenarioConfig(name))
    values = dict(values or {})
    if "layers" in values:
        layers = values.pop("layers")
        if not isinstance(layers, list) or not all(isinstance(x, str) for x in layers):
            raise ConfigError("expected a list of layer names", key=f"scenarios.{name}.layers")
        base = replace(base, layers=frozenset(layers))
    if "calibration" in values:
        raise ConfigError("per-scenario constants are not supported; use top-level constants", key=f"scenarios.{name}.calibration")
    cfg = _override(base, values, f"scenarios.{name}")
    cfg = replace(cfg, name=name, calibration=calibration)
    cfg.validate()
    return cfg


def battery_from_dict(data: Optional[dict]) -> BatteryConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping", key="<root>")
    unknown = set(data) - {"constants", "scenarios", "battery"}
    if unknown:
        raise ConfigError(f"unknown top-level key {sorted(unknown)[0]!r}", key=sorted(unknown)[0])
    constants = data.get("constants") or {}
    if not isinstance(constants, dict):
        raise ConfigError("expected a mapping", key="constants")
    calib = calibration_from_dict(constants)
    defs = data.get("scenarios") or {}
    if not isinstance(defs, dict):
        raise ConfigError("expected a mapping of scenario name to settings", key="scenarios")
    scenarios = {name: replace(cfg, calibration=calib) for name, cfg in BUILTIN_SCENARIOS.items()}
    for name, values in defs.items():
        if values is not None and not isinstance(values, dict):
            raise ConfigError("expected a mapping", key=f"scenarios.{name}")
        scenarios[name] = scenario_from_dict(name, values or {}, calib)
    battery = data.get("battery") or {}
    if not isinstance(battery, dict):
        raise ConfigError("expected a mapping", key="battery")
    unknown = set(battery) - {"base_seed", "runs", "scenarios"}
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r}", key=f"battery.{sorted(unknown)[0]}")
    base_seed = battery.get("base_seed", 1)
    default_runs = battery.get("runs", 100)
    for key, v in (("base_seed", base_seed), ("runs", default_runs)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError("expected an integer", key=f"battery.{key}")
    if default_runs < 1:
        raise ConfigError("runs must be at least 1", key="battery.runs")
    entries = battery.get("scenarios", list(DEFAULT_BATTERY))
    if not isinstance(entries, list) or not entries:
        raise ConfigError("expected a nonempty list", key="battery.scenarios")
    chosen, runs = [], []
    for i, entry in enumerate(entries):
        if isinstance(entry, str):
            name, n = entry, default_runs
        elif isinstance(entry, dict) and set(entry) <= {"name", "runs"} and "name" in entry:
            name, n = entry["name"], entry.get("runs", default_runs)
        else:
            raise ConfigError("expected a scenario name or {name, runs}", key=f"battery.scenarios[{i}]")
        if name not in scenarios:
            raise ConfigError(f"unknown scenario {name!r}", key=f"battery.scenarios[{i}]")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ConfigError("runs must be a positive integer", key=f"battery.scenarios[{i}].runs")
        scenarios[name].validate()
        chosen.append(scenarios[name])
        runs.append(n)
    return BatteryConfig(tuple(chosen), tuple(runs), base_seed, scenarios)


def load_battery(path=DEFAULT_CONFIG_PATH) -> BatteryConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", key="<file>") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}", key="<file>") from exc
    return battery_from_dict(data)


def default_scenario(name: str, path=DEFAULT_CONFIG_PATH) -> ScenarioConfig:
    """A scenario as defined (with the committed constants) by the default configuration."""
    catalog = load_battery(path).catalog
    if name not in catalog:
        raise ConfigError(f"unknown scenario {name!r}", key=name)
    return catalog[name]
