"""Geometry, state vectors, regional climate sampling and missile kinematics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DegenerateGeometryError, EpisodeOver, RejectedActionError

EPS = 1e-12


@dataclass(frozen=True, slots=True)
class Vec3:
    x: float
    y: float
    z: float = 0.0

    def __add__(self, other: Vec3) -> Vec3:
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Vec3) -> Vec3:
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> Vec3:
        return Vec3(-self.x, -self.y, -self.z)

    def __mul__(self, k: float) -> Vec3:
        return Vec3(self.x * k, self.y * k, self.z * k)

    __rmul__ = __mul__

    def dot(self, other: Vec3) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: Vec3) -> Vec3:
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> Vec3:
        n = self.norm()
        if n < EPS:
            raise DegenerateGeometryError("cannot normalize a zero-length vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def distance(self, other: Vec3) -> float:
        return (self - other).norm()

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_iter(cls, values) -> Vec3:
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)


ZERO = Vec3(0.0, 0.0, 0.0)
UP = Vec3(0.0, 0.0, 1.0)


def rotate_about_vertical(v: Vec3, angle_rad: float) -> Vec3:
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return Vec3(c * v.x - s * v.y, s * v.x + c * v.y, v.z)


def clamp_norm(v: Vec3, max_norm: float) -> Vec3:
    """Scale ``v`` down so its length does not exceed ``max_norm``."""
    n = v.norm()
    if n <= max_norm:
        return v
    return v * (max_norm / n)


class GuidanceMode(Enum):
    CRUISE = "cruise"
    TERMINAL_HOMING = "terminal_homing"
    EVASIVE_REROUTE = "evasive_reroute"


@dataclass(frozen=True)
class MissileState:
    position: Vec3
    speed: float
    heading: Vec3
    est_target_pos: Vec3
    acquired_id: Optional[int] = None
    guidance_mode: GuidanceMode = GuidanceMode.CRUISE
    fuel_steps_remaining: int = 1200

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be non-negative")
        if self.fuel_steps_remaining < 0:
            raise ValueError("fuel_steps_remaining must be non-negative")
        if abs(self.heading.norm() - 1.0) > 1e-9:
            raise ValueError("heading must be a unit vector")


@dataclass(frozen=True)
class EnvironmentState:
    temperature_c: float
    humidity: float
    wind_dir: Vec3
    wind_speed: float
    terrain_openness: float

    def __post_init__(self):
        if not 0.0 <= self.humidity <= 1.0:
            raise ValueError(f"humidity {self.humidity} outside [0, 1]")
        if not 0.0 < self.terrain_openness <= 1.0:
            raise ValueError(f"terrain_openness {self.terrain_openness} outside (0, 1]")
        if self.wind_speed < 0:
            raise ValueError("wind_speed must be non-negative")
        if abs(self.wind_dir.z) > 0 or abs(self.wind_dir.norm() - 1.0) > 1e-9:
            raise ValueError("wind_dir must be a horizontal unit vector")


@dataclass(frozen=True)
class RegionPreset:
    name: str
    temp_range: tuple[float, float]
    humidity_range: tuple[float, float]
    wind_speed_range: tuple[float, float]
    terrain_openness: float

    def __post_init__(self):
        for label, (lo, hi) in (
            ("temp_range", self.temp_range),
            ("humidity_range", self.humidity_range),
            ("wind_speed_range", self.wind_speed_range),
        ):
            if lo > hi:
                raise ValueError(f"{self.name}: {label} has lo > hi")
        lo, hi = self.humidity_range
        if lo < 0 or hi > 1:
            raise ValueError(f"{self.name}: humidity_range must lie in [0, 1]")
        if self.wind_speed_range[0] < 0:
            raise ValueError(f"{self.name}: wind speeds must be non-negative")
        if not 0.0 < self.terrain_openness <= 1.0:
            raise ValueError(f"{self.name}: terrain_openness must lie in (0, 1]")


PRESETS: dict[str, RegionPreset] = {
    p.name: p
    for p in (
        RegionPreset("khuzestan_plain", (35.0, 50.0), (0.10, 0.30), (2.0, 12.0), 0.9),
        RegionPreset("khuzestan_coastal", (30.0, 45.0), (0.60, 0.95), (3.0, 15.0), 0.8),
        RegionPreset("khuzestan_mountain", (20.0, 35.0), (0.20, 0.50), (1.0, 8.0), 0.4),
    )
}
PRESET_ORDER = tuple(PRESETS)


def angular_deviation(heading: Vec3, missile_pos: Vec3, true_target_pos: Vec3) -> float:
    """Angle in degrees between the heading and the line of sight to the target."""
    los = true_target_pos - missile_pos
    n = los.norm()
    if n < EPS:
        raise DegenerateGeometryError("missile and target positions coincide")
    hn = heading.norm()
    c = heading.dot(los) / (n * hn)
    c = max(-1.0, min(1.0, c))
    return math.degrees(math.acos(c))


def sample_environment(preset: RegionPreset, rng: np.random.Generator) -> EnvironmentState:
    t = rng.uniform(*preset.temp_range)
    h = rng.uniform(*preset.humidity_range)
    ws = rng.uniform(*preset.wind_speed_range)
    az = rng.uniform(0.0, 2.0 * math.pi)
    return EnvironmentState(
        temperature_c=float(t),
        humidity=float(h),
        wind_dir=Vec3(math.cos(az), math.sin(az), 0.0),
        wind_speed=float(ws),
        terrain_openness=preset.terrain_openness,
    )


def turn_toward(heading: Vec3, commanded: Vec3, max_angle: float) -> Vec3:
    """Rotate ``heading`` toward ``commanded`` by at most ``max_angle`` radians."""
    c = max(-1.0, min(1.0, heading.dot(commanded)))
    angle = math.acos(c)
    if angle <= max_angle:
        return commanded.normalized()
    perp = commanded - heading * c
    if perp.norm() < 1e-9:
        # antiparallel command: turn in the horizontal plane
        perp = UP.cross(heading)
        if perp.norm() < 1e-9:
            perp = Vec3(1.0, 0.0, 0.0)
    perp = perp.normalized()
    return (heading * math.cos(max_angle) + perp * math.sin(max_angle)).normalized()


def step_kinematics(
    state: MissileState,
    commanded_heading: Vec3,
    dt: float,
    max_turn_rate: float = 0.35,
) -> MissileState:
    """Advance the missile one step under a turn-rate cap; speed is held constant.

    Raises EpisodeOver when no fuel remains, leaving the state untouched.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.fuel_steps_remaining <= 0:
        raise EpisodeOver("fuel exhausted")
    heading = turn_toward(state.heading, commanded_heading, max_turn_rate * dt)
    step = state.speed * dt
    return replace(
        state,
        heading=heading,
        position=state.position + heading * step,
        fuel_steps_remaining=state.fuel_steps_remaining - 1,
    )


@dataclass
class ResourceBudget:
    """Remaining defensive resources.  Only ever decreases during an episode."""

    jamming_energy: float
    decoys: int
    cyber_bandwidth: float
    initial: tuple[float, int, float] = field(default=None, repr=False)

    def __post_init__(self):
        if self.jamming_energy < 0 or self.decoys < 0 or self.cyber_bandwidth < 0:
            raise ValueError("resources must be non-negative")
        if self.initial is None:
            self.initial = (self.jamming_energy, self.decoys, self.cyber_bandwidth)

    def copy(self) -> ResourceBudget:
        return ResourceBudget(self.jamming_energy, self.decoys, self.cyber_bandwidth, self.initial)

    def can_afford(self, energy: float = 0.0, decoys: int = 0, bandwidth: float = 0.0) -> bool:
        return (
            energy <= self.jamming_energy
            and decoys <= self.decoys
            and bandwidth <= self.cyber_bandwidth
        )

    def spend(self, energy: float = 0.0, decoys: int = 0, bandwidth: float = 0.0) -> None:
        if min(energy, decoys, bandwidth) < 0:
            raise ValueError("cannot spend a negative amount")
        if not self.can_afford(energy, decoys, bandwidth):
            raise RejectedActionError(
                f"insufficient resources for energy={energy} decoys={decoys} bandwidth={bandwidth}"
            )
        self.jamming_energy -= energy
        self.decoys -= decoys
        self.cyber_bandwidth -= bandwidth

    def fractions(self) -> tuple[float, float, float]:
        """Remaining fraction of each initial resource (1.0 when the initial stock is zero)."""
        e0, d0, b0 = self.initial
        return (
            self.jamming_energy / e0 if e0 else 1.0,
            self.decoys / d0 if d0 else 1.0,
            self.cyber_bandwidth / b0 if b0 else 1.0,
        )
