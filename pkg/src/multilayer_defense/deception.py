"""False-target signatures, decoy deployment and wind drift."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import EnvironmentState, ResourceBudget, Vec3
from .errors import RejectedActionError

N_FEATURES = 6
THERMAL_GAIN_PER_DEGC = 0.004
MIN_SEPARATION_M = 30.0
DRIFT_COEFFICIENT = 0.3


@dataclass(frozen=True)
class TargetSpec:
    position: Vec3
    template_features: tuple[float, ...]
    emit_power_dbm: float = 30.0

    def __post_init__(self):
        if len(self.template_features) != N_FEATURES:
            raise ValueError("template_features must have 6 components")
        if not all(math.isfinite(f) for f in self.template_features):
            raise ValueError("template_features must be finite")


@dataclass(frozen=True)
class DecoySignature:
    id: int
    position: Vec3
    features: tuple[float, ...]
    fidelity: float
    emit_power_dbm: float

    def __post_init__(self):
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError("fidelity must lie in [0, 1]")


def signature_profile(template: Sequence[float], temperature_c: float) -> np.ndarray:
    """Environment-adjusted site signature: hot air inflates the thermal channel (index 0)."""
    g = np.array(template, dtype=np.float64)
    g[0] *= 1.0 + THERMAL_GAIN_PER_DEGC * (temperature_c - 25.0)
    return g


def decoy_features(
    target: TargetSpec,
    env: EnvironmentState,
    fidelity: float,
    imperfection: Sequence[float],
) -> np.ndarray:
    """Blend the target's apparent signature with the decoy's own random profile.

    ``imperfection`` is the decoy's fixed random vector in [0, 1]^6; the result is
    ``fidelity * signature + (1 - fidelity) * imperfection``.
    """
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError("fidelity must lie in [0, 1]")
    gamma = signature_profile(target.template_features, env.temperature_c)
    u = np.asarray(imperfection, dtype=np.float64)
    return fidelity * gamma + (1.0 - fidelity) * u


def _sample_disc(rng: np.random.Generator, centre: Vec3, r_min: float, r_max: float) -> Vec3:
    # uniform over the annulus area
    r = math.sqrt(rng.uniform(r_min * r_min, r_max * r_max))
    theta = rng.uniform(0.0, 2.0 * math.pi)
    return Vec3(centre.x + r * math.cos(theta), centre.y + r * math.sin(theta), centre.z)


def deploy_decoys(
    k: int,
    target: TargetSpec,
    env: EnvironmentState,
    fidelity: float,
    radius_m: float,
    rng: np.random.Generator,
    budget: Optional[ResourceBudget] = None,
    *,
    existing: Sequence[DecoySignature] = (),
    first_id: int = 100,
    emit_power_dbm: Optional[float] = None,
    min_standoff_m: float = 0.0,
    min_separation_m: float = MIN_SEPARATION_M,
    max_tries: int = 10_000,
) -> list[DecoySignature]:
    """Place ``k`` decoys around the target, at least ``min_separation_m`` apart.

    Positions are uniform over the horizontal annulus between ``min_standoff_m`` and
    ``radius_m`` and are rejection-resampled against all existing decoys.  The decoys
    are taken from ``budget`` when one is given; if the stock is short nothing is
    deployed and RejectedActionError is raised.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if radius_m <= 0 or not 0.0 <= min_standoff_m < radius_m:
        raise ValueError("need 0 <= min_standoff_m < radius_m")
    if budget is not None and k > budget.decoys:
        raise RejectedActionError(f"requested {k} decoys, {budget.decoys} in stock")
    if k == 0:
        return []
    power = target.emit_power_dbm if emit_power_dbm is None else emit_power_dbm
    placed = [d.position for d in existing]
    out: list[DecoySignature] = []
    for i in range(k):
        for _ in range(max_tries):
            p = _sample_disc(rng, target.position, min_standoff_m, radius_m)
            if all(p.distance(q) >= min_separation_m for q in placed):
                break
        else:
            raise RuntimeError("could not place decoy with the required separation")
        placed.append(p)
        u = rng.uniform(0.0, 1.0, N_FEATURES)
        feats = decoy_features(target, env, fidelity, u)
        out.append(DecoySignature(first_id + i, p, tuple(float(f) for f in feats), fidelity, power))
    if budget is not None:
        budget.spend(decoys=k)
    return out


def drift_decoys(
    decoys: Sequence[DecoySignature],
    env: EnvironmentState,
    dt: float,
    c_drift: float = DRIFT_COEFFICIENT,
) -> list[DecoySignature]:
    if dt <= 0:
        raise ValueError("dt must be positive")
    shift = env.wind_dir * (env.wind_speed * c_drift * dt)
    return [replace(d, position=d.position + shift) for d in decoys]
