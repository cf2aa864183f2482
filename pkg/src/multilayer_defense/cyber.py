"""Intrusion attempts, navigation-data injection and seeker weight tampering."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .core import ResourceBudget, Vec3, ZERO, clamp_norm
from .errors import RejectedActionError
from .seeker import SeekerNet

INTRUSION_RATE = 0.5
MAX_BIAS_M = 400.0
BARRAGE_DIFFICULTY = 1.2


class CyberKind(Enum):
    NONE = "none"
    INJECT = "inject"
    TAMPER = "tamper"


class TamperMode(Enum):
    RANDOM = "random"
    TARGETED = "targeted"


@dataclass(frozen=True)
class CyberAction:
    kind: CyberKind = CyberKind.NONE
    intensity: float = 0.0
    bandwidth_cost: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError("intensity must lie in [0, 1]")
        if self.bandwidth_cost < 0:
            raise ValueError("bandwidth_cost must be non-negative")
        if self.kind is CyberKind.NONE and (self.intensity != 0 or self.bandwidth_cost != 0):
            raise ValueError("a 'none' action carries no intensity or cost")


@dataclass(frozen=True)
class NavData:
    """The missile's navigation picture.

    ``target_fix`` is the uncorrupted aimpoint estimate and ``injected_bias`` the
    accumulated spurious offset; the missile steers on their sum, ``est_target_pos``.
    Keeping the bias separate makes repeated injections exactly additive.
    """

    target_fix: Vec3
    own_pos_fix: Vec3
    injected_bias: Vec3 = ZERO

    @property
    def est_target_pos(self) -> Vec3:
        return self.target_fix + self.injected_bias


def intrusion_probability(bandwidth_spent: float, difficulty_mod: float, rate: float = INTRUSION_RATE) -> float:
    if bandwidth_spent < 0:
        raise ValueError("bandwidth_spent must be non-negative")
    if difficulty_mod <= 0:
        raise ValueError("difficulty_mod must be positive")
    return 1.0 - math.exp(-rate * bandwidth_spent / difficulty_mod)


def attempt_intrusion(
    bandwidth_spent: float,
    difficulty_mod: float,
    rng: np.random.Generator,
    budget: Optional[ResourceBudget] = None,
    rate: float = INTRUSION_RATE,
) -> bool:
    """One stateless intrusion attempt.

    The bandwidth is drawn from ``budget`` (when given) whether or not the attempt
    succeeds; a budget that cannot cover it raises RejectedActionError untouched.
    """
    p = intrusion_probability(bandwidth_spent, difficulty_mod, rate)
    if budget is not None:
        if bandwidth_spent > budget.cyber_bandwidth:
            raise RejectedActionError(
                f"intrusion needs {bandwidth_spent} bandwidth, {budget.cyber_bandwidth} left"
            )
        budget.spend(bandwidth=bandwidth_spent)
    return bool(rng.random() < p)


def inject_data(d: NavData, delta: Vec3, max_bias_m: float = MAX_BIAS_M) -> NavData:
    """Add a spurious offset to the aimpoint estimate, capping the accumulated bias."""
    return replace(d, injected_bias=clamp_norm(d.injected_bias + delta, max_bias_m))


def tamper_weights(
    net: SeekerNet,
    epsilon: float,
    mode: TamperMode,
    rng: Optional[np.random.Generator] = None,
    gradient: Optional[np.ndarray] = None,
) -> SeekerNet:
    """Return a perturbed copy of ``net``; no weight moves by more than ``epsilon``.

    RANDOM draws each perturbation uniformly from [-epsilon, epsilon] using ``rng``.
    TARGETED steps every weight by ``epsilon * sign(gradient)``, where ``gradient`` is
    the defender's surrogate gradient of the decoy-over-target margin.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    flat = net.to_flat()
    if mode is TamperMode.RANDOM:
        if rng is None:
            raise ValueError("random tampering needs an rng")
        delta = rng.uniform(-epsilon, epsilon, flat.shape)
    elif mode is TamperMode.TARGETED:
        if gradient is None:
            raise ValueError("targeted tampering needs a gradient")
        gradient = np.asarray(gradient, dtype=np.float64)
        if gradient.shape != flat.shape:
            raise ValueError("gradient shape does not match the network")
        delta = epsilon * np.sign(gradient)
    else:
        raise ValueError(f"unknown tamper mode {mode!r}")
    if epsilon == 0:
        return SeekerNet.from_flat(flat, net.hidden)
    return SeekerNet.from_flat(flat + delta, net.hidden)
