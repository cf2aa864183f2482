"""Scripted and baseline defense policies.

Every policy exposes ``choose(obs, mask, rng) -> action index``; learned policies
(QTablePolicy, DQNPolicy) live in ``coordinator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coordinator import (
    CyberChoice,
    DeceptionChoice,
    DefenseAction,
    EWLevel,
    action_index,
)

NULL_ACTION = 0


class NullPolicy:
    """Never acts."""

    def choose(self, obs, mask, rng) -> int:
        return NULL_ACTION


class RandomPolicy:
    """Uniform over the currently allowed actions."""

    def choose(self, obs, mask, rng) -> int:
        allowed = np.flatnonzero(mask)
        return int(allowed[rng.integers(allowed.size)])


def _strongest(options, mask, build) -> object:
    for opt in options:
        if mask[action_index(build(opt))]:
            return opt
    return options[-1]


class ScriptedMaxPolicy:
    """Within the engagement window, fire the strongest affordable action of every enabled layer."""

    EW_ORDER = (EWLevel.HIGH, EWLevel.MED, EWLevel.LOW, EWLevel.OFF)
    CYBER_ORDER = (CyberChoice.TAMPER_TARGETED, CyberChoice.TAMPER_RANDOM, CyberChoice.INJECT, CyberChoice.NONE)
    DECEPTION_ORDER = (DeceptionChoice.DEPLOY_3, DeceptionChoice.DEPLOY_1, DeceptionChoice.HOLD)

    def __init__(self, engage_range_m: float):
        self.engage_range_m = engage_range_m

    def choose(self, obs, mask, rng) -> int:
        if obs.track_range_m > self.engage_range_m:
            return NULL_ACTION
        ew = _strongest(self.EW_ORDER, mask, lambda e: DefenseAction(e, CyberChoice.NONE, DeceptionChoice.HOLD))
        cy = _strongest(self.CYBER_ORDER, mask, lambda c: DefenseAction(EWLevel.OFF, c, DeceptionChoice.HOLD))
        de = _strongest(self.DECEPTION_ORDER, mask, lambda d: DefenseAction(EWLevel.OFF, CyberChoice.NONE, d))
        idx = action_index(DefenseAction(ew, cy, de))
        return idx if mask[idx] else NULL_ACTION


@dataclass(frozen=True)
class CoordinatedSchedule:
    """Range-triggered plan for the scripted multi-layer coordinator."""

    decoy_range_m: float = 9000.0  # first salvo of decoys
    decoy_salvos: int = 1
    decoy_salvo_spacing_m: float = 2000.0
    jam_range_m: float = 9000.0  # jamming between these two ranges
    jam_stop_range_m: float = 700.0
    jam_level: int = 1
    inject_range_m: float = 6000.0
    inject_every: int = 20
    tamper_range_m: float = 8000.0
    tamper_count: int = 2


class ScriptedCoordinatedPolicy:
    """Layered plan: decoys first, then screening jamming with cyber support.

    Decoys are laid early so they drift into place; jamming then hides the real
    site so the seeker sees only the louder decoys, and navigation injection
    drags a blind missile toward the nearest decoy.
    """

    def __init__(self, schedule: CoordinatedSchedule = CoordinatedSchedule()):
        self.s = schedule

    def choose(self, obs, mask, rng) -> int:
        s, r = self.s, obs.track_range_m
        de = DeceptionChoice.HOLD
        salvos_done = obs.decoys_deployed // 3
        if salvos_done < s.decoy_salvos and r <= s.decoy_range_m - salvos_done * s.decoy_salvo_spacing_m:
            de = DeceptionChoice.DEPLOY_3
        ew = EWLevel(s.jam_level) if s.jam_stop_range_m < r <= s.jam_range_m else EWLevel.OFF
        cy = CyberChoice.NONE
        if r <= s.tamper_range_m and obs.tamper_attempts < s.tamper_count:
            cy = CyberChoice.TAMPER_TARGETED
        elif r <= s.inject_range_m and obs.step % s.inject_every == 0:
            cy = CyberChoice.INJECT
        # drop whatever the budget cannot cover, layer by layer
        for candidate in (
            DefenseAction(ew, cy, de),
            DefenseAction(ew, CyberChoice.NONE, de),
            DefenseAction(ew, cy, DeceptionChoice.HOLD),
            DefenseAction(EWLevel.OFF, cy, de),
            DefenseAction(ew, CyberChoice.NONE, DeceptionChoice.HOLD),
            DefenseAction(EWLevel.OFF, cy, DeceptionChoice.HOLD),
            DefenseAction(EWLevel.OFF, CyberChoice.NONE, de),
        ):
            idx = action_index(candidate)
            if mask[idx]:
                return idx
        return NULL_ACTION
