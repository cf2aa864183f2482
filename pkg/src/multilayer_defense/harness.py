"""Discrete-time episode engine, Monte Carlo battery runner and metric aggregation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, TextIO

import numpy as np
import yaml
from scipy import stats as sps

from . import cyber, deception, ew, seeker
from .config import BatteryConfig, Calibration, ScenarioConfig
from .coordinator import (
    CoordinatorState,
    CyberChoice,
    EWLevel,
    Outcome,
    action_mask,
    action_space,
    encode_state,
    load_policy,
    step_reward,
)
from .core import (
    PRESET_ORDER,
    PRESETS,
    GuidanceMode,
    MissileState,
    ResourceBudget,
    Vec3,
    ZERO,
    angular_deviation,
    sample_environment,
    step_kinematics,
)
from .errors import ConfigError
from .policies import NullPolicy, RandomPolicy, ScriptedCoordinatedPolicy, ScriptedMaxPolicy
from .seeker import SceneObject, SeekerNet, TruthTag

SITE_ID = 0
FIRST_CLUTTER_ID = 1
FIRST_DECOY_ID = 100
RUN_FIELDS = (
    "scenario",
    "seed",
    "outcome",
    "mean_deviation_deg",
    "acquisition",
    "ew_spend",
    "cyber_spend",
    "decoy_spend",
    "steps",
)


@lru_cache(maxsize=8)
def _seeker_for(weights_path: Optional[str]) -> SeekerNet:
    return seeker.load_weights(weights_path or seeker.DEFAULT_WEIGHTS_PATH)


@lru_cache(maxsize=8)
def _surrogate_for(seed: int) -> SeekerNet:
    # the defender knows the architecture and training recipe, not the live weights
    return seeker.train_seeker(seed=seed)


@dataclass
class Observation:
    """What the defense coordinator sees at the start of a step."""

    state: CoordinatorState
    track_range_m: float
    step: int
    budget: ResourceBudget
    decoys_deployed: int
    tamper_attempts: int
    snr_db: float


@dataclass
class RunResult:
    scenario: str
    seed: int
    outcome: Outcome
    mean_deviation_deg: float
    ew_spend: float
    cyber_spend: float
    decoy_spend: int
    steps: int
    total_return: float = 0.0
    total_spend_norm: float = 0.0

    @property
    def acquisition_success(self) -> bool:
        return self.outcome is Outcome.HIT_TRUE

    def csv_row(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "outcome": self.outcome.value,
            "mean_deviation_deg": repr(self.mean_deviation_deg),
            "acquisition": int(self.acquisition_success),
            "ew_spend": repr(float(self.ew_spend)),
            "cyber_spend": repr(float(self.cyber_spend)),
            "decoy_spend": int(self.decoy_spend),
            "steps": self.steps,
        }


class Episode:
    """One engagement, stepped by an external policy.

    Per step: the coordinator's action is applied (jamming set, intrusion resolved,
    decoys deployed then drifted), the seeker senses the composite signal, acquires
    and guides, the missile advances, and the reward is logged.
    """

    def __init__(
        self,
        cfg: ScenarioConfig,
        seed: int,
        net: Optional[SeekerNet] = None,
        event_log: Optional[TextIO] = None,
    ):
        cfg.validate()
        self.cfg = cfg
        self.c: Calibration = cfg.calibration
        self.seed = seed
        self.event_log = event_log
        streams = np.random.SeedSequence(seed).spawn(7)
        (self.rng_env, self.rng_scene, self.rng_sense, self.rng_cyber,
         self.rng_decoy, self.rng_track, self.rng_policy) = (np.random.default_rng(s) for s in streams)
        self._net0 = net if net is not None else _seeker_for(self.c.seeker_weights)
        self._reset()

    # ------------------------------------------------------------------ setup

    def _reset(self) -> None:
        c, cfg = self.c, self.cfg
        if cfg.region == "mixed":
            self.env_regime = int(self.rng_env.integers(len(PRESET_ORDER)))
        else:
            self.env_regime = PRESET_ORDER.index(cfg.region)
        self.env = sample_environment(PRESETS[PRESET_ORDER[self.env_regime]], self.rng_env)
        self.gain_db = 20.0 * math.log10(ew.attenuation(c.seeker_freq_hz, self.env, c.ew))
        self.site = deception.TargetSpec(ZERO, seeker.DEFAULT_TEMPLATE, c.target_emit_dbm)
        self.site_features = deception.signature_profile(self.site.template_features, self.env.temperature_c)

        self.clutter = self._place_clutter()
        self.decoys: list[deception.DecoySignature] = []

        bearing = self.rng_scene.uniform(0.0, 2.0 * math.pi)
        start = Vec3(c.spawn_range_m * math.cos(bearing), c.spawn_range_m * math.sin(bearing), 0.0)
        err = self.rng_scene.normal(0.0, c.nav_error_sd_m, 2)
        self.nav = cyber.NavData(Vec3(float(err[0]), float(err[1]), 0.0), start)
        self.fix_error = ZERO
        fuel = min(c.fuel_steps, cfg.max_steps)
        self.missile = MissileState(
            position=start,
            speed=c.speed_mps,
            heading=(self.nav.est_target_pos - start).normalized(),
            est_target_pos=self.nav.est_target_pos,
            fuel_steps_remaining=fuel,
        )
        # the side of the line of sight that injected offsets push toward
        self.inject_side = 1.0 if self.rng_cyber.random() < 0.5 else -1.0

        self.net = self._net0
        self.surrogate = _surrogate_for(c.surrogate_seed)
        self.budget = ResourceBudget(c.jamming_energy, c.decoy_stock, c.cyber_bandwidth)
        self.emission = ew.JammingEmission(c.seeker_freq_hz, 0.0, active=False)
        self.snr_history: list[float] = []
        self.weave_step = 0
        self.last_site_snr = self._site_snr_estimate()
        self.step_count = 0
        self.deviation_sum = 0.0
        self.total_return = 0.0
        self.spent = [0.0, 0, 0.0]
        self.tamper_attempts = 0
        self.outcome: Optional[Outcome] = None
        self.spawn_range = c.spawn_range_m
        self.prev_range = start.distance(self.site.position)

    def _place_clutter(self) -> list[SceneObject]:
        c = self.c
        lo, hi = c.clutter_radius_m
        positions: list[Vec3] = []
        objects = []
        for i in range(c.clutter_count):
            while True:
                r = math.sqrt(self.rng_scene.uniform(lo * lo, hi * hi))
                th = self.rng_scene.uniform(0.0, 2.0 * math.pi)
                p = Vec3(r * math.cos(th), r * math.sin(th), 0.0)
                if all(p.distance(q) >= deception.MIN_SEPARATION_M for q in positions):
                    break
            positions.append(p)
            resemblance = self.rng_scene.uniform(*c.clutter_resemblance)
            u = self.rng_scene.uniform(0.0, 1.0, seeker.N_FEATURES)
            feats = resemblance * self.site_features + (1.0 - resemblance) * u
            objects.append(
                SceneObject(FIRST_CLUTTER_ID + i, p, tuple(float(f) for f in feats), c.target_emit_dbm, TruthTag.CLUTTER)
            )
        return objects

    def _site_snr_estimate(self) -> float:
        rng_m = max(1.0, self.missile.position.distance(self.site.position))
        s = self._received(self.site.emit_power_dbm, rng_m)
        return ew.compose_received(s, ew.NO_JAMMING, self.c.ew.noise_floor_dbm).snr_db

    def _received(self, power_dbm, range_m):
        return power_dbm - ew.free_space_path_loss_db(range_m, self.c.seeker_freq_hz) + self.gain_db

    # ------------------------------------------------------------------ observation

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def track(self) -> Vec3:
        n = self.rng_track.normal(0.0, self.c.track_noise_m, 2)
        p = self.missile.position
        return Vec3(p.x + float(n[0]), p.y + float(n[1]), p.z)

    def observe(self) -> Observation:
        tp = self.track()
        state = encode_state(
            tp,
            self.site.position,
            self.env,
            self.env_regime,
            self.budget,
            self.last_site_snr,
            self.step_count / self.cfg.max_steps,
        )
        return Observation(
            state=state,
            track_range_m=tp.distance(self.site.position),
            step=self.step_count,
            budget=self.budget,
            decoys_deployed=self.c.decoy_stock - self.budget.decoys,
            tamper_attempts=self.tamper_attempts,
            snr_db=self.last_site_snr,
        )

    def mask(self) -> np.ndarray:
        return action_mask(self.budget, self.cfg.layers, self.c.costs)

    # ------------------------------------------------------------------ dynamics

    def step(self, action_idx: int) -> float:
        """Apply one action and advance one tick; returns the step reward."""
        if self.done:
            raise RuntimeError("episode is over")
        c, cfg = self.c, self.cfg
        if not self.mask()[action_idx]:
            raise ValueError(f"action {action_idx} is masked at step {self.step_count}")
        action = action_space()[action_idx]
        energy, n_decoys, bandwidth = c.costs.of(action)

        # (2) defense effects
        self.budget.spend(energy=energy)
        if action.ew is EWLevel.OFF:
            self.emission = ew.JammingEmission(c.seeker_freq_hz, 0.0, active=False)
        else:
            wf = ew.WaveformClass.BARRAGE if action.ew is EWLevel.HIGH else ew.WaveformClass.SPOT
            self.emission = ew.JammingEmission(c.seeker_freq_hz, c.costs.ew_power_dbm[action.ew.value], wf)
        if action.cyber is not CyberChoice.NONE:
            self._cyber(action.cyber, bandwidth)
        if n_decoys:
            self.decoys += deception.deploy_decoys(
                n_decoys,
                self.site,
                self.env,
                c.decoy_fidelity,
                c.decoy_radius_m,
                self.rng_decoy,
                self.budget,
                existing=self.decoys,
                first_id=FIRST_DECOY_ID + len(self.decoys),
                emit_power_dbm=c.decoy_emit_dbm,
                min_standoff_m=c.decoy_standoff_m,
            )
        if self.decoys:
            self.decoys = deception.drift_decoys(self.decoys, self.env, cfg.dt, c.drift_coefficient)
        self.spent[0] += energy
        self.spent[1] += n_decoys
        self.spent[2] += bandwidth

        # (3) seeker
        self._seeker_step()

        # (4) kinematics
        aim = self.nav.est_target_pos - self.fix_error
        command = seeker.guide(self.missile, aim)
        if self.missile.guidance_mode is GuidanceMode.EVASIVE_REROUTE:
            command = seeker.weave_heading(command, self.weave_step)
            self.weave_step += 1
            if self.weave_step >= seeker.WEAVE_STEPS:
                self._set_mode(GuidanceMode.TERMINAL_HOMING)
                self.snr_history.clear()
        prev_pos = self.missile.position
        self.missile = step_kinematics(self.missile, command, cfg.dt, c.max_turn_rate)
        self.step_count += 1

        pos = self.missile.position
        site_range = pos.distance(self.site.position)
        self.outcome = self._terminal(prev_pos, aim, site_range)
        deviation = 0.0
        if self.outcome is None or self.outcome is Outcome.FUEL_EXHAUSTED:
            # the impact step itself has no meaningful line of sight
            deviation = angular_deviation(self.missile.heading, pos, self.site.position) if site_range > 1e-9 else 0.0
        self.deviation_sum += deviation
        self.prev_range = site_range

        # (5) reward
        e0, d0, b0 = self.budget.initial
        spent_norm = ((energy / e0 if e0 else 0.0) + (n_decoys / d0 if d0 else 0.0) + (bandwidth / b0 if b0 else 0.0)) / 3.0
        reward = step_reward(deviation, self.outcome, spent_norm, c.reward)
        self.total_return += reward
        if self.event_log is not None:
            self._log(action_idx, reward, energy, n_decoys, bandwidth, site_range, deviation)
        return reward

    def _set_mode(self, mode: GuidanceMode) -> None:
        m = self.missile
        self.missile = MissileState(m.position, m.speed, m.heading, m.est_target_pos, m.acquired_id, mode, m.fuel_steps_remaining)

    def _cyber(self, choice: CyberChoice, bandwidth: float) -> None:
        c = self.c
        difficulty = c.barrage_difficulty if self.emission.waveform_class is ew.WaveformClass.BARRAGE and self.emission.active else 1.0
        if choice in (CyberChoice.TAMPER_RANDOM, CyberChoice.TAMPER_TARGETED):
            self.tamper_attempts += 1
        if not cyber.attempt_intrusion(bandwidth, difficulty, self.rng_cyber, self.budget, c.intrusion_rate):
            return
        if choice is CyberChoice.INJECT:
            self.nav = cyber.inject_data(self.nav, self._injection_delta(), c.max_bias_m)
        elif choice is CyberChoice.TAMPER_RANDOM:
            self.net = cyber.tamper_weights(self.net, c.tamper_eps_random, cyber.TamperMode.RANDOM, self.rng_cyber)
        else:
            # the defender knows its own decoys and the site's background structures
            lures = [d.features for d in self.decoys] + [o.features for o in self.clutter]
            grad = seeker.decoy_margin_gradient(self.surrogate, self.site_features, lures)
            self.net = cyber.tamper_weights(self.net, c.tamper_eps_targeted, cyber.TamperMode.TARGETED, gradient=grad)
            self.surrogate = cyber.tamper_weights(self.surrogate, c.tamper_eps_targeted, cyber.TamperMode.TARGETED, gradient=grad)

    def _injection_delta(self) -> Vec3:
        c = self.c
        site = self.site.position
        if self.decoys:
            nearest = min(self.decoys, key=lambda d: d.position.distance(site))
            direction = nearest.position - site
        else:
            los = self.track() - site
            direction = Vec3(-los.y, los.x, 0.0) * self.inject_side
        direction = Vec3(direction.x, direction.y, 0.0).normalized()
        return direction * (c.inject_intensity * c.max_bias_m)

    def _seeker_step(self) -> None:
        c = self.c
        pos = self.missile.position
        scene = [SceneObject(SITE_ID, self.site.position, tuple(self.site_features), self.site.emit_power_dbm, TruthTag.TRUE_TARGET)]
        scene += self.clutter
        scene += [SceneObject(d.id, d.position, d.features, d.emit_power_dbm, TruthTag.DECOY) for d in self.decoys]
        site_range = max(1.0, pos.distance(self.site.position))
        jam = ew.jamming_power_at_seeker(self.emission, self.env, site_range, c.ew)
        noise = ew.sample_noise_dbm(self.rng_sense, c.ew)
        where = np.array([[o.position.x, o.position.y, o.position.z] for o in scene])
        ranges = np.maximum(1.0, np.linalg.norm(where - pos.as_array(), axis=1))
        emit = np.array([o.emit_power_dbm for o in scene])
        fspl = 20.0 * np.log10(4.0 * np.pi * ranges * c.seeker_freq_hz / ew.SPEED_OF_LIGHT)
        snr = emit - fspl + self.gain_db - ew.power_sum_dbm(jam, noise)
        self.last_site_snr = float(snr[0])
        seeker_snr = float(snr.max())
        qs = ew.detection_quality_array(snr, c.ew)

        # a jammed receiver also loses its navigation fix and drifts
        if jam > c.ew.noise_floor_dbm:
            d = self.rng_sense.normal(0.0, c.nav_drift_sd * math.sqrt(self.cfg.dt), 2)
            self.fix_error = self.fix_error + Vec3(float(d[0]), float(d[1]), 0.0)
        else:
            self.fix_error = ZERO
        self.nav = cyber.NavData(self.nav.target_fix, pos + self.fix_error, self.nav.injected_bias)

        if self.missile.guidance_mode is GuidanceMode.EVASIVE_REROUTE:
            return
        perceived = seeker.sense(scene, qs, self.rng_sense, c.sensing_sigma0, c.q_detect_floor)
        acquired = seeker.acquire(self.net, perceived)
        m = self.missile
        mode, acq_id = m.guidance_mode, m.acquired_id
        if acquired is not None:
            seen = next(p for p in perceived if p.id == acquired)
            # the seeker measures relative position; it lands in the (possibly drifted) nav frame
            self.nav = cyber.NavData(seen.position + self.fix_error, self.nav.own_pos_fix)
            acq_id = acquired
            if mode is GuidanceMode.CRUISE:
                mode = GuidanceMode.TERMINAL_HOMING
        self.missile = MissileState(m.position, m.speed, m.heading, self.nav.est_target_pos, acq_id, mode, m.fuel_steps_remaining)
        self.snr_history.append(seeker_snr)
        new_mode = seeker.adapt_to_jamming(self.snr_history, self.missile)
        if new_mode is not mode:
            self.weave_step = 0
            self._set_mode(new_mode)

    def _terminal(self, prev_pos: Vec3, aim: Vec3, site_range: float) -> Optional[Outcome]:
        pos = self.missile.position
        seg = pos - prev_pos
        seg2 = seg.dot(seg)
        t = min(1.0, max(0.0, (aim - prev_pos).dot(seg) / seg2)) if seg2 > 0 else 1.0
        closest = prev_pos + seg * t
        if t < 1.0 and closest.distance(aim) < self.c.impact_radius_m:
            # the missile dives on its aimpoint once it stops closing on it
            return self._impact(closest)
        if site_range > 1.5 * self.spawn_range and site_range > self.prev_range:
            return Outcome.MISSED
        if self.missile.fuel_steps_remaining == 0 or self.step_count >= self.cfg.max_steps:
            return Outcome.FUEL_EXHAUSTED
        return None

    def _impact(self, point: Vec3) -> Outcome:
        objects = [(point.distance(self.site.position), TruthTag.TRUE_TARGET)]
        objects += [(point.distance(o.position), TruthTag.CLUTTER) for o in self.clutter]
        objects += [(point.distance(d.position), TruthTag.DECOY) for d in self.decoys]
        nearest, tag = min(objects, key=lambda t: t[0])
        if nearest > self.cfg.hit_radius_m or tag is TruthTag.CLUTTER:
            return Outcome.MISSED
        return Outcome.HIT_TRUE if tag is TruthTag.TRUE_TARGET else Outcome.HIT_DECOY

    def _log(self, action_idx, reward, energy, n_decoys, bandwidth, site_range, deviation) -> None:
        m = self.missile
        rec = {
            "step": self.step_count,
            "x": round(m.position.x, 3),
            "y": round(m.position.y, 3),
            "range_m": round(site_range, 3),
            "deviation_deg": round(deviation, 6),
            "mode": m.guidance_mode.value,
            "acquired": m.acquired_id,
            "snr_db": round(self.last_site_snr, 4) if math.isfinite(self.last_site_snr) else None,
            "action": action_idx,
            "reward": reward,
            "spend": [energy, n_decoys, bandwidth],
            "remaining": [self.budget.jamming_energy, self.budget.decoys, self.budget.cyber_bandwidth],
            "outcome": self.outcome.value if self.outcome else None,
        }
        self.event_log.write(json.dumps({"scenario": self.cfg.name, "seed": self.seed, **rec}) + "\n")

    # ------------------------------------------------------------------ result

    def result(self) -> RunResult:
        if not self.done:
            raise RuntimeError("episode still running")
        e0, d0, b0 = self.budget.initial
        spend_norm = sum(s / i for s, i in zip(self.spent, (e0, d0, b0)) if i)
        return RunResult(
            scenario=self.cfg.name,
            seed=self.seed,
            outcome=self.outcome,
            mean_deviation_deg=self.deviation_sum / self.step_count,
            ew_spend=self.spent[0],
            cyber_spend=self.spent[2],
            decoy_spend=self.spent[1],
            steps=self.step_count,
            total_return=self.total_return,
            total_spend_norm=spend_norm,
        )


def make_policy(cfg: ScenarioConfig, policy=None):
    """Resolve the scenario's policy source unless an explicit policy is supplied."""
    if policy is not None:
        return policy
    c = cfg.calibration
    if cfg.policy == "none":
        return NullPolicy()
    if cfg.policy == "random":
        return RandomPolicy()
    if cfg.policy == "scripted-max":
        return ScriptedMaxPolicy(c.engage_range_m)
    if cfg.policy == "scripted-coordinated":
        return ScriptedCoordinatedPolicy(c.schedule)
    if cfg.policy == "trained":
        try:
            return load_policy(cfg.policy_path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load policy: {exc}", key=f"scenarios.{cfg.name}.policy_path") from exc
    raise ConfigError(f"unknown policy source {cfg.policy!r}", key=f"scenarios.{cfg.name}.policy")


def run_episode(cfg: ScenarioConfig, policy=None, seed: int = 0, event_log: Optional[TextIO] = None) -> RunResult:
    cfg.validate()
    policy = make_policy(cfg, policy)
    ep = Episode(cfg, seed, event_log=event_log)
    while not ep.done:
        obs = ep.observe()
        ep.step(policy.choose(obs, ep.mask(), ep.rng_policy))
    return ep.result()


# --------------------------------------------------------------------------- battery


@dataclass
class ScenarioStats:
    name: str
    runs: int
    acquisition_rate: float
    deviation_mean: float
    deviation_std: float
    deviation_ci95: Optional[tuple[float, float]]
    ew_spend_mean: float
    cyber_spend_mean: float
    decoy_spend_mean: float
    total_spend_norm_mean: float
    return_mean: float
    outcomes: dict

    @classmethod
    def from_results(cls, name: str, results: Sequence[RunResult]) -> ScenarioStats:
        results = sorted(results, key=lambda r: r.seed)
        n = len(results)
        dev = np.array([r.mean_deviation_deg for r in results])
        std = float(dev.std(ddof=1)) if n > 1 else float("nan")
        ci = None
        if n > 1:
            half = float(sps.t.ppf(0.975, n - 1)) * std / math.sqrt(n)
            ci = (float(dev.mean()) - half, float(dev.mean()) + half)
        counts = {o.value: 0 for o in Outcome}
        for r in results:
            counts[r.outcome.value] += 1
        return cls(
            name=name,
            runs=n,
            acquisition_rate=sum(r.acquisition_success for r in results) / n,
            deviation_mean=float(dev.mean()),
            deviation_std=std,
            deviation_ci95=ci,
            ew_spend_mean=float(np.mean([r.ew_spend for r in results])),
            cyber_spend_mean=float(np.mean([r.cyber_spend for r in results])),
            decoy_spend_mean=float(np.mean([r.decoy_spend for r in results])),
            total_spend_norm_mean=float(np.mean([r.total_spend_norm for r in results])),
            return_mean=float(np.mean([r.total_return for r in results])),
            outcomes=counts,
        )

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["deviation_std"] = None if math.isnan(self.deviation_std) else self.deviation_std
        d["deviation_ci95"] = list(self.deviation_ci95) if self.deviation_ci95 else None
        d["ci_defined"] = self.deviation_ci95 is not None
        return d


@dataclass
class BatteryReport:
    scenarios: dict[str, ScenarioStats]
    results: list[RunResult] = field(repr=False, default_factory=list)

    @property
    def total_runs(self) -> int:
        return sum(s.runs for s in self.scenarios.values())

    def comparisons(self) -> list[dict]:
        names = list(self.scenarios)
        out = []
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                sa, sb = self.scenarios[a], self.scenarios[b]
                out.append(
                    {
                        "a": a,
                        "b": b,
                        "deviation_diff_deg": sb.deviation_mean - sa.deviation_mean,
                        "acquisition_diff": sb.acquisition_rate - sa.acquisition_rate,
                        "spend_ratio": (sb.total_spend_norm_mean / sa.total_spend_norm_mean)
                        if sa.total_spend_norm_mean
                        else None,
                    }
                )
        return out

    def to_dict(self) -> dict:
        return {
            "total_runs": self.total_runs,
            "scenarios": {k: v.to_dict() for k, v in self.scenarios.items()},
            "comparisons": self.comparisons(),
        }


def run_seeds(base_seed: int, runs: int) -> range:
    return range(base_seed, base_seed + runs)


def run_battery(
    battery: Iterable[tuple[ScenarioConfig, int]],
    base_seed: int = 1,
    policies: Optional[dict] = None,
    event_log: Optional[TextIO] = None,
    progress: Optional[Callable[[str, int], None]] = None,
) -> BatteryReport:
    """Run every scenario for its requested number of seeds.

    Every scenario uses seeds ``base_seed .. base_seed + runs - 1``, so scenarios face
    the same draws of weather, spawn geometry and clutter.
    """
    stats: dict[str, ScenarioStats] = {}
    all_results: list[RunResult] = []
    for cfg, runs in battery:
        if runs < 1:
            raise ValueError("runs must be at least 1")
        policy = make_policy(cfg, (policies or {}).get(cfg.name))
        results = []
        for seed in run_seeds(base_seed, runs):
            results.append(run_episode(cfg, policy, seed, event_log))
            if progress:
                progress(cfg.name, seed)
        stats[cfg.name] = ScenarioStats.from_results(cfg.name, results)
        all_results += results
    return BatteryReport(stats, all_results)


def run_configured_battery(battery: BatteryConfig, **kwargs) -> BatteryReport:
    return run_battery(battery.items(), battery.base_seed, **kwargs)


# --------------------------------------------------------------------------- files


def write_runs_csv(results: Sequence[RunResult], path) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RUN_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow(r.csv_row())
    Path(path).write_text(buf.getvalue())


def write_summary_json(report: BatteryReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


class MalformedRunsError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def read_runs_csv(path) -> list[RunResult]:
    text = Path(path).read_text()
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != RUN_FIELDS:
        raise MalformedRunsError(f"expected header {','.join(RUN_FIELDS)}", 1)
    out = []
    for i, row in enumerate(reader, start=2):
        try:
            if None in row or any(v is None for v in row.values()):
                raise ValueError("wrong number of fields")
            outcome = Outcome(row["outcome"])
            r = RunResult(
                scenario=row["scenario"],
                seed=int(row["seed"]),
                outcome=outcome,
                mean_deviation_deg=float(row["mean_deviation_deg"]),
                ew_spend=float(row["ew_spend"]),
                cyber_spend=float(row["cyber_spend"]),
                decoy_spend=int(row["decoy_spend"]),
                steps=int(row["steps"]),
            )
            if int(row["acquisition"]) != int(r.acquisition_success):
                raise ValueError("acquisition flag disagrees with outcome")
        except (ValueError, KeyError) as exc:
            raise MalformedRunsError(str(exc), i) from exc
        out.append(r)
    return out


# --------------------------------------------------------------------------- reference check


@dataclass(frozen=True)
class ReferenceRow:
    """One reference claim and its tolerance.

    ``metric`` is an attribute of ScenarioStats, or ``spend_increase``: the fractional
    excess of the scenario's mean normalized spend over the mean of ``relative_to``.
    ``reference`` is a value or a ``[lo, hi]`` band; the tolerance widens it by
    ``abs`` or by ``rel`` times the reference.
    """

    name: str
    scenario: str
    metric: str
    reference: tuple[float, float]
    tol_abs: float = 0.0
    tol_rel: float = 0.0
    relative_to: tuple[str, ...] = ()

    @property
    def bounds(self) -> tuple[float, float]:
        lo, hi = self.reference
        return (lo - self.tol_abs - self.tol_rel * abs(lo), hi + self.tol_abs + self.tol_rel * abs(hi))

    def describe_tolerance(self) -> str:
        return f"±{self.tol_abs:g}" if self.tol_abs else f"±{100 * self.tol_rel:g}%"


@dataclass(frozen=True)
class Verdict:
    name: str
    scenario: str
    metric: str
    measured: Optional[float]
    reference: tuple[float, float]
    tolerance: str
    lower: float
    upper: float
    status: str  # pass | fail | missing

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "scenario": self.scenario,
            "metric": self.metric,
            "measured": self.measured,
            "reference": list(self.reference),
            "tolerance": self.tolerance,
            "lower": self.lower,
            "upper": self.upper,
            "status": self.status,
        }


def parse_reference(data: dict) -> list[ReferenceRow]:
    if not isinstance(data, dict) or not isinstance(data.get("criteria"), list):
        raise ConfigError("reference file needs a 'criteria' list", key="criteria")
    rows = []
    for i, item in enumerate(data["criteria"]):
        key = f"criteria[{i}]"
        try:
            ref = item["reference"]
            ref = (float(ref[0]), float(ref[1])) if isinstance(ref, list) else (float(ref), float(ref))
            tol = item.get("tolerance", {}) or {}
            unknown = set(tol) - {"abs", "rel"}
            if unknown:
                raise ConfigError(f"unknown tolerance kind {sorted(unknown)[0]!r}", key=f"{key}.tolerance")
            rows.append(
                ReferenceRow(
                    name=str(item["name"]),
                    scenario=str(item["scenario"]),
                    metric=str(item["metric"]),
                    reference=ref,
                    tol_abs=float(tol.get("abs", 0.0)),
                    tol_rel=float(tol.get("rel", 0.0)),
                    relative_to=tuple(item.get("relative_to", ())),
                )
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"malformed reference row: {exc}", key=key) from exc
    return rows


def load_reference(path) -> list[ReferenceRow]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", key="<reference>") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}", key="<reference>") from exc
    return parse_reference(data)


def _measure(row: ReferenceRow, stats: dict) -> Optional[float]:
    if row.scenario not in stats:
        return None
    s = stats[row.scenario]
    if row.metric == "spend_increase":
        if not row.relative_to or any(n not in stats for n in row.relative_to):
            return None
        base = float(np.mean([stats[n]["total_spend_norm_mean"] for n in row.relative_to]))
        return s["total_spend_norm_mean"] / base - 1.0 if base else None
    value = s.get(row.metric)
    return None if value is None else float(value)


def compare_to_reference(report, reference: Sequence[ReferenceRow]) -> list[Verdict]:
    """Check each reference row; a scenario absent from ``report`` yields a ``missing`` verdict.

    ``report`` is a BatteryReport or its ``to_dict()`` form (as read back from summary JSON).
    """
    data = report.to_dict() if isinstance(report, BatteryReport) else report
    stats = data.get("scenarios", {})
    out = []
    for row in reference:
        lo, hi = row.bounds
        measured = _measure(row, stats)
        if measured is None:
            status = "missing"
        else:
            status = "pass" if lo <= measured <= hi else "fail"
        out.append(Verdict(row.name, row.scenario, row.metric, measured, row.reference, row.describe_tolerance(), lo, hi, status))
    return out


def report_from_runs(results: Sequence[RunResult], calibration: Calibration = Calibration()) -> BatteryReport:
    """Rebuild a BatteryReport from runs read back from CSV, renormalizing spend with ``calibration``."""
    e0, d0, b0 = calibration.jamming_energy, calibration.decoy_stock, calibration.cyber_bandwidth
    groups: dict[str, list[RunResult]] = {}
    for r in results:
        r.total_spend_norm = (r.ew_spend / e0 if e0 else 0.0) + (r.decoy_spend / d0 if d0 else 0.0) + (r.cyber_spend / b0 if b0 else 0.0)
        groups.setdefault(r.scenario, []).append(r)
    return BatteryReport({k: ScenarioStats.from_results(k, v) for k, v in groups.items()}, list(results))
