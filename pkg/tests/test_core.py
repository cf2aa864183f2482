import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multilayer_defense.core import (
    PRESETS,
    GuidanceMode,
    MissileState,
    RegionPreset,
    ResourceBudget,
    Vec3,
    angular_deviation,
    rotate_about_vertical,
    sample_environment,
    step_kinematics,
)
from multilayer_defense.errors import DegenerateGeometryError, EpisodeOver, RejectedActionError

finite = st.floats(-1e4, 1e4, allow_nan=False)
angles = st.floats(0.0, 2.0 * math.pi)


def unit(v):
    return Vec3.from_iter(v).normalized()


def missile(heading=Vec3(1.0, 0.0, 0.0), fuel=1200, speed=250.0):
    return MissileState(Vec3(0.0, 0.0, 0.0), speed, heading, Vec3(1e4, 0.0, 0.0), fuel_steps_remaining=fuel)


# --- Vec3


def test_normalized_is_unit():
    v = Vec3(3.0, 4.0, 12.0).normalized()
    assert abs(v.norm() - 1.0) < 1e-12


def test_normalizing_zero_raises():
    with pytest.raises(DegenerateGeometryError):
        Vec3(0.0, 0.0, 0.0).normalized()


# --- angular_deviation


def test_deviation_aligned():
    assert angular_deviation(Vec3(1.0, 0.0, 0.0), Vec3(0.0, 0.0, 0.0), Vec3(10.0, 0.0, 0.0)) == 0.0


def test_deviation_opposite():
    assert angular_deviation(Vec3(-1.0, 0.0, 0.0), Vec3(0.0, 0.0, 0.0), Vec3(10.0, 0.0, 0.0)) == 180.0


def test_deviation_orthogonal():
    assert angular_deviation(Vec3(0.0, 1.0, 0.0), Vec3(0.0, 0.0, 0.0), Vec3(10.0, 0.0, 0.0)) == pytest.approx(90.0, abs=1e-12)


def test_deviation_45_degrees():
    d = angular_deviation(Vec3(1.0, 0.0, 0.0), Vec3(0.0, 0.0, 0.0), Vec3(7.0, 7.0, 0.0))
    assert abs(d - 45.0) < 1e-9


def test_deviation_coincident_positions_raise():
    with pytest.raises(DegenerateGeometryError):
        angular_deviation(Vec3(1.0, 0.0, 0.0), Vec3(5.0, 5.0, 0.0), Vec3(5.0, 5.0, 0.0))


@settings(max_examples=200, deadline=None)
@given(
    st.tuples(finite, finite, finite),
    st.tuples(finite, finite, finite),
    st.tuples(finite, finite, finite),
    angles,
    st.tuples(finite, finite, finite),
)
def test_deviation_invariant_under_rotation_and_translation(h, p, t, angle, shift):
    hv, pv, tv, sv = Vec3(*h), Vec3(*p), Vec3(*t), Vec3(*shift)
    if hv.norm() < 1e-3 or pv.distance(tv) < 1e-3:
        return
    heading = hv.normalized()
    before = angular_deviation(heading, pv, tv)
    after = angular_deviation(
        rotate_about_vertical(heading, angle),
        rotate_about_vertical(pv, angle) + sv,
        rotate_about_vertical(tv, angle) + sv,
    )
    assert abs(before - after) < 1e-6
    assert 0.0 <= before <= 180.0


# --- environment sampling


def test_coastal_humidity_in_range():
    for seed in range(50):
        env = sample_environment(PRESETS["khuzestan_coastal"], np.random.default_rng(seed))
        assert 0.60 <= env.humidity <= 0.95


def test_sampling_is_deterministic():
    a = sample_environment(PRESETS["khuzestan_plain"], np.random.default_rng(3))
    b = sample_environment(PRESETS["khuzestan_plain"], np.random.default_rng(3))
    assert a == b


def test_collapsed_preset_returns_exact_values():
    p = RegionPreset("flat", (30.0, 30.0), (0.4, 0.4), (5.0, 5.0), 0.7)
    env = sample_environment(p, np.random.default_rng(0))
    assert (env.temperature_c, env.humidity, env.wind_speed, env.terrain_openness) == (30.0, 0.4, 5.0, 0.7)


def test_three_builtin_presets():
    assert set(PRESETS) == {"khuzestan_plain", "khuzestan_coastal", "khuzestan_mountain"}


def test_preset_rejects_inverted_range():
    with pytest.raises(ValueError):
        RegionPreset("bad", (40.0, 30.0), (0.1, 0.2), (1.0, 2.0), 0.5)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_environment_distribution(name):
    p = PRESETS[name]
    rng = np.random.default_rng(11)
    envs = [sample_environment(p, rng) for _ in range(10_000)]
    for field, (lo, hi) in (
        ("temperature_c", p.temp_range),
        ("humidity", p.humidity_range),
        ("wind_speed", p.wind_speed_range),
    ):
        x = np.array([getattr(e, field) for e in envs])
        assert x.min() >= lo and x.max() <= hi
        mid = 0.5 * (lo + hi)
        assert abs(x.mean() - mid) <= 0.05 * abs(mid)
    for e in envs[:100]:
        assert e.wind_dir.z == 0.0 and abs(e.wind_dir.norm() - 1.0) < 1e-9


# --- kinematics


def test_straight_flight_moves_25_m():
    s = step_kinematics(missile(), Vec3(1.0, 0.0, 0.0), 0.1)
    assert s.position.x == pytest.approx(25.0, abs=1e-12)
    assert s.fuel_steps_remaining == 1199
    assert s.speed == 250.0


def test_turn_cap_binds():
    cap = 0.0175
    s = step_kinematics(missile(), Vec3(0.0, 1.0, 0.0), 0.1, max_turn_rate=cap / 0.1)
    turned = math.atan2(s.heading.y, s.heading.x)
    assert turned == pytest.approx(cap, abs=1e-12)


def test_turn_within_cap_reaches_command():
    cmd = unit((math.cos(0.01), math.sin(0.01), 0.0))
    s = step_kinematics(missile(), cmd, 0.1)
    assert s.heading.distance(cmd) < 1e-12


def test_antiparallel_command_turns_horizontally():
    s = step_kinematics(missile(), Vec3(-1.0, 0.0, 0.0), 0.1)
    assert s.heading.z == 0.0
    assert math.acos(s.heading.x) == pytest.approx(0.035, abs=1e-12)


def test_zero_fuel_signals_episode_over():
    m = missile(fuel=0)
    with pytest.raises(EpisodeOver):
        step_kinematics(m, m.heading, 0.1)


def test_chained_steps_keep_unit_heading_and_exact_displacement():
    rng = np.random.default_rng(5)
    s = missile(fuel=10_000)
    for _ in range(10_000):
        cmd = unit(rng.normal(size=3))
        prev = s.position
        s = step_kinematics(s, cmd, 0.1)
        assert abs(s.heading.norm() - 1.0) < 1e-9
        assert abs(s.position.distance(prev) - 25.0) <= 25.0 * 1e-9
    assert s.fuel_steps_remaining == 0


def test_missile_state_rejects_non_unit_heading():
    with pytest.raises(ValueError):
        MissileState(Vec3(0, 0, 0), 250.0, Vec3(2.0, 0.0, 0.0), Vec3(1, 0, 0))


def test_guidance_modes():
    assert {m.value for m in GuidanceMode} == {"cruise", "terminal_homing", "evasive_reroute"}


# --- budget


def test_budget_spend_and_reject_without_consumption():
    b = ResourceBudget(10.0, 2, 5.0)
    b.spend(energy=4.0, decoys=1)
    assert (b.jamming_energy, b.decoys, b.cyber_bandwidth) == (6.0, 1, 5.0)
    with pytest.raises(RejectedActionError):
        b.spend(energy=1.0, decoys=2)
    assert (b.jamming_energy, b.decoys, b.cyber_bandwidth) == (6.0, 1, 5.0)
    assert b.fractions() == pytest.approx((0.6, 0.5, 1.0))
