import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multilayer_defense.core import EnvironmentState, ResourceBudget, Vec3
from multilayer_defense.deception import (
    DecoySignature,
    TargetSpec,
    decoy_features,
    deploy_decoys,
    drift_decoys,
    signature_profile,
)
from multilayer_defense.errors import RejectedActionError
from multilayer_defense.seeker import DEFAULT_TEMPLATE, SceneObject, TruthTag, acquire, load_weights, sense

EAST = Vec3(1.0, 0.0, 0.0)
SITE = TargetSpec(Vec3(0.0, 0.0, 0.0), DEFAULT_TEMPLATE)


def env(t=25.0, wind=0.0):
    return EnvironmentState(t, 0.3, EAST, wind, 0.8)


def test_perfect_decoy_copies_signature():
    u = np.random.default_rng(0).uniform(0, 1, 6)
    assert np.array_equal(decoy_features(SITE, env(40.0), 1.0, u), signature_profile(SITE.template_features, 40.0))


def test_zero_fidelity_is_pure_imperfection():
    u = np.random.default_rng(1).uniform(0, 1, 6)
    assert np.array_equal(decoy_features(SITE, env(), 0.0, u), u)


def test_thermal_channel_hand_value():
    t = TargetSpec(Vec3(0, 0, 0), (0.5, 0.5, 0.5, 0.5, 0.5, 0.5))
    out = decoy_features(t, env(50.0), 1.0, np.zeros(6))
    assert out[0] == pytest.approx(0.55, abs=1e-12)
    assert np.all(out[1:] == 0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(-10.0, 55.0), st.integers(0, 10_000))
def test_features_affine_in_fidelity(f, temp, seed):
    u = np.random.default_rng(seed).uniform(0, 1, 6)
    e = env(temp)
    blend = f * decoy_features(SITE, e, 1.0, u) + (1 - f) * decoy_features(SITE, e, 0.0, u)
    assert np.allclose(decoy_features(SITE, e, f, u), blend, rtol=0, atol=1e-15)


def test_fidelity_bounds_enforced():
    with pytest.raises(ValueError):
        decoy_features(SITE, env(), 1.1, np.zeros(6))
    with pytest.raises(ValueError):
        DecoySignature(1, Vec3(0, 0, 0), (0.0,) * 6, -0.1, 30.0)


def test_target_spec_validation():
    with pytest.raises(ValueError):
        TargetSpec(Vec3(0, 0, 0), (0.1, 0.2))


# --- deployment


def test_deploy_zero_is_noop():
    b = ResourceBudget(0.0, 5, 0.0)
    assert deploy_decoys(0, SITE, env(), 0.9, 500.0, np.random.default_rng(0), b) == []
    assert b.decoys == 5


def test_deploy_whole_stock_empties_inventory():
    b = ResourceBudget(0.0, 4, 0.0)
    out = deploy_decoys(4, SITE, env(), 0.9, 500.0, np.random.default_rng(0), b)
    assert len(out) == 4 and b.decoys == 0


def test_deploy_over_stock_rejected_without_consumption():
    b = ResourceBudget(0.0, 2, 0.0)
    with pytest.raises(RejectedActionError):
        deploy_decoys(3, SITE, env(), 0.9, 500.0, np.random.default_rng(0), b)
    assert b.decoys == 2


@pytest.mark.parametrize("seed", range(20))
def test_placement_geometry(seed):
    out = deploy_decoys(3, SITE, env(), 0.9, 500.0, np.random.default_rng(seed))
    for a, b in itertools.combinations(out, 2):
        assert a.position.distance(b.position) >= 30.0
    for d in out:
        assert d.position.distance(SITE.position) <= 500.0
        assert d.position.z == 0.0
    assert len({d.id for d in out}) == 3


def test_separation_respects_existing_decoys_and_standoff():
    rng = np.random.default_rng(5)
    first = deploy_decoys(3, SITE, env(), 0.9, 200.0, rng, min_standoff_m=100.0)
    second = deploy_decoys(3, SITE, env(), 0.9, 200.0, rng, existing=first, first_id=103, min_standoff_m=100.0)
    everything = first + second
    for a, b in itertools.combinations(everything, 2):
        assert a.position.distance(b.position) >= 30.0
    assert all(100.0 <= d.position.distance(SITE.position) <= 200.0 for d in everything)


def test_inventory_conservation_over_many_deployments():
    rng = np.random.default_rng(8)
    b = ResourceBudget(0.0, 12, 0.0)
    deployed = []
    for k in (1, 3, 1, 3, 3, 1):
        deployed += deploy_decoys(k, SITE, env(), 0.9, 1200.0, rng, b, existing=deployed, first_id=100 + len(deployed))
        assert b.decoys + len(deployed) == 12


# --- drift


def decoy_at(x):
    return DecoySignature(1, Vec3(x, 0.0, 0.0), (0.5,) * 6, 0.9, 30.0)


def test_calm_air_leaves_positions():
    out = drift_decoys([decoy_at(10.0)], env(wind=0.0), 0.1)
    assert out[0].position == Vec3(10.0, 0.0, 0.0)


def test_single_drift_step():
    out = drift_decoys([decoy_at(0.0)], env(wind=10.0), 0.1)
    assert out[0].position.x == pytest.approx(0.3, abs=1e-15)
    assert out[0].features == (0.5,) * 6


def test_hundred_drift_steps_accumulate_30_m():
    ds = [decoy_at(0.0)]
    for _ in range(100):
        ds = drift_decoys(ds, env(wind=10.0), 0.1)
    assert abs(ds[0].position.x - 30.0) <= 1e-9


def test_drift_rejects_non_positive_dt():
    with pytest.raises(ValueError):
        drift_decoys([decoy_at(0.0)], env(), 0.0)


# --- symmetry oracle


@pytest.mark.parametrize("k", [1, 2, 3])
def test_identical_decoys_split_acquisition_evenly(k):
    net = load_weights()
    e = env(30.0)
    gamma = tuple(float(v) for v in signature_profile(SITE.template_features, e.temperature_c))
    scene = [SceneObject(0, SITE.position, gamma, 30.0, TruthTag.TRUE_TARGET)]
    for i in range(k):
        u = np.random.default_rng(i).uniform(0, 1, 6)
        f = tuple(float(v) for v in decoy_features(SITE, e, 1.0, u))
        assert f == gamma
        scene.append(SceneObject(100 + i, Vec3(100.0 * (i + 1), 0.0, 0.0), f, 30.0, TruthTag.DECOY))
    rng = np.random.default_rng(42)
    n = 10_000
    wins = sum(acquire(net, sense(scene, 0.5, rng)) == 0 for _ in range(n))
    assert abs(wins / n - 1.0 / (k + 1)) <= 0.02
