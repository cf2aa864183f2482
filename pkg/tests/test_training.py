import numpy as np
import pytest

from multilayer_defense.config import BUILTIN_SCENARIOS
from multilayer_defense.coordinator import N_STATES, STATE_SHAPE, DQNPolicy, QTablePolicy, policy_to_bytes
from multilayer_defense.policies import NullPolicy
from multilayer_defense.training import (
    LearningGate,
    TrainingConfig,
    TrainingResult,
    _bearing_rows,
    evaluate,
    evaluation_seeds,
    train,
)

ML = BUILTIN_SCENARIOS["multi_layer"]


def test_epsilon_schedule():
    cfg = TrainingConfig(episodes=100)
    assert cfg.epsilon(0) == 1.0
    assert cfg.epsilon(30) == pytest.approx(1.0 - 0.5 * 0.95)
    assert cfg.epsilon(60) == pytest.approx(0.05)
    assert cfg.epsilon(99) == pytest.approx(0.05)


def test_one_episode_gives_one_point():
    res = train(ML, "tabular", TrainingConfig(episodes=1))
    assert len(res.returns) == len(res.epsilons) == len(res.learning_curve()) == 1


def test_tabular_training_is_deterministic():
    a = train(ML, "tabular", TrainingConfig(episodes=3, seed=4))
    b = train(ML, "tabular", TrainingConfig(episodes=3, seed=4))
    assert policy_to_bytes(a.policy) == policy_to_bytes(b.policy)
    assert a.returns == b.returns
    assert isinstance(a.policy, QTablePolicy)


def test_dqn_training_is_deterministic_and_learns_something():
    cfg = TrainingConfig(episodes=2, seed=1, warmup=64)
    a = train(ML, "dqn", cfg)
    b = train(ML, "dqn", cfg)
    assert isinstance(a.policy, DQNPolicy)
    assert policy_to_bytes(a.policy) == policy_to_bytes(b.policy)
    untouched = train(ML, "dqn", TrainingConfig(episodes=2, seed=1, warmup=10**9))
    assert not np.array_equal(a.policy.net.to_flat(), untouched.policy.net.to_flat())


def test_unknown_mode():
    with pytest.raises(ValueError):
        train(ML, "ppo", TrainingConfig(episodes=1))


def test_learning_curve_is_trailing_mean():
    res = TrainingResult(None, returns=[1.0, 3.0, 5.0, 7.0])
    assert np.allclose(res.learning_curve(2), [1.0, 2.0, 4.0, 6.0])


def test_gate_arithmetic():
    assert LearningGate(12.0, 10.0, 0.2).passed
    assert not LearningGate(11.9, 10.0, 0.2).passed
    # a negative random baseline still demands a 20% margin above it
    assert LearningGate(-0.8, -1.0, 0.2).passed
    assert not LearningGate(-0.9, -1.0, 0.2).passed
    assert LearningGate(12.0, 10.0, 0.2).improvement == pytest.approx(0.2)


def test_evaluation_seeds_are_disjoint_from_battery_and_training():
    seeds = set(evaluation_seeds(200))
    assert len(seeds) == 200
    assert not seeds & set(range(1, 100_001))
    assert not seeds & set(range(1_000_000, 1_000_000 + 2000))


def test_evaluate_is_reproducible():
    a = evaluate(ML, NullPolicy(), evaluation_seeds(3))
    b = evaluate(ML, NullPolicy(), evaluation_seeds(3))
    assert np.array_equal(a, b)


def test_bearing_rows_vary_only_the_sector():
    idx = int(np.ravel_multi_index((2, 5, 1, 0, 2, 1, 0), STATE_SHAPE))
    rows = _bearing_rows(idx)
    assert idx in rows and len(set(rows.tolist())) == STATE_SHAPE[1]
    bins = np.array(np.unravel_index(rows, STATE_SHAPE))
    assert sorted(bins[1]) == list(range(STATE_SHAPE[1]))
    assert np.all(np.delete(bins, 1, axis=0) == np.array([2, 1, 0, 2, 1, 0])[:, None])


def test_tied_table_is_identical_across_bearings():
    res = train(ML, "tabular", TrainingConfig(episodes=2, seed=5))
    Q = res.policy.table.reshape(STATE_SHAPE + (-1,))
    assert np.array_equal(Q, np.broadcast_to(Q[:, :1], Q.shape))
    assert Q.size == N_STATES * 48


def test_untied_table_touches_single_rows():
    res = train(ML, "tabular", TrainingConfig(episodes=1, seed=5, tie_bearings=False, q_init=0.0))
    Q = res.policy.table.reshape(STATE_SHAPE + (-1,))
    assert not np.array_equal(Q, np.broadcast_to(Q[:, :1], Q.shape))
