"""Training loops for the defense coordinator: tabular Q-learning and a small DQN.

Both learners interact with the same Episode engine that the battery uses, so a
trained policy can be dropped into any scenario whose ``policy`` is ``trained``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .config import ScenarioConfig
from .coordinator import (
    DQN,
    N_ACTIONS,
    N_FEATURES,
    N_STATES,
    STATE_SHAPE,
    Adam,
    DQNPolicy,
    QTablePolicy,
    dqn_backward,
    dqn_forward,
    q_update,
    select_action,
)
from .harness import Episode
from .policies import RandomPolicy

log = logging.getLogger(__name__)

# training and evaluation never share seeds
TRAIN_SEED_OFFSET = 1_000_000
EVAL_SEED_OFFSET = 5_000_000


@dataclass(frozen=True)
class TrainingConfig:
    episodes: int = 600
    seed: int = 0
    gamma: float = 0.95
    alpha: float = 0.1
    # tabular only. The jamming payoff builds up over hundreds of steps, so the
    # table needs a long horizon, optimistic start values and bearing symmetry
    tabular_gamma: float = 0.999
    q_init: float = 5.0
    tie_bearings: bool = True
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    anneal_fraction: float = 0.6
    # DQN only
    learning_rate: float = 1e-3
    replay_size: int = 10_000
    batch_size: int = 32
    target_sync: int = 250
    hidden: int = 32
    warmup: int = 500
    train_every: int = 4

    def epsilon(self, episode: int) -> float:
        span = max(1, int(self.anneal_fraction * self.episodes))
        frac = min(1.0, episode / span)
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


@dataclass
class TrainingResult:
    policy: object
    returns: list[float] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)

    def learning_curve(self, window: int = 50) -> np.ndarray:
        """Trailing moving average of the episode returns."""
        r = np.asarray(self.returns, dtype=np.float64)
        if r.size == 0:
            return r
        c = np.cumsum(np.insert(r, 0, 0.0))
        idx = np.arange(1, r.size + 1)
        lo = np.maximum(0, idx - window)
        return (c[idx] - c[lo]) / (idx - lo)


def _bearing_rows(index: int) -> np.ndarray:
    """Row indices of the state that differ from ``index`` only in the bearing sector."""
    bins = np.array(np.unravel_index(index, STATE_SHAPE))
    rows = np.repeat(bins[:, None], STATE_SHAPE[1], axis=1)
    rows[1] = np.arange(STATE_SHAPE[1])
    return np.ravel_multi_index(tuple(rows), STATE_SHAPE)


def train_tabular(
    scenario: ScenarioConfig,
    cfg: TrainingConfig = TrainingConfig(),
    progress: Optional[Callable[[int, float], None]] = None,
) -> TrainingResult:
    policy = QTablePolicy(np.full((N_STATES, N_ACTIONS), cfg.q_init))
    Q = policy.table
    rng = np.random.default_rng(cfg.seed)
    result = TrainingResult(policy)
    for ep_i in range(cfg.episodes):
        eps = cfg.epsilon(ep_i)
        ep = Episode(scenario, TRAIN_SEED_OFFSET + cfg.seed * 100_000 + ep_i)
        obs = ep.observe()
        s = obs.state.index
        mask = ep.mask()
        total = 0.0
        while True:
            a = select_action(Q[s], mask, eps, rng)
            r = ep.step(a)
            total += r
            if ep.done:
                q = q_update(Q[s, a], r, 0.0, cfg.alpha, cfg.tabular_gamma)
            else:
                obs = ep.observe()
                s2 = obs.state.index
                mask = ep.mask()
                q = q_update(Q[s, a], r, float(Q[s2][mask].max()), cfg.alpha, cfg.tabular_gamma)
            if cfg.tie_bearings:
                Q[_bearing_rows(s), a] = q
            else:
                Q[s, a] = q
            if ep.done:
                break
            s = s2
        result.returns.append(total)
        result.epsilons.append(eps)
        if progress:
            progress(ep_i, total)
    return result


def train_dqn(
    scenario: ScenarioConfig,
    cfg: TrainingConfig = TrainingConfig(),
    progress: Optional[Callable[[int, float], None]] = None,
) -> TrainingResult:
    rng = np.random.default_rng(cfg.seed)
    net = DQN.init(rng, cfg.hidden)
    target = net.copy()
    opt = Adam(net, cfg.learning_rate)
    cap = cfg.replay_size
    S = np.zeros((cap, N_FEATURES))
    A = np.zeros(cap, dtype=np.int64)
    R = np.zeros(cap)
    S2 = np.zeros((cap, N_FEATURES))
    M2 = np.zeros((cap, N_ACTIONS), dtype=bool)
    D = np.zeros(cap)
    size = ptr = updates = steps = 0
    result = TrainingResult(DQNPolicy(net))
    for ep_i in range(cfg.episodes):
        eps = cfg.epsilon(ep_i)
        ep = Episode(scenario, TRAIN_SEED_OFFSET + cfg.seed * 100_000 + ep_i)
        x = ep.observe().state.features
        mask = ep.mask()
        total = 0.0
        while not ep.done:
            a = select_action(dqn_forward(net, x), mask, eps, rng)
            r = ep.step(a)
            total += r
            done = ep.done
            x2 = x if done else ep.observe().state.features
            mask2 = mask if done else ep.mask()
            S[ptr], A[ptr], R[ptr], S2[ptr], M2[ptr], D[ptr] = x, a, r, x2, mask2, float(done)
            ptr = (ptr + 1) % cap
            size = min(size + 1, cap)
            steps += 1
            if size >= max(cfg.batch_size, cfg.warmup) and steps % cfg.train_every == 0:
                idx = rng.integers(size, size=cfg.batch_size)
                q_next = np.where(M2[idx], dqn_forward(target, S2[idx]), -np.inf).max(axis=1)
                y = R[idx] + cfg.gamma * (1.0 - D[idx]) * q_next
                _, grads = dqn_backward(net, S[idx], A[idx], y)
                opt.step(net, grads)
                updates += 1
                if updates % cfg.target_sync == 0:
                    target = net.copy()
            x, mask = x2, mask2
        result.returns.append(total)
        result.epsilons.append(eps)
        if progress:
            progress(ep_i, total)
    return result


def train(scenario: ScenarioConfig, mode: str = "tabular", cfg: TrainingConfig = TrainingConfig(), **kw) -> TrainingResult:
    if mode == "tabular":
        return train_tabular(scenario, cfg, **kw)
    if mode == "dqn":
        return train_dqn(scenario, cfg, **kw)
    raise ValueError(f"unknown training mode {mode!r}")


def evaluation_seeds(n: int = 200) -> Sequence[int]:
    return range(EVAL_SEED_OFFSET, EVAL_SEED_OFFSET + n)


def episode_return(scenario: ScenarioConfig, policy, seed: int) -> float:
    ep = Episode(scenario, seed)
    while not ep.done:
        obs = ep.observe()
        ep.step(policy.choose(obs, ep.mask(), ep.rng_policy))
    return ep.total_return


def evaluate(scenario: ScenarioConfig, policy, seeds: Sequence[int] = evaluation_seeds()) -> np.ndarray:
    """Per-seed returns of ``policy`` acting greedily."""
    return np.array([episode_return(scenario, policy, s) for s in seeds])


@dataclass(frozen=True)
class LearningGate:
    trained_mean: float
    random_mean: float
    threshold: float

    @property
    def improvement(self) -> float:
        return (self.trained_mean - self.random_mean) / abs(self.random_mean) if self.random_mean else float("inf")

    @property
    def passed(self) -> bool:
        return self.trained_mean >= self.random_mean + self.threshold * abs(self.random_mean)


def learning_gate(
    scenario: ScenarioConfig, policy, seeds: Sequence[int] = evaluation_seeds(), threshold: float = 0.2
) -> LearningGate:
    """Compare a trained policy with uniform-random play on the same fixed seeds."""
    trained = evaluate(scenario, policy, seeds)
    random = evaluate(scenario, RandomPolicy(), seeds)
    return LearningGate(float(trained.mean()), float(random.mean()), threshold)
