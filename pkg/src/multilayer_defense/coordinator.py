"""Defense coordinator: observation encoding, the composite action space, reward,
tabular Q-learning primitives and a numpy DQN with analytic gradients."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from enum import Enum
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .core import EnvironmentState, ResourceBudget, Vec3

N_FEATURES = 12
RANGE_EDGES_M = (3000.0, 7000.0, 12000.0)
SNR_EDGES_DB = (3.0, 15.0)
STATE_SHAPE = (4, 8, 3, 3, 3, 3, 3)
N_STATES = int(np.prod(STATE_SHAPE))


class EWLevel(Enum):
    OFF = 0
    LOW = 1
    MED = 2
    HIGH = 3


class CyberChoice(Enum):
    NONE = 0
    INJECT = 1
    TAMPER_RANDOM = 2
    TAMPER_TARGETED = 3


class DeceptionChoice(Enum):
    HOLD = 0
    DEPLOY_1 = 1
    DEPLOY_3 = 2


class DefenseAction(NamedTuple):
    ew: EWLevel
    cyber: CyberChoice
    deception: DeceptionChoice

    def label(self) -> str:
        return f"{self.ew.name.lower()}/{self.cyber.name.lower()}/{self.deception.name.lower()}"


_ACTIONS = tuple(
    DefenseAction(e, c, d) for e, c, d in itertools.product(EWLevel, CyberChoice, DeceptionChoice)
)
N_ACTIONS = len(_ACTIONS)


def action_space() -> tuple[DefenseAction, ...]:
    """All 48 composite actions, row-major over (ew, cyber, deception)."""
    return _ACTIONS


def action_index(action: DefenseAction) -> int:
    return (action.ew.value * len(CyberChoice) + action.cyber.value) * len(DeceptionChoice) + action.deception.value


@dataclass(frozen=True)
class ActionCosts:
    ew_power_dbm: tuple[float, float, float, float] = (0.0, 40.0, 55.0, 65.0)
    ew_energy: tuple[float, float, float, float] = (0.0, 1.0, 3.0, 6.0)
    cyber_bandwidth: tuple[float, float, float, float] = (0.0, 2.0, 4.0, 4.0)
    decoys: tuple[int, int, int] = (0, 1, 3)

    def of(self, action: DefenseAction) -> tuple[float, int, float]:
        return (
            self.ew_energy[action.ew.value],
            self.decoys[action.deception.value],
            self.cyber_bandwidth[action.cyber.value],
        )


DEFAULT_COSTS = ActionCosts()


@lru_cache(maxsize=16)
def _cost_table(costs: ActionCosts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    table = np.array([costs.of(a) for a in _ACTIONS], dtype=np.float64)
    return table[:, 0], table[:, 1], table[:, 2]


@lru_cache(maxsize=16)
def _layer_mask(enabled_layers: frozenset[str]) -> np.ndarray:
    return np.array(
        [
            (a.ew is EWLevel.OFF or "ew" in enabled_layers)
            and (a.cyber is CyberChoice.NONE or "cyber" in enabled_layers)
            and (a.deception is DeceptionChoice.HOLD or "deception" in enabled_layers)
            for a in _ACTIONS
        ]
    )


def action_mask(
    budget: ResourceBudget,
    enabled_layers: frozenset[str] | set[str] = frozenset({"ew", "cyber", "deception"}),
    costs: ActionCosts = DEFAULT_COSTS,
) -> np.ndarray:
    """Boolean mask of actions that are affordable and use only enabled layers."""
    energy, decoys, bandwidth = _cost_table(costs)
    return (
        _layer_mask(frozenset(enabled_layers))
        & (energy <= budget.jamming_energy)
        & (decoys <= budget.decoys)
        & (bandwidth <= budget.cyber_bandwidth)
    )


# --------------------------------------------------------------------------- state


@dataclass(frozen=True)
class CoordinatorState:
    missile_range_bin: int
    missile_bearing_bin: int
    snr_regime_bin: int
    env_regime: int
    jamming_level_bin: int
    decoy_level_bin: int
    cyber_level_bin: int
    features: np.ndarray = field(compare=False)

    @property
    def bins(self) -> tuple[int, ...]:
        return (
            self.missile_range_bin,
            self.missile_bearing_bin,
            self.snr_regime_bin,
            self.env_regime,
            self.jamming_level_bin,
            self.decoy_level_bin,
            self.cyber_level_bin,
        )

    @property
    def index(self) -> int:
        return int(np.ravel_multi_index(self.bins, STATE_SHAPE))


def _level_bin(fraction: float) -> int:
    if fraction < 1.0 / 3.0:
        return 0
    if fraction < 2.0 / 3.0:
        return 1
    return 2


def _clip01(v: float) -> float:
    return min(1.0, max(0.0, v))


def encode_state(
    track_pos: Vec3,
    site_pos: Vec3,
    env: EnvironmentState,
    env_regime: int,
    budget: ResourceBudget,
    snr_db: float,
    progress: float = 0.0,
) -> CoordinatorState:
    """Discretize what the defender can observe.

    ``track_pos`` is the defender's radar track of the missile (already noisy);
    ``progress`` is the elapsed fraction of the episode's step limit.
    """
    rel = track_pos - site_pos
    rng_m = math.hypot(rel.x, rel.y)
    range_bin = int(np.searchsorted(RANGE_EDGES_M, rng_m, side="right"))
    bearing = math.atan2(rel.y, rel.x) % (2.0 * math.pi)
    bearing_bin = min(7, int(bearing / (2.0 * math.pi / 8)))
    snr_bin = int(np.searchsorted(SNR_EDGES_DB, snr_db, side="right"))
    fe, fd, fc = budget.fractions()
    if not 0 <= env_regime <= 2:
        raise ValueError("env_regime must be 0, 1 or 2")
    features = np.array(
        [
            _clip01(rng_m / 15000.0),
            (math.sin(bearing) + 1.0) / 2.0,
            (math.cos(bearing) + 1.0) / 2.0,
            _clip01((snr_db + 40.0) / 80.0) if math.isfinite(snr_db) else float(snr_db > 0),
            _clip01((env.temperature_c - 15.0) / 40.0),
            env.humidity,
            _clip01(env.wind_speed / 20.0),
            env.terrain_openness,
            fe,
            fd,
            fc,
            _clip01(progress),
        ]
    )
    return CoordinatorState(
        range_bin, bearing_bin, snr_bin, env_regime, _level_bin(fe), _level_bin(fd), _level_bin(fc), features
    )


# --------------------------------------------------------------------------- reward


class Outcome(Enum):
    HIT_TRUE = "hit_true"
    HIT_DECOY = "hit_decoy"
    MISSED = "missed"
    FUEL_EXHAUSTED = "fuel_exhausted"


@dataclass(frozen=True)
class RewardWeights:
    deviation: float = 1.0
    acquisition: float = 5.0
    resources: float = 0.5


def step_reward(
    deviation_deg: float,
    terminal: Optional[Outcome],
    resources_spent_norm: float,
    weights: RewardWeights = RewardWeights(),
) -> float:
    if not 0.0 <= deviation_deg <= 180.0:
        raise ValueError("deviation must lie in [0, 180] degrees")
    r = weights.deviation * (deviation_deg / 180.0) - weights.resources * resources_spent_norm
    if terminal is Outcome.HIT_TRUE:
        r -= weights.acquisition
    elif terminal is not None:
        r += weights.acquisition
    return r


def q_update(q: float, r: float, max_q_next: float, alpha: float, gamma: float) -> float:
    return q + alpha * (r + gamma * max_q_next - q)


def select_action(
    values: np.ndarray,
    mask: np.ndarray,
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """Epsilon-greedy over the unmasked actions; greedy ties go to the smallest index."""
    allowed = np.flatnonzero(mask)
    if allowed.size == 0:
        raise RuntimeError("every action is masked; the null action should always be allowed")
    if epsilon > 0 and rng.random() < epsilon:
        return int(allowed[rng.integers(allowed.size)])
    v = np.asarray(values, dtype=np.float64)[allowed]
    return int(allowed[int(np.argmax(v))])


# --------------------------------------------------------------------------- policies


class QTablePolicy:
    mode = "tabular"

    def __init__(self, table: Optional[np.ndarray] = None):
        self.table = np.zeros((N_STATES, N_ACTIONS)) if table is None else np.asarray(table, dtype=np.float64)
        if self.table.shape != (N_STATES, N_ACTIONS):
            raise ValueError(f"Q-table must have shape {(N_STATES, N_ACTIONS)}")

    def action_values(self, state: CoordinatorState) -> np.ndarray:
        return self.table[state.index]

    def choose(self, obs, mask: np.ndarray, rng: np.random.Generator) -> int:
        return select_action(self.action_values(obs.state), mask, 0.0, rng)

    def arrays(self) -> dict[str, np.ndarray]:
        return {"q": self.table}


@dataclass
class DQN:
    """Action-value network 12 -> 32 -> 48 with a tanh hidden layer."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @classmethod
    def init(cls, rng: np.random.Generator, hidden: int = 32) -> DQN:
        return cls(
            W1=rng.normal(0.0, 1.0 / math.sqrt(N_FEATURES), (hidden, N_FEATURES)),
            b1=np.zeros(hidden),
            W2=rng.normal(0.0, 0.1 / math.sqrt(hidden), (N_ACTIONS, hidden)),
            b2=np.zeros(N_ACTIONS),
        )

    @classmethod
    def zeros(cls, hidden: int = 32) -> DQN:
        return cls(np.zeros((hidden, N_FEATURES)), np.zeros(hidden), np.zeros((N_ACTIONS, hidden)), np.zeros(N_ACTIONS))

    @property
    def n_params(self) -> int:
        return self.W1.size + self.b1.size + self.W2.size + self.b2.size

    def params(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def copy(self) -> DQN:
        return DQN(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy())

    def to_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params().values()])

    @classmethod
    def from_flat(cls, flat: np.ndarray, hidden: int = 32) -> DQN:
        flat = np.asarray(flat, dtype=np.float64)
        shapes = [(hidden, N_FEATURES), (hidden,), (N_ACTIONS, hidden), (N_ACTIONS,)]
        parts, i = [], 0
        for s in shapes:
            n = int(np.prod(s))
            parts.append(flat[i : i + n].reshape(s).copy())
            i += n
        if i != flat.size:
            raise ValueError("flat parameter vector has the wrong length")
        return cls(*parts)


def dqn_forward(net: DQN, features: np.ndarray) -> np.ndarray:
    """Action values for one feature vector (48,) or a batch (n, 48)."""
    x = np.asarray(features, dtype=np.float64)
    return np.tanh(x @ net.W1.T + net.b1) @ net.W2.T + net.b2


def dqn_loss(net: DQN, states: np.ndarray, actions: np.ndarray, targets: np.ndarray) -> float:
    q = dqn_forward(net, states)
    pred = q[np.arange(len(actions)), actions]
    return float(np.mean((pred - targets) ** 2))


def dqn_backward(
    net: DQN, states: np.ndarray, actions: np.ndarray, targets: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared TD error over the batch and its gradient for every parameter."""
    X = np.asarray(states, dtype=np.float64).reshape(-1, N_FEATURES)
    actions = np.asarray(actions, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    n = X.shape[0]
    h = np.tanh(X @ net.W1.T + net.b1)
    q = h @ net.W2.T + net.b2
    rows = np.arange(n)
    err = q[rows, actions] - targets
    dq = np.zeros_like(q)
    dq[rows, actions] = 2.0 * err / n
    g_W2 = dq.T @ h
    g_b2 = dq.sum(axis=0)
    dpre = (dq @ net.W2) * (1.0 - h * h)
    g_W1 = dpre.T @ X
    g_b1 = dpre.sum(axis=0)
    return float(np.mean(err**2)), {"W1": g_W1, "b1": g_b1, "W2": g_W2, "b2": g_b2}


class Adam:
    def __init__(self, net: DQN, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in net.params().items()}
        self.v = {k: np.zeros_like(v) for k, v in net.params().items()}
        self.t = 0

    def step(self, net: DQN, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, p in net.params().items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            p -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


class DQNPolicy:
    mode = "dqn"

    def __init__(self, net: DQN):
        self.net = net

    def action_values(self, state: CoordinatorState) -> np.ndarray:
        return dqn_forward(self.net, state.features)

    def choose(self, obs, mask: np.ndarray, rng: np.random.Generator) -> int:
        return select_action(self.action_values(obs.state), mask, 0.0, rng)

    def arrays(self) -> dict[str, np.ndarray]:
        return self.net.params()


# --------------------------------------------------------------------------- persistence

POLICY_MAGIC = b"MLDPOLICY"
POLICY_VERSION = 1


def policy_to_bytes(policy: QTablePolicy | DQNPolicy) -> bytes:
    arrays = policy.arrays()
    header = {
        "mode": policy.mode,
        "arrays": [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()],
    }
    head = POLICY_MAGIC + b" %d\n" % POLICY_VERSION + json.dumps(header, sort_keys=True).encode() + b"\n"
    body = b"".join(np.ascontiguousarray(v, dtype="<f8").tobytes() for v in arrays.values())
    return head + body


def policy_from_bytes(blob: bytes) -> QTablePolicy | DQNPolicy:
    first, rest = blob.split(b"\n", 1)
    magic, _, version = first.partition(b" ")
    if magic != POLICY_MAGIC or int(version) != POLICY_VERSION:
        raise ValueError("not a version-1 policy file")
    header_line, body = rest.split(b"\n", 1)
    header = json.loads(header_line)
    arrays, offset = {}, 0
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        n = int(np.prod(shape)) * 8
        if offset + n > len(body):
            raise ValueError("policy file is truncated")
        arrays[spec["name"]] = np.frombuffer(body[offset : offset + n], dtype="<f8").reshape(shape).astype(np.float64)
        offset += n
    if offset != len(body):
        raise ValueError("trailing bytes in policy file")
    if header["mode"] == "tabular":
        return QTablePolicy(arrays["q"])
    if header["mode"] == "dqn":
        return DQNPolicy(DQN(arrays["W1"], arrays["b1"], arrays["W2"], arrays["b2"]))
    raise ValueError(f"unknown policy mode {header['mode']!r}")


def save_policy(policy, path) -> None:
    Path(path).write_bytes(policy_to_bytes(policy))


def load_policy(path) -> QTablePolicy | DQNPolicy:
    return policy_from_bytes(Path(path).read_bytes())
