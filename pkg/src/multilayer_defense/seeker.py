"""The threat's onboard seeker: a small scoring network, sensing, acquisition and guidance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import GuidanceMode, MissileState, Vec3, rotate_about_vertical
from .deception import THERMAL_GAIN_PER_DEGC

N_FEATURES = 6
DEFAULT_HIDDEN = 8

WEAVE_SNR_THRESHOLD_DB = 3.0
WEAVE_WINDOW = 20
WEAVE_ANGLE_DEG = 20.0
WEAVE_STEPS = 50

ASSET_VERSION = 1
DEFAULT_WEIGHTS_PATH = Path(__file__).with_name("data") / "seeker_weights.txt"

# Signature profile of the defended site: thermal, radar cross-section,
# spectral-1, spectral-2, size, motion.
DEFAULT_TEMPLATE = (0.8, 0.7, 0.25, 0.65, 0.75, 0.1)


@dataclass(frozen=True, eq=False)
class SeekerNet:
    """Two-layer scorer: ``w2 . tanh(W1 x + b1) + b2``."""

    W1: np.ndarray  # (hidden, 6)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float

    def __post_init__(self):
        h = self.W1.shape[0]
        if self.W1.shape != (h, N_FEATURES) or self.b1.shape != (h,) or self.w2.shape != (h,):
            raise ValueError("inconsistent SeekerNet shapes")
        if not np.all(np.isfinite(self.to_flat())):
            raise ValueError("SeekerNet parameters must be finite")

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    @property
    def n_params(self) -> int:
        return self.hidden * (N_FEATURES + 2) + 1

    def to_flat(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.w2, [self.b2]])

    @classmethod
    def from_flat(cls, flat: Sequence[float], hidden: int = DEFAULT_HIDDEN) -> SeekerNet:
        flat = np.asarray(flat, dtype=np.float64)
        n = hidden * (N_FEATURES + 2) + 1
        if flat.shape != (n,):
            raise ValueError(f"expected {n} parameters, got {flat.shape}")
        i = hidden * N_FEATURES
        return cls(
            W1=flat[:i].reshape(hidden, N_FEATURES).copy(),
            b1=flat[i : i + hidden].copy(),
            w2=flat[i + hidden : i + 2 * hidden].copy(),
            b2=float(flat[-1]),
        )

    @classmethod
    def zeros(cls, hidden: int = DEFAULT_HIDDEN) -> SeekerNet:
        return cls.from_flat(np.zeros(hidden * (N_FEATURES + 2) + 1), hidden)

    @classmethod
    def random(cls, rng: np.random.Generator, hidden: int = DEFAULT_HIDDEN) -> SeekerNet:
        return cls(
            W1=rng.normal(0.0, 1.0 / math.sqrt(N_FEATURES), (hidden, N_FEATURES)),
            b1=np.zeros(hidden),
            w2=rng.normal(0.0, 1.0 / math.sqrt(hidden), hidden),
            b2=0.0,
        )

    def scaled_output(self, c: float) -> SeekerNet:
        return SeekerNet(self.W1.copy(), self.b1.copy(), self.w2 * c, self.b2 * c)


def forward(net: SeekerNet, features) -> float:
    x = np.asarray(features, dtype=np.float64)
    return float(net.w2 @ np.tanh(net.W1 @ x + net.b1) + net.b2)


def forward_batch(net: SeekerNet, X: np.ndarray) -> np.ndarray:
    """Scores for each row of ``X`` (shape (n, 6))."""
    X = np.asarray(X, dtype=np.float64).reshape(-1, N_FEATURES)
    return np.tanh(X @ net.W1.T + net.b1) @ net.w2 + net.b2


def score_param_gradient(net: SeekerNet, features) -> np.ndarray:
    """Gradient of the score with respect to the flat parameter vector."""
    x = np.asarray(features, dtype=np.float64)
    h = np.tanh(net.W1 @ x + net.b1)
    dpre = net.w2 * (1.0 - h * h)
    return np.concatenate([np.outer(dpre, x).ravel(), dpre, h, [1.0]])


def decoy_margin_gradient(net: SeekerNet, target_features, decoy_features: Iterable) -> np.ndarray:
    """Gradient of ``score(best decoy) - score(target)`` with respect to the weights.

    This is the loss a defender ascends to make the strongest decoy outscore the
    real target.  Returns zeros when there is no decoy.
    """
    decoys = [np.asarray(d, dtype=np.float64) for d in decoy_features]
    if not decoys:
        return np.zeros(net.n_params)
    scores = forward_batch(net, np.array(decoys))
    best = decoys[int(np.argmax(scores))]
    return score_param_gradient(net, best) - score_param_gradient(net, target_features)


# --------------------------------------------------------------------------- sensing


class TruthTag(Enum):
    TRUE_TARGET = "true_target"
    DECOY = "decoy"
    CLUTTER = "clutter"


@dataclass(frozen=True)
class SceneObject:
    """Something the seeker can see: the defended site, a decoy or background clutter."""

    id: int
    position: Vec3
    features: tuple[float, ...]
    emit_power_dbm: float
    truth_tag: TruthTag


@dataclass(frozen=True)
class PerceivedCandidate:
    id: int
    position: Vec3
    features: np.ndarray
    truth_tag: TruthTag


def sense(
    candidates: Sequence[SceneObject],
    q,
    rng: np.random.Generator,
    sigma0: float = 0.25,
    q_detect_floor: float = 0.05,
) -> list[PerceivedCandidate]:
    """Noisy perception of the scene.

    ``q`` is the detection quality, either one value for every candidate or one per
    candidate.  Each candidate is seen with probability ``min(1, q / q_detect_floor)``
    and its features pick up Gaussian noise of standard deviation ``sigma0 * (1 - q)``.
    """
    n = len(candidates)
    qs = np.broadcast_to(np.asarray(q, dtype=np.float64), (n,))
    if np.any((qs < 0) | (qs > 1)):
        raise ValueError("detection quality must lie in [0, 1]")
    if n == 0:
        return []
    seen = rng.random(n) < np.minimum(1.0, qs / q_detect_floor)
    noise = rng.normal(0.0, 1.0, (n, N_FEATURES)) * (sigma0 * (1.0 - qs))[:, None]
    return [
        PerceivedCandidate(c.id, c.position, np.asarray(c.features, dtype=np.float64) + noise[i], c.truth_tag)
        for i, c in enumerate(candidates)
        if seen[i]
    ]


def acquire(net: SeekerNet, perceived: Sequence[PerceivedCandidate]) -> Optional[int]:
    """Id of the highest-scoring candidate; ties go to the smallest id."""
    if not perceived:
        return None
    ordered = sorted(perceived, key=lambda c: c.id)
    scores = forward_batch(net, np.array([c.features for c in ordered]))
    return ordered[int(np.argmax(scores))].id


# --------------------------------------------------------------------------- guidance


def guide(state: MissileState, aimpoint: Vec3) -> Vec3:
    """Pure pursuit: point straight at the aimpoint (hold heading if already there)."""
    los = aimpoint - state.position
    if los.norm() < 1e-9:
        return state.heading
    return los.normalized()


def adapt_to_jamming(snr_history: Sequence[float], state: MissileState) -> GuidanceMode:
    """Trip into an evasive weave when the recent seeker SNR has collapsed."""
    if (
        state.guidance_mode is GuidanceMode.TERMINAL_HOMING
        and len(snr_history) >= WEAVE_WINDOW
        and float(np.mean(snr_history[-WEAVE_WINDOW:])) < WEAVE_SNR_THRESHOLD_DB
    ):
        return GuidanceMode.EVASIVE_REROUTE
    return state.guidance_mode


def weave_heading(base: Vec3, weave_step: int) -> Vec3:
    """Commanded heading during the weave: +20 deg on even steps, -20 deg on odd ones."""
    sign = 1.0 if weave_step % 2 == 0 else -1.0
    return rotate_about_vertical(base, sign * math.radians(WEAVE_ANGLE_DEG))


# --------------------------------------------------------------------------- training


def train_seeker(
    seed: int = 20240611,
    iterations: int = 2000,
    learning_rate: float = 0.05,
    hidden: int = DEFAULT_HIDDEN,
    template=DEFAULT_TEMPLATE,
    batch: int = 64,
    margin: float = 1.0,
    positive_noise: float = 0.1,
) -> SeekerNet:
    """Fit the seeker by SGD on a hinge margin between the site signature and random features.

    Positives are the site's signature at a random temperature in [20, 50] degC with
    Gaussian jitter; negatives are uniform on [0, 1]^6.  Deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    net = SeekerNet.random(rng, hidden)
    W1, b1, w2, b2 = net.W1.copy(), net.b1.copy(), net.w2.copy(), net.b2
    base = np.array(template, dtype=np.float64)
    for _ in range(iterations):
        temps = rng.uniform(20.0, 50.0, batch)
        pos = np.tile(base, (batch, 1))
        pos[:, 0] *= 1.0 + THERMAL_GAIN_PER_DEGC * (temps - 25.0)
        pos += rng.normal(0.0, positive_noise, pos.shape)
        neg = rng.uniform(0.0, 1.0, (batch, N_FEATURES))

        hp = np.tanh(pos @ W1.T + b1)
        hn = np.tanh(neg @ W1.T + b1)
        sp = hp @ w2 + b2
        sn = hn @ w2 + b2
        active = ((margin - (sp - sn)) > 0).astype(np.float64)
        if not np.any(active):
            continue
        # d loss / d sp = -1, d loss / d sn = +1 for active pairs; mean over batch
        gp = -active / batch
        gn = active / batch
        g_w2 = hp.T @ gp + hn.T @ gn
        g_b2 = gp.sum() + gn.sum()
        dp = np.outer(gp, w2) * (1.0 - hp**2)
        dn = np.outer(gn, w2) * (1.0 - hn**2)
        g_W1 = dp.T @ pos + dn.T @ neg
        g_b1 = dp.sum(axis=0) + dn.sum(axis=0)
        W1 -= learning_rate * g_W1
        b1 -= learning_rate * g_b1
        w2 -= learning_rate * g_w2
        b2 -= learning_rate * g_b2
    return SeekerNet(W1, b1, w2, float(b2))


def save_weights(net: SeekerNet, path) -> None:
    lines = [f"# seeker-weights v{ASSET_VERSION} hidden={net.hidden} n={net.n_params}"]
    lines += [repr(float(v)) for v in net.to_flat()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_weights(path=DEFAULT_WEIGHTS_PATH) -> SeekerNet:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# seeker-weights v"):
        raise ValueError(f"{path}: missing seeker-weights header")
    fields = dict(kv.split("=") for kv in text[0].split()[3:])
    version = int(text[0].split()[2].lstrip("v"))
    if version != ASSET_VERSION:
        raise ValueError(f"{path}: unsupported asset version {version}")
    hidden, n = int(fields["hidden"]), int(fields["n"])
    values = [float(v) for v in text[1:] if v.strip()]
    if len(values) != n:
        raise ValueError(f"{path}: expected {n} values, found {len(values)}")
    return SeekerNet.from_flat(values, hidden)
