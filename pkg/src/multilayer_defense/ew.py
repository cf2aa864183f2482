"""Jamming emission, environmental attenuation, propagation and received-signal composition.

Signals are power envelopes in dBm; no time-domain waveform is synthesized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from .core import EnvironmentState

SPEED_OF_LIGHT = 299_792_458.0
NO_JAMMING = -math.inf


@dataclass(frozen=True)
class EWConstants:
    k_temp: float = 0.02
    k_humidity: float = 0.15
    k_clutter: float = 0.5
    f_ref_hz: float = 1e10
    noise_floor_dbm: float = -100.0
    noise_sd_db: float = 1.0
    quality_midpoint_db: float = 10.0
    quality_scale_db: float = 3.0


DEFAULT_EW = EWConstants()


class WaveformClass(Enum):
    BARRAGE = "barrage"
    SPOT = "spot"
    SWEEP = "sweep"


@dataclass(frozen=True)
class JammingEmission:
    center_freq_hz: float
    tx_power_dbm: float
    waveform_class: WaveformClass = WaveformClass.SPOT
    active: bool = True

    def __post_init__(self):
        if not 1e9 <= self.center_freq_hz <= 4e10:
            raise ValueError(f"center frequency {self.center_freq_hz} Hz outside [1e9, 4e10]")
        if self.active and not 0.0 <= self.tx_power_dbm <= 90.0:
            raise ValueError(f"tx power {self.tx_power_dbm} dBm outside [0, 90]")


@dataclass(frozen=True)
class ReceivedSignalReport:
    signal_dbm: float
    jamming_dbm: float
    noise_dbm: float
    snr_db: float

    @property
    def interference_dbm(self) -> float:
        return power_sum_dbm(self.jamming_dbm, self.noise_dbm)

    @property
    def composite_dbm(self) -> float:
        """Total received power of signal + jamming + noise."""
        if self.jamming_dbm == -math.inf and self.noise_dbm == -math.inf:
            return self.signal_dbm
        return power_sum_dbm(self.signal_dbm, self.jamming_dbm, self.noise_dbm)


def power_sum_dbm(*levels_dbm: float) -> float:
    """Add powers given in dBm in the linear (milliwatt) domain."""
    finite = [p for p in levels_dbm if p != -math.inf]
    if not finite:
        return -math.inf
    if len(finite) == 1:
        return finite[0]
    top = max(finite)
    # factor out the largest term to keep 10**(x/10) in range
    return top + 10.0 * math.log10(sum(10.0 ** ((p - top) / 10.0) for p in finite))


def attenuation(freq_hz: float, env: EnvironmentState, constants: EWConstants = DEFAULT_EW) -> float:
    """Environmental amplitude gain in (0, 1].

    Heat above 25 degC and humidity (scaled by frequency) attenuate; cluttered terrain
    amplifies both losses.  Gain is exactly 1 at T <= 25 degC and zero humidity.
    """
    if freq_hz <= 0:
        raise ValueError("frequency must be positive")
    c = constants
    loss = c.k_temp * max(0.0, env.temperature_c - 25.0) / 10.0
    loss += c.k_humidity * env.humidity * (freq_hz / c.f_ref_hz)
    loss *= 1.0 + c.k_clutter * (1.0 - env.terrain_openness)
    return math.exp(-loss)


def free_space_path_loss_db(range_m: float, freq_hz: float) -> float:
    if range_m <= 0:
        raise ValueError("range must be positive")
    return 20.0 * math.log10(4.0 * math.pi * range_m * freq_hz / SPEED_OF_LIGHT)


def received_power_dbm(
    tx_power_dbm: float,
    freq_hz: float,
    env: EnvironmentState,
    range_m: float,
    constants: EWConstants = DEFAULT_EW,
) -> float:
    """Power arriving at the seeker from an isotropic emitter ``range_m`` away."""
    gain = attenuation(freq_hz, env, constants)
    return tx_power_dbm - free_space_path_loss_db(range_m, freq_hz) + 20.0 * math.log10(gain)


def jamming_power_at_seeker(
    emission: JammingEmission,
    env: EnvironmentState,
    range_m: float,
    constants: EWConstants = DEFAULT_EW,
) -> float:
    if not emission.active:
        return NO_JAMMING
    return received_power_dbm(emission.tx_power_dbm, emission.center_freq_hz, env, range_m, constants)


def compose_received(signal_dbm: float, jamming_dbm: float, noise_dbm: float) -> ReceivedSignalReport:
    """Combine the wanted signal with jamming and noise; interferers add in linear power."""
    if not math.isfinite(signal_dbm):
        raise ValueError("signal power must be finite")
    interference = power_sum_dbm(jamming_dbm, noise_dbm)
    snr = signal_dbm - interference
    return ReceivedSignalReport(signal_dbm, jamming_dbm, noise_dbm, snr)


def sample_noise_dbm(rng: np.random.Generator, constants: EWConstants = DEFAULT_EW) -> float:
    return constants.noise_floor_dbm + constants.noise_sd_db * float(rng.standard_normal())


def detection_quality(snr_db: float, constants: EWConstants = DEFAULT_EW) -> float:
    """Logistic map from SNR to sensing fidelity in [0, 1]."""
    z = (snr_db - constants.quality_midpoint_db) / constants.quality_scale_db
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def detection_quality_array(snr_db, constants: EWConstants = DEFAULT_EW) -> np.ndarray:
    """Vectorized ``detection_quality``."""
    z = (np.asarray(snr_db, dtype=np.float64) - constants.quality_midpoint_db) / constants.quality_scale_db
    return expit(z)
