"""Path loss, Rayleigh fading with Doppler evolution, and receiver noise.

Every link in a scenario is modelled as a deterministic large-scale amplitude
gain times a set of time-correlated complex Gaussian taps.  Temporal evolution
is first-order Gauss-Markov with the step correlation matched to the Clarke
autocorrelation J0(2*pi*f_d*dt), so a static link (zero Doppler) never changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j0

SPEED_OF_LIGHT_MPS = 2.99792458e8

# Clarke/Jakes rule of thumb for the coherence time, T_c = 0.423 / f_d.
COHERENCE_FACTOR = 0.423


class GeometryError(ValueError):
    """Non-physical link geometry (e.g. non-positive distance)."""


class ProfileError(ValueError):
    """Inconsistent multipath profile definition."""


@dataclass(frozen=True)
class LinkGeometry:
    """Large-scale description of one radio link.

    distance_m          transmitter-receiver separation [m]
    path_loss_exponent  amplitude decay exponent, gain ~ d**(-exponent)
    relative_speed_mps  relative speed between the endpoints [m/s]
    carrier_hz          carrier frequency [Hz], sets the Doppler scale
    """

    distance_m: float
    path_loss_exponent: float = 2.0
    relative_speed_mps: float = 0.0
    carrier_hz: float = 9.0e8

    def __post_init__(self):
        if self.distance_m <= 0:
            raise GeometryError(f"distance_m must be > 0, got {self.distance_m}")
        if self.relative_speed_mps < 0:
            raise GeometryError("relative_speed_mps must be >= 0")
        if self.carrier_hz <= 0:
            raise GeometryError("carrier_hz must be > 0")

    @property
    def doppler_hz(self) -> float:
        return self.relative_speed_mps * self.carrier_hz / SPEED_OF_LIGHT_MPS


def path_loss_gain(geometry: LinkGeometry) -> float:
    """Deterministic amplitude gain 1e-2 * d**(-exponent) scaling the fading taps."""
    return 1e-2 * geometry.distance_m ** (-geometry.path_loss_exponent)


def coherence_time_s(geometry: LinkGeometry) -> float:
    """Clarke coherence time 0.423/f_d; +inf for a static link."""
    fd = geometry.doppler_hz
    if fd == 0.0:
        return math.inf
    return COHERENCE_FACTOR / fd


@dataclass(frozen=True)
class MultipathProfile:
    """Sparse tap layout with a fixed amplitude ladder.

    Tap phases (and Rayleigh magnitudes) are randomized per drop by the
    FadingProcess; the profile only pins delays and relative amplitudes.
    """

    name: str
    tap_delays_samples: tuple[int, ...]
    tap_amplitudes: tuple[float, ...]

    def __post_init__(self):
        if len(self.tap_delays_samples) != len(self.tap_amplitudes):
            raise ProfileError("delays and amplitudes must have equal length")
        if len(self.tap_delays_samples) == 0:
            raise ProfileError("profile needs at least one tap")
        if any(d < 0 for d in self.tap_delays_samples):
            raise ProfileError("tap delays must be nonnegative")
        if len(set(self.tap_delays_samples)) != len(self.tap_delays_samples):
            raise ProfileError("tap delays must be unique")
        if any(a <= 0 for a in self.tap_amplitudes):
            raise ProfileError("tap amplitudes must be positive")

    @property
    def n_taps(self) -> int:
        return len(self.tap_delays_samples)

    @property
    def max_delay_samples(self) -> int:
        return max(self.tap_delays_samples)


def _amplitude_ladder(n_taps: int, step_db: float = 2.0) -> tuple[float, ...]:
    # Fixed ladder decaying step_db per tap, normalized to unit total power.
    amps = np.array([10.0 ** (-step_db * k / 20.0) for k in range(n_taps)])
    amps /= np.sqrt(np.sum(amps**2))
    return tuple(float(a) for a in amps)


def flat_profile() -> MultipathProfile:
    return MultipathProfile("flat", (0,), (1.0,))


def rural_profile() -> MultipathProfile:
    return MultipathProfile("rural", (0, 1, 2, 3), _amplitude_ladder(4))


def urban_profile() -> MultipathProfile:
    return MultipathProfile("urban", tuple(range(12)), _amplitude_ladder(12))


PROFILES = {
    "flat": flat_profile,
    "rural": rural_profile,
    "urban": urban_profile,
}


@dataclass(frozen=True)
class NoiseModel:
    """Additive receiver noise, total complex variance set in dBm."""

    noise_power_dbm: float = -30.0

    @property
    def variance_w(self) -> float:
        return 10.0 ** ((self.noise_power_dbm - 30.0) / 10.0)


def awgn(noise: NoiseModel, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. circularly symmetric complex Gaussian samples with total variance sigma^2."""
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    sigma = math.sqrt(noise.variance_w / 2.0)
    return sigma * (rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples))


class FadingProcess:
    """Time-correlated complex tap gains for one link.

    Each tap is circularly symmetric complex Gaussian with standard deviation
    path_loss_gain * tap_amplitude.  evolve() advances all taps by one
    Gauss-Markov step whose correlation equals J0(2*pi*f_d*dt).
    """

    def __init__(self, geometry: LinkGeometry, profile: MultipathProfile,
                 rng: np.random.Generator):
        self.geometry = geometry
        self.profile = profile
        self.rng = rng
        self._scales = path_loss_gain(geometry) * np.asarray(profile.tap_amplitudes)
        self.current_taps = self._draw()

    def _draw(self) -> np.ndarray:
        n = self.profile.n_taps
        g = (self.rng.standard_normal(n) + 1j * self.rng.standard_normal(n)) / math.sqrt(2.0)
        return self._scales * g

    def redraw(self) -> "FadingProcess":
        """Fresh independent drop (new Monte Carlo realization)."""
        self.current_taps = self._draw()
        return self

    def evolve(self, delta_t_s: float) -> "FadingProcess":
        """Advance the taps by delta_t seconds; marginal statistics are preserved."""
        if delta_t_s < 0:
            raise ValueError("delta_t_s must be >= 0")
        fd = self.geometry.doppler_hz
        if delta_t_s == 0.0 or fd == 0.0:
            return self
        rho = float(j0(2.0 * math.pi * fd * delta_t_s))
        fresh = self._draw()
        self.current_taps = rho * self.current_taps + math.sqrt(1.0 - rho * rho) * fresh
        return self

    @property
    def is_static(self) -> bool:
        return self.geometry.doppler_hz == 0.0

    @property
    def max_delay_samples(self) -> int:
        return self.profile.max_delay_samples

    def dense_taps(self) -> np.ndarray:
        """Tap gains on a dense delay grid [0..max_delay], for convolution."""
        dense = np.zeros(self.profile.max_delay_samples + 1, dtype=complex)
        dense[list(self.profile.tap_delays_samples)] = self.current_taps
        return dense

    def mean_power_gain(self) -> float:
        """Expected total power gain E|h|^2 of the link (sum over taps)."""
        return float(np.sum(self._scales**2))


def evolve(process: FadingProcess, delta_t_s: float) -> FadingProcess:
    """Functional wrapper around FadingProcess.evolve."""
    return process.evolve(delta_t_s)


class StaticTaps:
    """Deterministic channel (e.g. a short line-of-sight hop); never evolves."""

    def __init__(self, dense_taps: np.ndarray | complex):
        self._dense = np.atleast_1d(np.asarray(dense_taps, dtype=complex))

    def evolve(self, delta_t_s: float) -> "StaticTaps":
        return self

    @property
    def is_static(self) -> bool:
        return True

    @property
    def max_delay_samples(self) -> int:
        return len(self._dense) - 1

    def dense_taps(self) -> np.ndarray:
        return self._dense.copy()


class TapsReplay:
    """Replays a recorded per-symbol tap sequence (shared-channel eavesdropper)."""

    def __init__(self, per_symbol_taps: list[np.ndarray]):
        if not per_symbol_taps:
            raise ValueError("need at least one taps snapshot")
        self._snapshots = per_symbol_taps
        self._idx = 0

    def evolve(self, delta_t_s: float) -> "TapsReplay":
        self._idx = min(self._idx + 1, len(self._snapshots) - 1)
        return self

    @property
    def is_static(self) -> bool:
        return len(self._snapshots) == 1

    @property
    def max_delay_samples(self) -> int:
        return len(self._snapshots[0]) - 1

    def dense_taps(self) -> np.ndarray:
        return self._snapshots[self._idx].copy()
