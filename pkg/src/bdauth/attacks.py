"""Executable attack models against the power-ratio authentication scheme.

Four active/passive adversaries:

  impersonation  presents a stolen reference number but runs the protocol
                 with guessed keys
  eavesdropping  overhears challenge transmissions; a far ("naive") listener
                 only learns the random/key ratio, a near ("smart") listener
                 shares the victim's downlink channel and can invert powers
  replay         re-transmits a recorded response into a fresh session
  counterfeiting forges response fields from the overheard ratio and guessed
                 key factors

plus the leaked-information metric: histogram mutual information between the
true key population and whatever the attacker inferred, normalized by the
true-key entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (SPEED_OF_LIGHT_MPS, FadingProcess, LinkGeometry,
                      NoiseModel, StaticTaps, TapsReplay, path_loss_gain)
from .phy import (AirCapture, BackscatterLink, OfdmConfig, pilot_loads,
                  readings_to_watts, receive_power_readings,
                  transmit_bd_message, _symbol_from_loads)
from .protocol import (B_MIN, AuthDecision, AuthThreshold, DeviceRegistry,
                       SessionEnv, challenge, one_way_authenticate,
                       verifier_estimate_key, verify, _interleave)

ATTACK_KINDS = ("impersonation", "eavesdrop_naive", "eavesdrop_smart",
                "replay", "counterfeit")


class AttackConfigError(ValueError):
    """Attacker placement inconsistent with its kind."""


class EstimatorError(ValueError):
    """Too few samples for the requested mutual-information estimate."""


def coherence_distance_m(carrier_hz: float) -> float:
    """Half a carrier wavelength: the near/far eavesdropper boundary."""
    return SPEED_OF_LIGHT_MPS / carrier_hz / 2.0


@dataclass(frozen=True)
class AttackerConfig:
    kind: str
    distance_to_victim_m: float = 0.5
    knows_procedure: bool = True
    carrier_hz: float = 9.0e8

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise AttackConfigError(f"unknown attack kind {self.kind!r}")
        d_half = coherence_distance_m(self.carrier_hz)
        if self.kind == "eavesdrop_smart" and self.distance_to_victim_m >= d_half:
            raise AttackConfigError(
                f"smart eavesdropper must sit within {d_half:.4f} m")
        if self.kind == "eavesdrop_naive" and self.distance_to_victim_m <= d_half:
            raise AttackConfigError(
                f"naive eavesdropper must sit beyond {d_half:.4f} m")


@dataclass
class EavesdropObservation:
    """What one eavesdropper extracted from a challenge transmission."""

    v1: np.ndarray
    v2: np.ndarray
    channel_estimate: float | None = None     # downlink power gain, smart only
    inferred_key: np.ndarray | None = None
    inferred_random: np.ndarray | None = None

    @property
    def ratio(self) -> np.ndarray:
        return self.v1 / self.v2


@dataclass
class AttackEnv:
    """Attacker-side channels for overhearing or injecting signals."""

    rfs_to_attacker: FadingProcess | TapsReplay
    victim_to_attacker: FadingProcess | StaticTaps
    noise: NoiseModel
    attacker_efficiency: float = 0.7


def make_naive_attack_env(distance_m: float, noise: NoiseModel,
                          rng: np.random.Generator, profile, carrier_hz: float = 9.0e8,
                          d_rfs_m: float = 3.0) -> AttackEnv:
    """Far eavesdropper: independent downlink, faded inward link to the victim."""
    return AttackEnv(
        FadingProcess(LinkGeometry(d_rfs_m, carrier_hz=carrier_hz), profile, rng),
        FadingProcess(LinkGeometry(distance_m, carrier_hz=carrier_hz), profile, rng),
        noise)


def make_smart_attack_env(distance_m: float, noise: NoiseModel, air: AirCapture,
                          carrier_hz: float = 9.0e8) -> AttackEnv:
    """Near eavesdropper: shares the victim's downlink, line-of-sight inward hop.

    The inward amplitude follows the deterministic path-loss law, clamped to
    a unit reflection at point-blank range.
    """
    gain = min(1.0, path_loss_gain(LinkGeometry(max(distance_m, 1e-6),
                                                carrier_hz=carrier_hz)))
    return AttackEnv(TapsReplay([t.copy() for t in air.tx_downlink_taps]),
                     StaticTaps(np.array([gain], dtype=complex)), noise)


# ---------------------------------------------------------------------------
# Eavesdropping
# ---------------------------------------------------------------------------

def _eavesdrop_readings(air: AirCapture, env: AttackEnv,
                        rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    readings = receive_power_readings(air, env.victim_to_attacker,
                                      env.rfs_to_attacker, env.noise,
                                      env.attacker_efficiency, rng)
    watts = readings_to_watts(readings)
    return watts[0::2], watts[1::2]


def naive_eavesdrop(air: AirCapture, env: AttackEnv,
                    rng: np.random.Generator) -> EavesdropObservation:
    """Far listener: measures both fields, learns only their ratio.

    One equation in two unknowns; no key estimate is produced.
    """
    v1, v2 = _eavesdrop_readings(air, env, rng)
    return EavesdropObservation(v1, v2)


def naive_key_guess(length: int, rng: np.random.Generator) -> np.ndarray:
    """Best a far listener can do: an uninformed uniform guess."""
    return rng.uniform(B_MIN, 1.0, length)


def smart_eavesdrop(air: AirCapture, env: AttackEnv, rng: np.random.Generator,
                    ambient_window_power: float | None = None
                    ) -> EavesdropObservation:
    """Near listener: estimates its downlink gain from the frame pilot, then
    inverts both field powers into key/random estimates.

    Needs the pilot waveform (public) and the ambient window power (assumed
    known to a co-located attacker); both are taken from the capture.
    """
    cfg = air.config
    if not cfg.pilot_present:
        raise AttackConfigError("smart eavesdropping needs the downlink pilot")
    if ambient_window_power is None:
        ambient_window_power = air.ambient_window_power()

    # Downlink power-gain estimate from the known pilot symbol.
    n_t = cfg.symbol_len
    pilot_rx = np.convolve(air.frame_samples[:n_t],
                           env.rfs_to_attacker.dense_taps())[:n_t]
    from .channel import awgn
    pilot_rx = pilot_rx + awgn(env.noise, n_t, rng)
    pilot_ref = _symbol_from_loads(pilot_loads(cfg.n_subcarriers), cfg)
    win = slice(0, cfg.cp_len)
    gain_est = float(np.mean(np.abs(pilot_rx[win]) ** 2)
                     / np.mean(np.abs(pilot_ref[win]) ** 2))

    v1, v2 = _eavesdrop_readings(air, env, rng)
    denom = env.attacker_efficiency * gain_est * ambient_window_power
    inferred_random = np.clip(v1 / denom, 0.0, 1.0)
    inferred_key = np.clip(v2 / denom, 0.0, 1.0)
    return EavesdropObservation(v1, v2, gain_est, inferred_key, inferred_random)


# ---------------------------------------------------------------------------
# Active attacks
# ---------------------------------------------------------------------------

def impersonation_attempt(verifier_registry: DeviceRegistry, victim_id: str,
                          env: SessionEnv, config: OfdmConfig,
                          rng: np.random.Generator, threshold: AuthThreshold,
                          knows_keys: bool = False
                          ) -> tuple[AuthDecision, "np.ndarray | None"]:
    """Attacker claims the victim's reference number and runs the protocol.

    Without key knowledge every stored entry is replaced by a uniform guess;
    knows_keys=True is the sanity ceiling where the attacker plays honestly.
    """
    if knows_keys:
        attacker_registry = DeviceRegistry(
            victim_id, {ref: key.copy()
                        for ref, key in verifier_registry.entries.items()})
    else:
        length = len(verifier_registry.own_key)
        guesses = {ref: _guess_key(length, rng)
                   for ref in verifier_registry.entries}
        attacker_registry = DeviceRegistry(victim_id, guesses)
    decision, session = one_way_authenticate(verifier_registry,
                                             attacker_registry, env, config,
                                             rng, threshold)
    return decision, session.k_estimated


def _guess_key(length: int, rng: np.random.Generator):
    from .protocol import PidKey
    return PidKey(rng.uniform(B_MIN, 1.0, length))


@dataclass
class RecordedResponse:
    """Power-faithful recording of one response stage (what a replayer keeps)."""

    d_estimated: np.ndarray
    prover_key_coeffs: np.ndarray


def replay_attack(recorded: RecordedResponse, verifier_registry: DeviceRegistry,
                  victim_id: str, env: SessionEnv, attack_env: AttackEnv,
                  config: OfdmConfig, rng: np.random.Generator,
                  threshold: AuthThreshold,
                  reuse_random: np.ndarray | None = None
                  ) -> tuple[AuthDecision, np.ndarray]:
    """Replay a recorded response into a fresh challenge.

    The verifier issues a new challenge (fresh random vector unless
    reuse_random pins the old one, the mechanism-isolation control); the
    attacker answers with the recorded field levels over its own link.
    """
    session, _ = challenge(verifier_registry, victim_id, env, config, rng)
    if reuse_random is not None:
        session.d_true = np.asarray(reuse_random, dtype=float)

    message = _interleave(recorded.d_estimated, recorded.prover_key_coeffs)
    link = BackscatterLink(attack_env.rfs_to_attacker,
                           attack_env.victim_to_attacker,
                           env.rfs_to_verifier, env.noise,
                           env.verifier_efficiency)
    watts = readings_to_watts(transmit_bd_message(message, link, config, rng,
                                                  env.timing_offset_samples))
    k_est = verifier_estimate_key(watts[0::2], watts[1::2], session.d_true)
    decision = verify(k_est, verifier_registry.key_of(victim_id), threshold)
    return decision, k_est


def counterfeit_attack(verifier_registry: DeviceRegistry, victim_id: str,
                       env: SessionEnv, attack_env: AttackEnv,
                       config: OfdmConfig, rng: np.random.Generator,
                       threshold: AuthThreshold,
                       c_i: np.ndarray | None = None,
                       c_j: np.ndarray | None = None
                       ) -> tuple[AuthDecision, np.ndarray]:
    """Forge a response from the overheard challenge ratio and guess factors.

    The attacker eavesdrops the challenge, multiplies the measured ratio by
    its guess for the verifier key, and sends that with a guessed prover key.
    """
    session, _, air = challenge(verifier_registry, victim_id, env, config, rng,
                                collect_air=True)
    obs = naive_eavesdrop(air, attack_env, rng)
    length = len(session.d_true)
    if c_i is None:
        c_i = rng.uniform(B_MIN, 1.0, length)
    if c_j is None:
        c_j = rng.uniform(B_MIN, 1.0, length)

    forged_random = np.clip(obs.ratio * c_i, 0.0, 1.0)
    message = _interleave(forged_random, c_j)
    link = BackscatterLink(attack_env.rfs_to_attacker,
                           attack_env.victim_to_attacker,
                           env.rfs_to_verifier, env.noise,
                           env.verifier_efficiency)
    watts = readings_to_watts(transmit_bd_message(message, link, config, rng,
                                                  env.timing_offset_samples))
    k_est = verifier_estimate_key(watts[0::2], watts[1::2], session.d_true)
    decision = verify(k_est, verifier_registry.key_of(victim_id), threshold)
    return decision, k_est


# ---------------------------------------------------------------------------
# Leaked information
# ---------------------------------------------------------------------------

def mutual_information_bits(x: np.ndarray, y: np.ndarray, bins: int = 16,
                            value_range: tuple[float, float] = (0.0, 1.0)
                            ) -> tuple[float, float]:
    """Plug-in histogram estimate of (MI, H(x)) in bits over paired samples."""
    joint, _, _ = np.histogram2d(x, y, bins=bins,
                                 range=[value_range, value_range])
    p = joint / joint.sum()
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    nz = p > 0
    outer = np.outer(px, py)
    mi = float(np.sum(p[nz] * np.log2(p[nz] / outer[nz])))
    hx = float(-np.sum(px[px > 0] * np.log2(px[px > 0])))
    return mi, hx


def leaked_information(true_values: np.ndarray, inferred_values: np.ndarray,
                       bins: int = 16) -> float:
    """Normalized mutual information between true and inferred coefficients.

    Plug-in histogram estimator; requires at least 10 * bins**2 paired
    samples to keep the bias below a few percent of the key entropy.
    """
    x = np.asarray(true_values, dtype=float).reshape(-1)
    y = np.asarray(inferred_values, dtype=float).reshape(-1)
    if len(x) != len(y):
        raise EstimatorError("populations must be paired")
    if len(x) < 10 * bins * bins:
        raise EstimatorError(
            f"need at least {10 * bins * bins} paired samples, got {len(x)}")
    mi, hx = mutual_information_bits(x, y, bins)
    if hx <= 0:
        return 0.0
    return float(np.clip(mi / hx, 0.0, 1.0))
