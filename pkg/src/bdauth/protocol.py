"""Challenge-response authentication over harvested-power ratios.

One-way flow between a verifier and a prover:

  1. The verifier backscatters a fresh random vector interleaved element-wise
     with its own stored key.  The prover reads one harvested-power value per
     element; the ratio of paired readings equals random/key because channel,
     ambient power, and harvester efficiency cancel.
  2. The prover recovers the random vector using its stored copy of the
     verifier's key, then backscatters the estimate interleaved with its own
     key.
  3. The verifier reconstructs the prover's key from the return ratios and
     its own random vector, and accepts iff the L1 distance to the stored
     copy is below a threshold.

Interleaving keeps each ratio pair one OFDM symbol apart, so both stages sit
far inside the channel coherence time even at vehicular speeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import FadingProcess, NoiseModel, coherence_time_s
from .phy import (BackscatterLink, OfdmConfig, readings_to_watts,
                  transmit_bd_message)

B_MIN = 0.1
KEY_LENGTH_MIN = 5
KEY_LENGTH_MAX = 30


class ProtocolError(ValueError):
    """Protocol contract violation (bad key, unknown device, wrong stage)."""


class DegenerateMeasurementError(ProtocolError):
    """A harvested-power reading of zero: no signal, session cannot proceed."""


# ---------------------------------------------------------------------------
# Keys and registry
# ---------------------------------------------------------------------------

@dataclass
class PidKey:
    """Device fingerprint: a vector of power-domain reflection coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim != 1:
            raise ProtocolError("key must be one-dimensional")
        if not (KEY_LENGTH_MIN <= len(self.coeffs) <= KEY_LENGTH_MAX):
            raise ProtocolError(
                f"key length must lie in [{KEY_LENGTH_MIN}, {KEY_LENGTH_MAX}]")
        if np.any(self.coeffs < B_MIN) or np.any(self.coeffs > 1.0):
            raise ProtocolError(f"key coefficients must lie in [{B_MIN}, 1]")

    def __len__(self) -> int:
        return len(self.coeffs)

    def l1_distance(self, other: "PidKey | np.ndarray") -> float:
        other_coeffs = other.coeffs if isinstance(other, PidKey) else np.asarray(other)
        if len(other_coeffs) != len(self.coeffs):
            raise ProtocolError("keys are comparable only at equal length")
        return float(np.sum(np.abs(self.coeffs - other_coeffs)))

    def copy(self) -> "PidKey":
        return PidKey(self.coeffs.copy())


def random_key(length: int, rng: np.random.Generator) -> PidKey:
    """Provision a fresh fingerprint, uniform over the coefficient range."""
    return PidKey(rng.uniform(B_MIN, 1.0, length))


def generate_random_number(length: int, rng: np.random.Generator) -> np.ndarray:
    """Fresh per-session challenge vector, element-wise uniform over [B_MIN, 1]."""
    return rng.uniform(B_MIN, 1.0, length)


@dataclass
class DeviceRegistry:
    """Shared key store held by one device: reference number -> fingerprint."""

    own_id: str
    entries: dict[str, PidKey]

    def __post_init__(self):
        if self.own_id not in self.entries:
            raise ProtocolError("registry must contain the owner's own key")

    def key_of(self, ref: str) -> PidKey:
        if ref not in self.entries:
            raise ProtocolError(f"unknown device reference {ref!r}")
        return self.entries[ref]

    @property
    def own_key(self) -> PidKey:
        return self.entries[self.own_id]

    def apply_key_update(self, ref: str, session_random: np.ndarray) -> None:
        """Apply a broadcast (reference, random vector) update to a stored key."""
        self.entries[ref] = key_update(self.key_of(ref), session_random)


def key_update(key: PidKey, session_random: np.ndarray) -> PidKey:
    """Post-authentication refresh: element-wise geometric mean of key and random.

    The result always lies between min and max of the inputs, so coefficients
    stay inside [B_MIN, 1].
    """
    session_random = np.asarray(session_random, dtype=float)
    if len(session_random) != len(key):
        raise ProtocolError("key and random vector must have equal length")
    return PidKey(np.sqrt(key.coeffs * session_random))


def broadcast_key_update(registries, ref: str, session_random: np.ndarray) -> None:
    """Propagate one device's update to every registry copy."""
    for reg in registries:
        reg.apply_key_update(ref, session_random)


# ---------------------------------------------------------------------------
# Session state
# ---------------------------------------------------------------------------

STAGE_CHALLENGE_SENT = "challenge_sent"
STAGE_RESPONDED = "responded"
STAGE_DECIDED = "decided"


@dataclass(frozen=True)
class AuthThreshold:
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ProtocolError("delta must be > 0")


@dataclass
class AuthDecision:
    accept: bool
    l1_distance: float | None
    cause: str | None = None


@dataclass
class AuthSession:
    """State of one challenge-response exchange."""

    verifier_id: str
    prover_id: str
    d_true: np.ndarray
    stage: str = STAGE_CHALLENGE_SENT
    d_estimated: np.ndarray | None = None
    k_estimated: np.ndarray | None = None
    p1: np.ndarray | None = None
    p2: np.ndarray | None = None
    p3: np.ndarray | None = None
    p4: np.ndarray | None = None
    decision: bool | None = None
    l1_distance: float | None = None
    cause: str | None = None
    coherence_ok: bool = True

    def transcript_lines(self, attacker_kind: str = "") -> list[str]:
        """Audit record, one line per stage."""
        def vec(v):
            return "" if v is None else ",".join(f"{x:.6g}" for x in np.atleast_1d(v))

        suffix = f"|attacker={attacker_kind}" if attacker_kind else ""
        lines = [
            f"stage=challenge|verifier={self.verifier_id}|prover={self.prover_id}"
            f"|p1={vec(self.p1)}|p2={vec(self.p2)}|d_true={vec(self.d_true)}{suffix}",
        ]
        if self.stage in (STAGE_RESPONDED, STAGE_DECIDED):
            lines.append(
                f"stage=response|p3={vec(self.p3)}|p4={vec(self.p4)}"
                f"|d_estimated={vec(self.d_estimated)}{suffix}")
        if self.stage == STAGE_DECIDED:
            lines.append(
                f"stage=decision|accept={self.decision}|l1={vec(self.l1_distance)}"
                f"|k_estimated={vec(self.k_estimated)}|cause={self.cause or ''}{suffix}")
        return lines


def write_transcript(path, sessions, attacker_kind: str = "") -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in sessions:
            for line in s.transcript_lines(attacker_kind):
                f.write(line + "\n")


# ---------------------------------------------------------------------------
# Channel environment for one verifier/prover pair
# ---------------------------------------------------------------------------

@dataclass
class SessionEnv:
    """Fading processes and receiver parameters shared by one device pair.

    The inward link is reciprocal: both directions use the same process.
    """

    rfs_to_verifier: FadingProcess
    rfs_to_prover: FadingProcess
    inward: FadingProcess
    noise: NoiseModel
    verifier_efficiency: float = 0.7
    prover_efficiency: float = 0.7
    timing_offset_samples: int = 0
    response_delay_s: float | None = None  # None: one field duration

    def challenge_link(self) -> BackscatterLink:
        return BackscatterLink(self.rfs_to_verifier, self.inward,
                               self.rfs_to_prover, self.noise,
                               self.prover_efficiency)

    def response_link(self) -> BackscatterLink:
        return BackscatterLink(self.rfs_to_prover, self.inward,
                               self.rfs_to_verifier, self.noise,
                               self.verifier_efficiency)

    def swapped(self) -> "SessionEnv":
        """Role-swapped view on the same processes (for the reverse direction)."""
        return SessionEnv(self.rfs_to_prover, self.rfs_to_verifier, self.inward,
                          self.noise, self.prover_efficiency,
                          self.verifier_efficiency, self.timing_offset_samples,
                          self.response_delay_s)

    def evolve_all(self, delta_t_s: float) -> None:
        for proc in (self.rfs_to_verifier, self.rfs_to_prover, self.inward):
            proc.evolve(delta_t_s)

    def redraw_all(self) -> None:
        for proc in (self.rfs_to_verifier, self.rfs_to_prover, self.inward):
            proc.redraw()

    def min_coherence_time_s(self) -> float:
        return min(coherence_time_s(p.geometry)
                   for p in (self.rfs_to_verifier, self.rfs_to_prover, self.inward))


def _interleave(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    out = np.empty(2 * len(first))
    out[0::2] = first
    out[1::2] = second
    return out


def _stage_duration_s(length: int, config: OfdmConfig) -> float:
    n_sym = 2 * length + 1 + (1 if config.pilot_present else 0)
    return n_sym * config.symbol_duration_s


def _default_gap_s(env: SessionEnv, length: int, config: OfdmConfig) -> float:
    if env.response_delay_s is not None:
        return env.response_delay_s
    return length * config.symbol_duration_s


# ---------------------------------------------------------------------------
# Protocol operations
# ---------------------------------------------------------------------------

def challenge(verifier_registry: DeviceRegistry, prover_id: str, env: SessionEnv,
              config: OfdmConfig, rng: np.random.Generator,
              collect_air: bool = False):
    """Challenge stage: transmit the random vector and the verifier's key.

    Returns (session, (p1, p2)) with the prover-side per-element readings,
    plus the on-air capture when collect_air is set.
    """
    verifier_key = verifier_registry.own_key
    if prover_id not in verifier_registry.entries:
        raise ProtocolError(f"prover {prover_id!r} not in the verifier registry")
    length = len(verifier_key)
    d_true = generate_random_number(length, rng)

    message = _interleave(d_true, verifier_key.coeffs)
    result = transmit_bd_message(message, env.challenge_link(), config, rng,
                                 env.timing_offset_samples, collect_air=collect_air)
    readings, air = result if collect_air else (result, None)
    watts = readings_to_watts(readings)
    p1, p2 = watts[0::2], watts[1::2]

    session = AuthSession(verifier_registry.own_id, prover_id, d_true,
                          p1=p1, p2=p2)
    session.coherence_ok = _stage_duration_s(length, config) < env.min_coherence_time_s()
    if collect_air:
        return session, (p1, p2), air
    return session, (p1, p2)


def prover_estimate_random(p1: np.ndarray, p2: np.ndarray,
                           stored_verifier_key: PidKey) -> np.ndarray:
    """Recover the challenge vector from the paired power readings."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if len(p1) != len(stored_verifier_key) or len(p2) != len(stored_verifier_key):
        raise ProtocolError("reading vectors must match the key length")
    if np.any(p2 == 0.0):
        raise DegenerateMeasurementError("zero harvested power in the key field")
    return np.clip((p1 / p2) * stored_verifier_key.coeffs, 0.0, 1.0)


def respond(prover_registry: DeviceRegistry, session: AuthSession, env: SessionEnv,
            config: OfdmConfig, rng: np.random.Generator,
            collect_air: bool = False):
    """Response stage: transmit the recovered random vector and the prover's key."""
    if session.stage != STAGE_CHALLENGE_SENT:
        raise ProtocolError(f"respond requires stage {STAGE_CHALLENGE_SENT}")
    if session.d_estimated is None:
        raise ProtocolError("d_estimated must be computed before responding")
    prover_key = prover_registry.own_key

    env.evolve_all(_default_gap_s(env, len(prover_key), config))
    message = _interleave(session.d_estimated, prover_key.coeffs)
    result = transmit_bd_message(message, env.response_link(), config, rng,
                                 env.timing_offset_samples, collect_air=collect_air)
    readings, air = result if collect_air else (result, None)
    watts = readings_to_watts(readings)
    session.p3, session.p4 = watts[0::2], watts[1::2]
    session.stage = STAGE_RESPONDED
    if collect_air:
        return (session.p3, session.p4), air
    return session.p3, session.p4


def verifier_estimate_key(p3: np.ndarray, p4: np.ndarray,
                          d_true: np.ndarray) -> np.ndarray:
    """Reconstruct the prover's key from the return readings and the true random."""
    p3 = np.asarray(p3, dtype=float)
    p4 = np.asarray(p4, dtype=float)
    if np.any(p3 == 0.0):
        raise DegenerateMeasurementError("zero harvested power in the response field")
    return np.clip(d_true * p4 / p3, 0.0, 1.0)


def verify(k_estimated: np.ndarray, stored_prover_key: PidKey,
           threshold: AuthThreshold) -> AuthDecision:
    """L1 threshold test; accept means authentication success."""
    distance = stored_prover_key.l1_distance(k_estimated)
    return AuthDecision(distance <= threshold.delta, distance)


def _finalize(session: AuthSession, decision: AuthDecision) -> AuthDecision:
    session.stage = STAGE_DECIDED
    session.decision = decision.accept
    session.l1_distance = decision.l1_distance
    session.cause = decision.cause
    return decision


def one_way_authenticate(verifier_registry: DeviceRegistry,
                         prover_registry: DeviceRegistry, env: SessionEnv,
                         config: OfdmConfig, rng: np.random.Generator,
                         threshold: AuthThreshold
                         ) -> tuple[AuthDecision, AuthSession]:
    """Full honest one-way run: challenge, estimate, respond, verify."""
    session, (p1, p2) = challenge(verifier_registry, prover_registry.own_id,
                                  env, config, rng)
    try:
        session.d_estimated = prover_estimate_random(
            p1, p2, prover_registry.key_of(verifier_registry.own_id))
        respond(prover_registry, session, env, config, rng)
        session.k_estimated = verifier_estimate_key(session.p3, session.p4,
                                                    session.d_true)
    except DegenerateMeasurementError as err:
        return _finalize(session, AuthDecision(False, None, str(err))), session
    decision = verify(session.k_estimated,
                      verifier_registry.key_of(prover_registry.own_id), threshold)
    return _finalize(session, decision), session


def mutual_authenticate(registry_i: DeviceRegistry, registry_j: DeviceRegistry,
                        env: SessionEnv, config: OfdmConfig,
                        rng: np.random.Generator, threshold: AuthThreshold
                        ) -> tuple[AuthDecision, AuthDecision]:
    """Run one-way authentication in both directions with fresh randoms."""
    dec_ij, _ = one_way_authenticate(registry_i, registry_j, env, config, rng,
                                     threshold)
    env.evolve_all(_default_gap_s(env, len(registry_i.own_key), config))
    dec_ji, _ = one_way_authenticate(registry_j, registry_i, env.swapped(),
                                     config, rng, threshold)
    return dec_ij, dec_ji


def identify_device(k_estimated: np.ndarray, registry: DeviceRegistry,
                    candidates=None) -> str:
    """Reference number of the stored key closest (L1) to the estimate.

    Ties break toward the lowest reference number.  candidates restricts the
    search to a subset of the registry (e.g. the claimable device pool).
    """
    refs = sorted(registry.entries if candidates is None else candidates)
    if not refs:
        raise ProtocolError("no candidate devices to identify against")
    best_ref = None
    best_dist = np.inf
    for ref in refs:
        dist = registry.key_of(ref).l1_distance(k_estimated)
        if dist < best_dist:
            best_dist = dist
            best_ref = ref
    return best_ref
