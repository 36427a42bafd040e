"""Reference handshakes and cost models for the two comparison schemes.

Baseline 1 is a minimal XOR handshake (nonce, nonce XOR key): cheap, but a
transcript eavesdropper recovers the key with one XOR.  Baseline 2 answers a
nonce with a keyed one-way digest: secret-preserving but far more expensive
for a passive device.  Both are modelled just deeply enough to reproduce the
latency, power, and leaked-information comparisons.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .channel import LinkGeometry, NoiseModel, path_loss_gain
from .phy import OfdmConfig
from .protocol import AuthDecision

SCHEME_OURS = "ours"
SCHEME_BASELINE1 = "baseline1"
SCHEME_BASELINE2 = "baseline2"
SCHEMES = (SCHEME_OURS, SCHEME_BASELINE1, SCHEME_BASELINE2)

# One-way digest used by baseline 2; a config constant, not a contract.
DIGEST = hashlib.sha256


class CostModelError(ValueError):
    pass


@dataclass(frozen=True)
class BaselineCostModel:
    """Per-operation time and power constants for the latency/power accounting.

    Times are seconds per operation, powers milliwatts per authentication.
    Defaults keep the orderings hash >> decoding > xor.
    """

    t_tx_s: float = 8.0e-4          # one field transmission
    t_rand_s: float = 1.0e-5
    t_verify_s: float = 1.0e-5
    t_xor_s: float = 1.0e-6
    t_decoding_s: float = 1.0e-5
    t_hash_s: float = 1.0e-3
    t_gen_s: float = 1.0e-4
    p_decoding_mw: float = 0.03
    p_xor_mw: float = 0.01
    p_hash_mw: float = 7.5
    snr_target_db: float = 10.0

    def __post_init__(self):
        for name in ("t_tx_s", "t_rand_s", "t_verify_s", "t_xor_s",
                     "t_decoding_s", "t_hash_s", "t_gen_s",
                     "p_decoding_mw", "p_xor_mw"):
            if getattr(self, name) < 0:
                raise CostModelError(f"{name} must be nonnegative")
        if not (5.0 <= self.p_hash_mw <= 10.0):
            raise CostModelError("p_hash_mw must lie in [5, 10]")

    @classmethod
    def for_config(cls, ofdm: OfdmConfig, keylength: int, span: int = 1,
                   **overrides) -> "BaselineCostModel":
        """Derive the field transmission time from the OFDM numerology."""
        t_tx = keylength * span * ofdm.symbol_duration_s
        return cls(t_tx_s=t_tx, **overrides)


# ---------------------------------------------------------------------------
# Handshakes
# ---------------------------------------------------------------------------

@dataclass
class BaselineTranscript:
    """Wire messages exposed to any eavesdropper, plus operation counters."""

    messages: list[tuple[str, bytes]] = field(default_factory=list)
    op_counts: dict[str, int] = field(default_factory=dict)
    eavesdropper_key: bytes | None = None

    def count(self, op: str, amount: int = 1) -> None:
        self.op_counts[op] = self.op_counts.get(op, 0) + amount

    def message(self, label: str) -> bytes:
        for lab, data in self.messages:
            if lab == label:
                return data
        raise KeyError(label)


def random_key_bits(n_bytes: int, rng: np.random.Generator) -> bytes:
    return rng.integers(0, 256, n_bytes, dtype=np.uint8).tobytes()


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def baseline1_xor_auth(shared_key: bytes, rng: np.random.Generator,
                       eavesdropper: bool = False,
                       prover_key: bytes | None = None
                       ) -> tuple[AuthDecision, BaselineTranscript]:
    """Nonce / nonce-XOR-key handshake.

    The transcript carries both wire messages in the clear, so an
    eavesdropper recovers the key by XORing them (stored on the transcript
    when the flag is set).
    """
    if prover_key is None:
        prover_key = shared_key
    t = BaselineTranscript()
    nonce = random_key_bits(len(shared_key), rng)
    t.messages.append(("nonce", nonce))
    t.count("tx_messages", 1)

    reply = _xor(nonce, prover_key)
    t.messages.append(("cipher", reply))
    t.count("tx_messages", 1)
    t.count("xor_bits", 8 * len(shared_key))
    t.count("decoded_bits", 8 * len(nonce))

    recovered = _xor(reply, nonce)
    t.count("xor_bits", 8 * len(shared_key))
    t.count("decoded_bits", 8 * len(reply))
    decision = AuthDecision(recovered == shared_key,
                            float(sum(recovered[i] != shared_key[i]
                                      for i in range(len(shared_key)))))
    if eavesdropper:
        t.eavesdropper_key = _xor(t.message("nonce"), t.message("cipher"))
    return decision, t


def baseline2_hash_auth(shared_key: bytes, rng: np.random.Generator,
                        prover_key: bytes | None = None,
                        replayed_digest: bytes | None = None
                        ) -> tuple[AuthDecision, BaselineTranscript]:
    """Nonce / keyed-digest handshake.

    replayed_digest substitutes a previously recorded reply, which fails
    against the fresh nonce.
    """
    if prover_key is None:
        prover_key = shared_key
    t = BaselineTranscript()
    nonce = random_key_bits(len(shared_key), rng)
    t.messages.append(("nonce", nonce))
    t.count("tx_messages", 1)

    if replayed_digest is None:
        reply = DIGEST(prover_key + nonce).digest()
        t.count("hashed_bits", 8 * (len(prover_key) + len(nonce)))
    else:
        reply = replayed_digest
    t.messages.append(("digest", reply))
    t.count("tx_messages", 1)
    t.count("decoded_bits", 8 * len(reply))

    expected = DIGEST(shared_key + nonce).digest()
    t.count("hashed_bits", 8 * (len(shared_key) + len(nonce)))
    decision = AuthDecision(reply == expected, 0.0 if reply == expected else 1.0)
    return decision, t


def key_bits_to_coeffs(key: bytes) -> np.ndarray:
    """Unpack key bytes into {0,1} coefficients for the leakage estimator."""
    return np.unpackbits(np.frombuffer(key, dtype=np.uint8)).astype(float)


# ---------------------------------------------------------------------------
# Cost models
# ---------------------------------------------------------------------------

def latency(scheme: str, model: BaselineCostModel, n_auth: int = 1) -> float:
    """Authentication latency in seconds for n_auth runs."""
    if scheme == SCHEME_OURS:
        one = 4 * model.t_tx_s + model.t_rand_s + model.t_verify_s
    elif scheme == SCHEME_BASELINE1:
        one = (4 * model.t_tx_s + model.t_rand_s + model.t_verify_s
               + 2 * model.t_xor_s + 4 * model.t_decoding_s)
    elif scheme == SCHEME_BASELINE2:
        one = (2 * model.t_gen_s + 2 * model.t_tx_s + 2 * model.t_hash_s
               + model.t_rand_s + model.t_verify_s + 2 * model.t_decoding_s)
    else:
        raise CostModelError(f"unknown scheme {scheme!r}")
    return one * n_auth


def minimum_rf_power_w(distance_m: float, model: BaselineCostModel,
                       noise: NoiseModel = NoiseModel()) -> float:
    """Smallest transmit power meeting the SNR target over one inward link."""
    amp_gain = path_loss_gain(LinkGeometry(distance_m))
    return 10.0 ** (model.snr_target_db / 10.0) * noise.variance_w / amp_gain**2


def power(scheme: str, model: BaselineCostModel, distance_m: float,
          noise: NoiseModel = NoiseModel()) -> float:
    """Milliwatts per authentication: RF term plus per-scheme computation."""
    rf_mw = minimum_rf_power_w(distance_m, model, noise) * 1e3
    if scheme == SCHEME_OURS:
        comp = 0.0
    elif scheme == SCHEME_BASELINE1:
        comp = 2 * model.p_xor_mw + 4 * model.p_decoding_mw
    elif scheme == SCHEME_BASELINE2:
        comp = 2 * model.p_hash_mw + 2 * model.p_decoding_mw
    else:
        raise CostModelError(f"unknown scheme {scheme!r}")
    return rf_mw + comp
