"""Ambient OFDM source, midpoint-hop backscatter waveform, CP-subtraction receiver.

Signal chain for one message:

    RF source frame --h_tx--> reflecting BD --(midpoint-hop waveform)-->
    --h_inward--> listening BD  (+ direct downlink via h_rx + AWGN)

The listening BD subtracts each OFDM symbol's cyclic-prefix window from its
copy one FFT length later.  The downlink component cancels exactly there (the
CP is a literal copy), while the backscattered component survives because the
reflector switches off in the second half of every symbol.  The surviving
power is proportional to the reflector's power coefficient, which is the only
observable the protocol needs.

Within one frame the RF source repeats a single random subcarrier loading, so
the realized ambient power in the measurement window is identical across BD
symbols and power ratios are exact in the noiseless static case.  Fresh loads
are drawn per frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import FadingProcess, NoiseModel, StaticTaps, TapsReplay, awgn


class PhyConfigError(ValueError):
    """Inconsistent OFDM / channel configuration."""


class SignalLengthError(ValueError):
    """Input vector length does not match the configured symbol grid."""


class MeasurementError(ValueError):
    """Power measurement requested on an empty signal."""


ChannelLike = FadingProcess | StaticTaps | TapsReplay


@dataclass(frozen=True)
class OfdmConfig:
    """Ambient OFDM numerology and transmit power.

    n_subcarriers  FFT size N
    cp_len         cyclic prefix length N_cp (must exceed all channel delays)
    sample_rate_hz baseband sampling rate
    tx_power_dbm   average transmit power of the RF source
    pilot_present  symbol 0 of every frame carries a fixed, publicly known load
    """

    n_subcarriers: int = 64
    cp_len: int = 16
    sample_rate_hz: float = 1e6
    tx_power_dbm: float = 1.0
    pilot_present: bool = True

    def __post_init__(self):
        if self.n_subcarriers < 2:
            raise PhyConfigError("n_subcarriers must be >= 2")
        if not (0 < self.cp_len < self.n_subcarriers):
            raise PhyConfigError("need 0 < cp_len < n_subcarriers")
        if self.sample_rate_hz <= 0:
            raise PhyConfigError("sample_rate_hz must be > 0")

    @property
    def symbol_len(self) -> int:
        return self.n_subcarriers + self.cp_len

    @property
    def symbol_duration_s(self) -> float:
        return self.symbol_len / self.sample_rate_hz

    @property
    def tx_power_w(self) -> float:
        return 10.0 ** ((self.tx_power_dbm - 30.0) / 10.0)

    def with_tx_power_dbm(self, dbm: float) -> "OfdmConfig":
        return OfdmConfig(self.n_subcarriers, self.cp_len, self.sample_rate_hz,
                          dbm, self.pilot_present)


@dataclass
class BasebandFrame:
    """One generated downlink frame (complex baseband samples)."""

    samples: np.ndarray
    n_symbols: int
    config: OfdmConfig
    subcarrier_loads: np.ndarray
    msg_start_symbol: int = 0


@dataclass(frozen=True)
class BackscatterSymbol:
    """One message element: power-domain reflection coefficient over K OFDM symbols."""

    power_coeff: float
    span_ofdm_symbols: int = 1

    def __post_init__(self):
        if not (0.0 <= self.power_coeff <= 1.0):
            raise PhyConfigError("power_coeff must lie in [0, 1]")
        if self.span_ofdm_symbols < 1:
            raise PhyConfigError("span_ofdm_symbols must be >= 1")


@dataclass(frozen=True)
class HarvestedPowerReading:
    """Average received power scaled by the harvester efficiency."""

    value_w: float
    n_samples_averaged: int
    harvester_efficiency: float = 0.7


def _random_unit_loads(n: int, rng: np.random.Generator) -> np.ndarray:
    # Unit-modulus QPSK loads: every subcarrier carries the same energy.
    phases = rng.integers(0, 4, n) * (math.pi / 2.0) + math.pi / 4.0
    return np.exp(1j * phases)


_PILOT_CACHE: dict[int, np.ndarray] = {}


def pilot_loads(n_subcarriers: int) -> np.ndarray:
    """Fixed unit-modulus pilot loading, identical for every frame."""
    if n_subcarriers not in _PILOT_CACHE:
        fixed = np.random.default_rng(0x5EED_0F0F).integers(0, 4, n_subcarriers)
        _PILOT_CACHE[n_subcarriers] = np.exp(1j * (fixed * (math.pi / 2.0) + math.pi / 4.0))
    return _PILOT_CACHE[n_subcarriers].copy()


def _symbol_from_loads(loads: np.ndarray, config: OfdmConfig) -> np.ndarray:
    body = np.fft.ifft(loads)
    sym = np.concatenate((body[-config.cp_len:], body))
    # Exact per-symbol power normalization; ratios then cancel realized power.
    sym *= math.sqrt(config.tx_power_w / float(np.mean(np.abs(sym) ** 2)))
    return sym


def gen_ofdm_frame(config: OfdmConfig, n_symbols: int, rng: np.random.Generator,
                   subcarrier_loads: np.ndarray | None = None) -> BasebandFrame:
    """Generate a frame of n_symbols CP-OFDM symbols.

    All message symbols repeat one random unit-modulus loading (drawn per
    frame unless supplied), so every symbol carries exactly the configured
    average power.  If pilot_present, symbol 0 carries the fixed pilot load
    and the message region starts at symbol 1.
    """
    if n_symbols < 1:
        raise PhyConfigError("n_symbols must be >= 1")
    if subcarrier_loads is None:
        subcarrier_loads = _random_unit_loads(config.n_subcarriers, rng)
    elif len(subcarrier_loads) != config.n_subcarriers:
        raise PhyConfigError("subcarrier_loads length must equal n_subcarriers")

    msg_symbol = _symbol_from_loads(subcarrier_loads, config)
    parts = []
    msg_start = 0
    if config.pilot_present:
        parts.append(_symbol_from_loads(pilot_loads(config.n_subcarriers), config))
        msg_start = 1
    parts.extend([msg_symbol] * (n_symbols - msg_start))
    samples = np.concatenate(parts) if parts else np.zeros(0, dtype=complex)
    return BasebandFrame(samples, n_symbols, config, subcarrier_loads, msg_start)


# ---------------------------------------------------------------------------
# Channel application
# ---------------------------------------------------------------------------

def apply_multipath(samples: np.ndarray, dense_taps: np.ndarray,
                    cp_len: int | None = None) -> np.ndarray:
    """Linear convolution with a dense tap vector, tail truncated to input length."""
    dense_taps = np.atleast_1d(np.asarray(dense_taps, dtype=complex))
    if cp_len is not None and len(dense_taps) - 1 >= cp_len:
        raise PhyConfigError(
            f"channel delay {len(dense_taps) - 1} must be < cp_len {cp_len}")
    if len(samples) == 0:
        return np.zeros(0, dtype=complex)
    return np.convolve(samples, dense_taps)[: len(samples)]


def _time_varying_channel(samples: np.ndarray, channel: ChannelLike,
                          config: OfdmConfig, record: bool = False
                          ) -> tuple[np.ndarray, list[np.ndarray] | None]:
    """Apply a block-fading channel, one tap snapshot per OFDM symbol.

    The channel evolves by one symbol duration between consecutive symbols.
    Static channels collapse to a single convolution (identical result).
    """
    n_t = config.symbol_len
    n_sym = len(samples) // n_t
    if n_sym * n_t != len(samples):
        raise SignalLengthError("samples must hold a whole number of OFDM symbols")

    if channel.is_static:
        taps = channel.dense_taps()
        out = apply_multipath(samples, taps, config.cp_len)
        snapshots = [taps] * n_sym if record else None
        return out, snapshots

    out = np.empty_like(samples)
    snapshots: list[np.ndarray] | None = [] if record else None
    dt = config.symbol_duration_s
    for k in range(n_sym):
        taps = channel.dense_taps()
        if snapshots is not None:
            snapshots.append(taps)
        if len(taps) - 1 >= config.cp_len:
            raise PhyConfigError("channel delay must be < cp_len")
        ctx = len(taps) - 1
        left = samples[max(0, k * n_t - ctx): k * n_t]
        if len(left) < ctx:  # frame start: zero-pad the missing context
            left = np.concatenate((np.zeros(ctx - len(left), dtype=complex), left))
        seg = np.convolve(np.concatenate((left, samples[k * n_t:(k + 1) * n_t])), taps)
        out[k * n_t:(k + 1) * n_t] = seg[ctx: ctx + n_t]
        if k < n_sym - 1:
            channel.evolve(dt)
    return out, snapshots


# ---------------------------------------------------------------------------
# Backscatter waveform and receiver
# ---------------------------------------------------------------------------

def _as_coeff_array(message) -> tuple[np.ndarray, int]:
    """Accept an array of power coefficients or a sequence of BackscatterSymbol."""
    if len(message) and isinstance(message[0], BackscatterSymbol):
        span = message[0].span_ofdm_symbols
        if any(m.span_ofdm_symbols != span for m in message):
            raise PhyConfigError("all message symbols must share one span")
        return np.array([m.power_coeff for m in message], dtype=float), span
    return np.asarray(message, dtype=float), 1


def backscatter_modulate(incident: np.ndarray, message, config: OfdmConfig,
                         span: int = 1, timing_offset_samples: int = 0) -> np.ndarray:
    """Reflect the incident signal with the midpoint-hop waveform.

    Within each OFDM symbol the reflector multiplies by sqrt(power_coeff) up
    to the hop point (nominally the symbol midpoint, shifted by the timing
    offset) and by zero afterwards.  The off half is what lets the receiver's
    CP subtraction isolate the reflection.
    """
    coeffs, msg_span = _as_coeff_array(message)
    span = msg_span if msg_span != 1 else span
    if np.any(coeffs < 0) or np.any(coeffs > 1):
        raise PhyConfigError("power coefficients must lie in [0, 1]")
    if abs(timing_offset_samples) > config.cp_len - 1:
        raise PhyConfigError("timing offset must satisfy |offset| <= cp_len - 1")

    n_t = config.symbol_len
    n_msg_sym = len(coeffs) * span
    if len(incident) < n_msg_sym * n_t:
        raise SignalLengthError("incident signal shorter than the message")

    hop = n_t // 2 + timing_offset_samples
    gate = np.zeros(n_t)
    gate[:hop] = 1.0
    amp = np.repeat(np.sqrt(coeffs), span * n_t) * np.tile(gate, len(coeffs) * span)
    return incident[: n_msg_sym * n_t] * amp


def cp_subtract(received: np.ndarray, config: OfdmConfig, guard: int = 0) -> np.ndarray:
    """Per-symbol difference y[n] - y[n+N] over the CP window, concatenated.

    guard drops the first samples of each window, where a delay-spread
    downlink has not yet settled; with guard >= the downlink's maximum tap
    delay the downlink component cancels exactly.
    """
    n_t = config.symbol_len
    if len(received) % n_t != 0:
        raise SignalLengthError("received length must be a whole number of symbols")
    if not (0 <= guard < config.cp_len):
        raise PhyConfigError("guard must lie in [0, cp_len)")
    view = received.reshape(-1, n_t)
    diff = view[:, guard:config.cp_len] - view[:, guard + config.n_subcarriers:
                                               config.cp_len + config.n_subcarriers]
    return diff.reshape(-1)


def harvested_power(signal: np.ndarray, efficiency: float = 0.7) -> HarvestedPowerReading:
    """Average |sample|^2 scaled by the harvester efficiency."""
    if len(signal) == 0:
        raise MeasurementError("cannot measure power of an empty signal")
    if not (0.0 < efficiency <= 1.0):
        raise MeasurementError("efficiency must lie in (0, 1]")
    return HarvestedPowerReading(efficiency * float(np.mean(np.abs(signal) ** 2)),
                                 len(signal), efficiency)


# ---------------------------------------------------------------------------
# Full link
# ---------------------------------------------------------------------------

@dataclass
class BackscatterLink:
    """Channel set for one directed BD-to-BD transmission."""

    tx_downlink: ChannelLike      # RF source -> reflecting BD
    inward: ChannelLike           # reflecting BD -> listening BD
    rx_downlink: ChannelLike      # RF source -> listening BD (direct interference)
    noise: NoiseModel
    rx_efficiency: float = 0.7


@dataclass
class AirCapture:
    """Everything on the air during one message, for any listener to receive."""

    frame_samples: np.ndarray          # downlink frame as transmitted
    reflected: np.ndarray              # reflected signal leaving the BD (frame-aligned)
    config: OfdmConfig
    msg_start_symbol: int
    n_message_elements: int
    span: int
    coeffs: np.ndarray
    tx_downlink_taps: list[np.ndarray]  # per-symbol snapshots of the reflector's downlink
    subcarrier_loads: np.ndarray
    timing_offset_samples: int = 0

    @property
    def n_symbols(self) -> int:
        return len(self.frame_samples) // self.config.symbol_len

    def ambient_window_power(self, guard: int = 0) -> float:
        """Realized ambient power in the guarded CP window of a message symbol."""
        n_t = self.config.symbol_len
        start = self.msg_start_symbol * n_t
        win = self.frame_samples[start + guard: start + self.config.cp_len]
        return float(np.mean(np.abs(win) ** 2))


def _guard_for(channel: ChannelLike, config: OfdmConfig) -> int:
    guard = channel.max_delay_samples
    if guard >= config.cp_len:
        raise PhyConfigError("downlink delay spread exceeds the CP length")
    return guard


def receive_power_readings(air: AirCapture, inward: ChannelLike,
                           rx_downlink: ChannelLike, noise: NoiseModel,
                           efficiency: float, rng: np.random.Generator,
                           guard: int | None = None) -> list[HarvestedPowerReading]:
    """Receive a captured transmission at any listener and read per-element power.

    The listener superposes the reflected signal (through its inward channel)
    with the direct downlink (through its own downlink channel) plus AWGN,
    CP-subtracts, and averages |.|^2 over each message element's windows.
    """
    cfg = air.config
    if guard is None:
        guard = _guard_for(rx_downlink, cfg)
    bs, _ = _time_varying_channel(air.reflected, inward, cfg)
    dl, _ = _time_varying_channel(air.frame_samples, rx_downlink, cfg)
    y = bs + dl + awgn(noise, len(air.frame_samples), rng)
    z = cp_subtract(y, cfg, guard)

    win = cfg.cp_len - guard
    per_symbol = z.reshape(air.n_symbols, win)
    msg = per_symbol[air.msg_start_symbol:]
    readings = []
    for l in range(air.n_message_elements):
        block = msg[l * air.span:(l + 1) * air.span].reshape(-1)
        readings.append(harvested_power(block, efficiency))
    return readings


def transmit_bd_message(message, link: BackscatterLink, config: OfdmConfig,
                        rng: np.random.Generator, timing_offset_samples: int = 0,
                        ambient_loads: np.ndarray | None = None,
                        collect_air: bool = False):
    """Run the full chain for one message and return one power reading per element.

    message is a vector of power-domain reflection coefficients in [0, 1]
    (or BackscatterSymbol objects).  Set collect_air=True to also get the
    on-air capture, e.g. for eavesdropper receivers.
    """
    coeffs, span = _as_coeff_array(message)
    n_msg_sym = len(coeffs) * span
    # One unmodulated lead-in symbol carries the frame loading, so every
    # modulated symbol sees identical multipath context at the reflector.
    n_sym = n_msg_sym + 1 + (1 if config.pilot_present else 0)

    frame = gen_ofdm_frame(config, n_sym, rng, ambient_loads)
    incident, tx_taps = _time_varying_channel(frame.samples, link.tx_downlink,
                                              config, record=True)
    n_t = config.symbol_len
    msg_start = frame.msg_start_symbol + 1
    reflected = np.zeros_like(frame.samples)
    start = msg_start * n_t
    reflected[start:] = backscatter_modulate(incident[start:], coeffs, config,
                                             span, timing_offset_samples)

    air = AirCapture(frame.samples, reflected, config, msg_start,
                     len(coeffs), span, coeffs.copy(), tx_taps,
                     frame.subcarrier_loads, timing_offset_samples)
    readings = receive_power_readings(air, link.inward, link.rx_downlink,
                                      link.noise, link.rx_efficiency, rng)
    if collect_air:
        return readings, air
    return readings


def readings_to_watts(readings: list[HarvestedPowerReading]) -> np.ndarray:
    return np.array([r.value_w for r in readings])


def write_iq(path, samples: np.ndarray) -> None:
    """Dump complex samples as little-endian interleaved float32 I/Q."""
    samples = np.asarray(samples, dtype=complex)
    out = np.empty(2 * len(samples), dtype="<f4")
    out[0::2] = samples.real.astype("<f4")
    out[1::2] = samples.imag.astype("<f4")
    out.tofile(path)
