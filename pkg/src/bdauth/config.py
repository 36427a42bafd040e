"""Experiment configuration: flat key-value files, validation, derived objects.

Config files are plain text, one `key = value` (or `key value`) pair per
line, `#` comments allowed.  Keys mirror the usual system-parameter names
(fc_hz, noise_dbm, d_ij_m, keylength, n_auth, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .channel import PROFILES, MultipathProfile, NoiseModel
from .phy import OfdmConfig

SWEEP_AXES = ("key_length", "snr", "distance", "speed", "profile", "attack")
EXPERIMENTS = ("roc", "identify", "li", "efficiency")
MODES = ("one_way", "mutual")
ROC_ATTACKS = ("impersonation", "replay", "counterfeit")
LI_ATTACKS = ("eavesdrop_naive", "eavesdrop_smart")


class ConfigError(ValueError):
    """Invalid experiment configuration; carries the offending field names."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid config: " + "; ".join(problems))


@dataclass
class ExperimentConfig:
    # Scenario geometry and channel (names follow the parameter table)
    fc_hz: float = 9.0e8
    noise_dbm: float = -30.0
    tx_power_dbm: float = 1.0
    d_rfs_m: float = 3.0          # RF source to each BD
    d_ij_m: float = 3.0           # between the paired BDs
    d_a_m: float = 0.5            # attacker to its victim
    v_mps: float = 0.0            # relative speed between BDs (inward link)
    profile: str = "flat"
    harvester_efficiency: float = 0.7

    # Protocol
    keylength: int = 10
    bd_symbol_span: int = 1
    timing_offset: int = 0
    key_update: bool = True

    # OFDM numerology
    n_subcarriers: int = 64
    cp_len: int = 16
    sample_rate_hz: float = 1e6
    pilot: bool = True

    # Experiment control
    experiment: str = "roc"
    mode: str = "one_way"
    attack: str = "impersonation"
    n_auth: int = 1000
    n_devices: int = 10
    snr_db: float | None = 20.0   # None: use tx_power_dbm as-is
    target_fpr: float = 0.02
    master_seed: int = 1234
    sweep_axis: str | None = None
    sweep_values: list = field(default_factory=list)
    out_dir: str = "out"

    # ------------------------------------------------------------------
    def validate(self) -> None:
        problems = []

        def check(cond, msg):
            if not cond:
                problems.append(msg)

        check(self.fc_hz > 0, "fc_hz must be > 0")
        check(self.d_rfs_m > 0, "d_rfs_m must be > 0")
        check(1.0 <= self.d_ij_m <= 10.0, "d_ij_m must lie in [1, 10]")
        check(0.1 <= self.d_a_m <= 2.0, "d_a_m must lie in [0.1, 2]")
        check(0.0 <= self.v_mps <= 30.0, "v_mps must lie in [0, 30]")
        check(self.profile in PROFILES, f"profile must be one of {sorted(PROFILES)}")
        check(5 <= self.keylength <= 30, "keylength must lie in [5, 30]")
        check(self.bd_symbol_span >= 1, "bd_symbol_span must be >= 1")
        check(self.n_auth >= 1, "n_auth must be >= 1")
        check(self.n_devices >= 2, "n_devices must be >= 2")
        check(self.experiment in EXPERIMENTS,
              f"experiment must be one of {EXPERIMENTS}")
        check(self.mode in MODES, f"mode must be one of {MODES}")
        check(0 < self.harvester_efficiency <= 1,
              "harvester_efficiency must lie in (0, 1]")
        check(0.0 <= self.target_fpr <= 1.0, "target_fpr must lie in [0, 1]")
        if self.snr_db is not None:
            check(-10.0 <= self.snr_db <= 40.0, "snr_db must lie in [-10, 40]")
        check(abs(self.timing_offset) <= self.cp_len - 1,
              "timing_offset must satisfy |offset| <= cp_len - 1")

        if self.experiment == "roc":
            check(self.attack in ROC_ATTACKS,
                  f"attack must be one of {ROC_ATTACKS} for roc experiments")
        if self.experiment == "li":
            check(self.attack in LI_ATTACKS,
                  f"attack must be one of {LI_ATTACKS} for li experiments")
        if self.attack == "eavesdrop_smart":
            from .attacks import coherence_distance_m
            check(self.d_a_m < coherence_distance_m(self.fc_hz),
                  "d_a_m must be inside the coherence distance for smart eavesdropping")
        if self.attack == "eavesdrop_naive":
            from .attacks import coherence_distance_m
            check(self.d_a_m > coherence_distance_m(self.fc_hz),
                  "d_a_m must be beyond the coherence distance for naive eavesdropping")

        if self.sweep_axis is not None:
            check(self.sweep_axis in SWEEP_AXES,
                  f"sweep_axis must be one of {SWEEP_AXES}")
            for v in self.sweep_values:
                probe = replace(self)
                probe.sweep_axis = None
                probe.sweep_values = []
                try:
                    apply_sweep_value(probe, self.sweep_axis, v)
                    probe.validate()
                except ConfigError as err:
                    problems.append(f"sweep value {v!r}: {err.problems[0]}")
        elif self.sweep_values:
            problems.append("sweep_values given without sweep_axis")

        if problems:
            raise ConfigError(problems)

    # ------------------------------------------------------------------
    def ofdm(self) -> OfdmConfig:
        return OfdmConfig(self.n_subcarriers, self.cp_len, self.sample_rate_hz,
                          self.tx_power_dbm, self.pilot)

    def noise(self) -> NoiseModel:
        return NoiseModel(self.noise_dbm)

    def multipath(self) -> MultipathProfile:
        return PROFILES[self.profile]()

    def canonical_text(self) -> str:
        # out_dir does not affect results and stays out of the config hash.
        pairs = [f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)
                 if f.name != "out_dir"]
        return "\n".join(sorted(pairs))


def apply_sweep_value(config: ExperimentConfig, axis: str, value) -> None:
    """Set the swept parameter on a config copy (mutates the given object)."""
    if axis == "key_length":
        config.keylength = int(value)
    elif axis == "snr":
        config.snr_db = float(value)
    elif axis == "distance":
        config.d_ij_m = float(value)
    elif axis == "speed":
        config.v_mps = float(value)
    elif axis == "profile":
        config.profile = str(value)
    elif axis == "attack":
        config.attack = str(value)
    else:
        raise ConfigError([f"unknown sweep axis {axis!r}"])


_BOOL_KEYS = {"pilot", "key_update"}
_INT_KEYS = {"keylength", "bd_symbol_span", "timing_offset", "n_subcarriers",
             "cp_len", "n_auth", "n_devices", "master_seed"}
_STR_KEYS = {"profile", "experiment", "mode", "attack", "out_dir", "sweep_axis"}
_FLOAT_KEYS = {"fc_hz", "noise_dbm", "tx_power_dbm", "d_rfs_m", "d_ij_m",
               "d_a_m", "v_mps", "harvester_efficiency", "sample_rate_hz",
               "snr_db", "target_fpr"}


def _parse_scalar(key: str, raw: str):
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "on", "yes"):
            return True
        if raw.lower() in ("false", "0", "off", "no"):
            return False
        raise ConfigError([f"{key}: expected a boolean, got {raw!r}"])
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        if raw.lower() == "none":
            return None
        return float(raw)
    return raw


def parse_config_text(text: str) -> ExperimentConfig:
    config = ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    problems = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, raw = line.partition("=")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                problems.append(f"line {lineno}: cannot parse {line!r}")
                continue
            key, raw = parts
        key, raw = key.strip(), raw.strip()
        if key not in known:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            if key == "sweep_values":
                setattr(config, key, [v.strip() for v in raw.split(",") if v.strip()])
            else:
                setattr(config, key, _parse_scalar(key, raw))
        except (ValueError, ConfigError) as err:
            problems.append(f"line {lineno}: {err}")
    if problems:
        raise ConfigError(problems)

    if config.sweep_axis is not None and config.sweep_values:
        if config.sweep_axis in ("profile", "attack"):
            config.sweep_values = [str(v) for v in config.sweep_values]
        elif config.sweep_axis == "key_length":
            config.sweep_values = [int(v) for v in config.sweep_values]
        else:
            config.sweep_values = [float(v) for v in config.sweep_values]
    config.validate()
    return config


def parse_config_file(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config_text(f.read())
