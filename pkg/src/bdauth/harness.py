"""Configuration-driven Monte Carlo experiments, calibration, and CSV export.

Every trial draws its randomness from a child generator derived by hashing
(master seed, sweep axis, sweep value, role, trial index), so reports are
pure functions of (config, master seed) and independent of sweep ordering.

The snr_db knob applies per-session transmit power control: it pins the
measurement SNR of the weakest admissible reflection coefficient (B_MIN) at
the listening device, given the realized channel gains.  Distance sweeps
instead fix the transmit power at the value that reaches the target SNR at
the shortest swept distance in expectation, so accuracy decays with range.
Leakage experiments reference the eavesdropper's own measurement SNR, which
is the quantity that controls how much an attacker can invert.
"""

from __future__ import annotations

import csv
import hashlib
import os
from dataclasses import replace

import numpy as np

from . import attacks, baselines
from .attacks import (AttackEnv, RecordedResponse, counterfeit_attack,
                      impersonation_attempt, leaked_information,
                      make_naive_attack_env, make_smart_attack_env,
                      naive_eavesdrop, naive_key_guess, replay_attack,
                      smart_eavesdrop)
from .channel import (FadingProcess, LinkGeometry, NoiseModel, PROFILES,
                      path_loss_gain)
from .config import ConfigError, ExperimentConfig, apply_sweep_value
from .metrics import (MetricsReport, RocCurve, calibrate_threshold,
                      compute_roc, stable_hash, tpr_at_fpr)
from .phy import OfdmConfig, write_iq
from .protocol import (AuthThreshold, B_MIN, DeviceRegistry, PidKey,
                       SessionEnv, challenge, identify_device, key_update,
                       one_way_authenticate, random_key)

TPR_LIMITS = (0.0, 0.02)


# ---------------------------------------------------------------------------
# Deterministic seeding
# ---------------------------------------------------------------------------

def stable_seed(*parts) -> list[int]:
    """Platform-independent child seed from hashed string parts."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(stable_seed(*parts))


# ---------------------------------------------------------------------------
# Scenario builders
# ---------------------------------------------------------------------------

def build_session_env(config: ExperimentConfig, rng: np.random.Generator,
                      d_ij: float | None = None) -> SessionEnv:
    profile = config.multipath()
    d_ij = config.d_ij_m if d_ij is None else d_ij
    # The configured speed is the relative speed between the BDs; the RF
    # source is fixed, so only the inward link sees Doppler.
    return SessionEnv(
        FadingProcess(LinkGeometry(config.d_rfs_m, carrier_hz=config.fc_hz),
                      profile, rng),
        FadingProcess(LinkGeometry(config.d_rfs_m, carrier_hz=config.fc_hz),
                      profile, rng),
        FadingProcess(LinkGeometry(d_ij, relative_speed_mps=config.v_mps,
                                   carrier_hz=config.fc_hz), profile, rng),
        config.noise(),
        verifier_efficiency=config.harvester_efficiency,
        prover_efficiency=config.harvester_efficiency,
        timing_offset_samples=config.timing_offset)


def _realized_power_gain(channel) -> float:
    return float(np.sum(np.abs(channel.dense_taps()) ** 2))


def controlled_ofdm(config: ExperimentConfig, env: SessionEnv) -> OfdmConfig:
    """Per-session power control hitting snr_db for the weakest coefficient."""
    if config.snr_db is None:
        return config.ofdm()
    g_challenge = (_realized_power_gain(env.rfs_to_verifier)
                   * _realized_power_gain(env.inward))
    g_response = (_realized_power_gain(env.rfs_to_prover)
                  * _realized_power_gain(env.inward))
    return _ofdm_for_gain(config, min(g_challenge, g_response))


def _ofdm_for_gain(config: ExperimentConfig, power_gain: float) -> OfdmConfig:
    noise = config.noise()
    snr_lin = 10.0 ** (config.snr_db / 10.0)
    ptx_w = snr_lin * 2.0 * noise.variance_w / (B_MIN * power_gain)
    return replace(config.ofdm(), tx_power_dbm=10.0 * np.log10(ptx_w) + 30.0)


def fixed_power_ofdm(config: ExperimentConfig, reference_d_ij: float) -> OfdmConfig:
    """Expected-gain power budget at a reference distance (no per-session control)."""
    if config.snr_db is None:
        return config.ofdm()
    g_dl = path_loss_gain(LinkGeometry(config.d_rfs_m, carrier_hz=config.fc_hz))
    g_in = path_loss_gain(LinkGeometry(reference_d_ij, carrier_hz=config.fc_hz))
    return _ofdm_for_gain(config, (g_dl * g_in) ** 2)


def _attacker_referenced_ofdm(config: ExperimentConfig, env: SessionEnv,
                              attack_env: AttackEnv | None,
                              smart_inward_gain: float | None) -> OfdmConfig:
    """Power control against the eavesdropper's composite link (LI experiments)."""
    if config.snr_db is None:
        return config.ofdm()
    g_dl = _realized_power_gain(env.rfs_to_verifier)
    if smart_inward_gain is not None:
        g_in = smart_inward_gain
    else:
        g_in = _realized_power_gain(attack_env.victim_to_attacker)
    return _ofdm_for_gain(config, g_dl * g_in)


def build_pair_registries(config: ExperimentConfig, tag: str
                          ) -> tuple[DeviceRegistry, DeviceRegistry]:
    rng = rng_for(config.master_seed, tag, "keys")
    keys = {"bd_i": random_key(config.keylength, rng),
            "bd_j": random_key(config.keylength, rng)}
    reg_i = DeviceRegistry("bd_i", {r: k.copy() for r, k in keys.items()})
    reg_j = DeviceRegistry("bd_j", {r: k.copy() for r, k in keys.items()})
    return reg_i, reg_j


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

def genuine_distance(config: ExperimentConfig, tag: str, trial: int,
                     ofdm: OfdmConfig | None = None) -> float:
    """One honest session; mutual mode returns the max over both directions."""
    reg_i, reg_j = build_pair_registries(config, tag)
    rng = rng_for(config.master_seed, tag, "genuine", trial)
    env = build_session_env(config, rng)
    cfg = controlled_ofdm(config, env) if ofdm is None else ofdm
    big = AuthThreshold(float("inf"))
    dec1, _ = one_way_authenticate(reg_i, reg_j, env, cfg, rng, big)
    d = _distance_or_inf(dec1)
    if config.mode == "mutual":
        env.evolve_all(config.keylength * cfg.symbol_duration_s)
        dec2, _ = one_way_authenticate(reg_j, reg_i, env.swapped(), cfg, rng, big)
        d = max(d, _distance_or_inf(dec2))
    return d


def _distance_or_inf(decision) -> float:
    return float("inf") if decision.l1_distance is None else decision.l1_distance


def attacker_distance(config: ExperimentConfig, tag: str, trial: int,
                      ofdm: OfdmConfig | None = None,
                      short_circuit_delta: float | None = None) -> float:
    """One attacker session of the configured kind; mutual mode is the max
    over both verification directions (short-circuited when a threshold is
    given and the first direction already fails)."""
    kind = config.attack
    d1 = _attacker_direction(config, tag, trial, 0, kind, ofdm)
    if config.mode != "mutual":
        return d1
    if short_circuit_delta is not None and d1 > short_circuit_delta:
        return d1
    d2 = _attacker_direction(config, tag, trial, 1, kind, ofdm)
    return max(d1, d2)


def _attacker_direction(config: ExperimentConfig, tag: str, trial: int,
                        direction: int, kind: str,
                        ofdm: OfdmConfig | None) -> float:
    reg_i, reg_j = build_pair_registries(config, tag)
    rng = rng_for(config.master_seed, tag, "attacker", kind, trial, direction)
    env = build_session_env(config, rng)
    cfg = controlled_ofdm(config, env) if ofdm is None else ofdm
    big = AuthThreshold(float("inf"))

    if kind == "impersonation":
        decision, _ = impersonation_attempt(reg_i, "bd_j", env, cfg, rng, big)
        return _distance_or_inf(decision)

    if kind == "counterfeit":
        attack_env = make_naive_attack_env(config.d_a_m, config.noise(), rng,
                                           config.multipath(), config.fc_hz,
                                           config.d_rfs_m)
        decision, _ = counterfeit_attack(reg_i, "bd_j", env, attack_env, cfg,
                                         rng, big)
        return _distance_or_inf(decision)

    if kind == "replay":
        return _replay_direction(config, reg_i, reg_j, env, cfg, rng, big)

    raise ConfigError([f"attack {kind!r} has no ROC semantics"])


def _replay_direction(config: ExperimentConfig, reg_i, reg_j, env, cfg, rng,
                      big: AuthThreshold) -> float:
    # Session 1: honest mutual run that the attacker records.
    dec1, sess1 = one_way_authenticate(reg_i, reg_j, env, cfg, rng, big)
    if sess1.d_estimated is None:
        return float("inf")
    recorded = RecordedResponse(sess1.d_estimated.copy(),
                                reg_j.own_key.coeffs.copy())
    env.evolve_all(config.keylength * cfg.symbol_duration_s)
    dec2, sess2 = one_way_authenticate(reg_j, reg_i, env.swapped(), cfg, rng, big)

    # Post-authentication key refresh invalidates the recording.
    if config.key_update:
        for reg in (reg_i, reg_j):
            reg.apply_key_update("bd_i", sess1.d_true)
            reg.apply_key_update("bd_j", sess2.d_true)

    env2 = build_session_env(config, rng)
    cfg2 = controlled_ofdm(config, env2) if config.snr_db is not None else cfg
    attack_env = make_naive_attack_env(config.d_a_m, config.noise(), rng,
                                       config.multipath(), config.fc_hz,
                                       config.d_rfs_m)
    decision, _ = replay_attack(recorded, reg_i, "bd_j", env2, attack_env,
                                cfg2, rng, big)
    return _distance_or_inf(decision)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def _distance_populations(config: ExperimentConfig, tag: str, role: str,
                          n: int, ofdm: OfdmConfig | None
                          ) -> tuple[np.ndarray, np.ndarray]:
    gen = np.array([genuine_distance(config, f"{tag}|{role}", t, ofdm)
                    for t in range(n)])
    att = np.array([attacker_distance(config, f"{tag}|{role}", t, ofdm)
                    for t in range(n)])
    return gen, att


def run_roc_point(config: ExperimentConfig, tag: str,
                  ofdm: OfdmConfig | None = None) -> dict:
    """Calibrate on one population, evaluate on a fresh one."""
    cal_gen, cal_att = _distance_populations(config, tag, "cal", config.n_auth, ofdm)
    delta = calibrate_threshold(cal_gen, cal_att, config.target_fpr)
    gen, att = _distance_populations(config, tag, "eval", config.n_auth, ofdm)
    roc = compute_roc(gen, att)
    return {
        "delta": float(delta),
        "tpr": float(np.mean(gen <= delta)),
        "fpr": float(np.mean(att <= delta)),
        "auc": roc.auc(),
        "roc": roc,
        "tpr_at_limits": {str(lim): tpr_at_fpr(roc, lim) for lim in TPR_LIMITS},
    }


def run_li_point(config: ExperimentConfig, tag: str) -> float:
    """Leaked information between true keys and the eavesdropper's inferences."""
    bins = 16
    n_sessions = max(int(np.ceil(10 * bins * bins / config.keylength)),
                     min(config.n_auth, 2000))
    smart = config.attack == "eavesdrop_smart"
    true_pop, inferred_pop = [], []
    for t in range(n_sessions):
        rng = rng_for(config.master_seed, tag, "li", t)
        key = random_key(config.keylength, rng)
        registry = DeviceRegistry("bd_i", {"bd_i": key,
                                           "bd_j": random_key(config.keylength, rng)})
        env = build_session_env(config, rng)
        if smart:
            gain = min(1.0, path_loss_gain(
                LinkGeometry(config.d_a_m, carrier_hz=config.fc_hz))) ** 2
            cfg = _attacker_referenced_ofdm(config, env, None, gain)
            _, _, air = challenge(registry, "bd_j", env, cfg, rng,
                                  collect_air=True)
            attack_env = make_smart_attack_env(config.d_a_m, config.noise(),
                                               air, config.fc_hz)
            inferred = smart_eavesdrop(air, attack_env, rng).inferred_key
        else:
            attack_env = make_naive_attack_env(config.d_a_m, config.noise(),
                                               rng, config.multipath(),
                                               config.fc_hz, config.d_rfs_m)
            cfg = _attacker_referenced_ofdm(config, env, attack_env, None)
            _, _, air = challenge(registry, "bd_j", env, cfg, rng,
                                  collect_air=True)
            naive_eavesdrop(air, attack_env, rng)  # ratio only; keys stay hidden
            inferred = naive_key_guess(config.keylength, rng)
        true_pop.append(key.coeffs)
        inferred_pop.append(inferred)
    return leaked_information(np.concatenate(true_pop),
                              np.concatenate(inferred_pop), bins)


def run_identify_point(config: ExperimentConfig, tag: str
                       ) -> tuple[np.ndarray, list[str]]:
    """Confusion matrix over n_devices provers, n_auth sessions each."""
    key_rng = rng_for(config.master_seed, tag, "device-keys")
    device_ids = [f"bd{k:02d}" for k in range(config.n_devices)]
    entries = {ref: random_key(config.keylength, key_rng) for ref in device_ids}
    entries["verifier"] = random_key(config.keylength, key_rng)
    registry = DeviceRegistry("verifier", entries)

    confusion = np.zeros((config.n_devices, config.n_devices), dtype=int)
    big = AuthThreshold(float("inf"))
    for row, prover_id in enumerate(device_ids):
        prover_registry = DeviceRegistry(
            prover_id, {r: k.copy() for r, k in entries.items()})
        for t in range(config.n_auth):
            rng = rng_for(config.master_seed, tag, "identify", prover_id, t)
            env = build_session_env(config, rng)
            cfg = controlled_ofdm(config, env)
            _, session = one_way_authenticate(registry, prover_registry, env,
                                              cfg, rng, big)
            if session.k_estimated is None:
                continue
            predicted = identify_device(session.k_estimated, registry,
                                        candidates=device_ids)
            confusion[row, device_ids.index(predicted)] += 1
    return confusion, device_ids


def _efficiency_li(config: ExperimentConfig, scheme: str, tag: str) -> float:
    """Eavesdropper leakage per scheme, on matched key-bit populations."""
    if scheme == baselines.SCHEME_OURS:
        li_config = replace(config, attack="eavesdrop_naive",
                            experiment="li", sweep_axis=None, sweep_values=[])
        return run_li_point(li_config, f"{tag}|ours-li")
    rng = rng_for(config.master_seed, tag, "baseline-li", scheme)
    n_bytes = max(4, config.keylength)
    true_pop, inferred_pop = [], []
    n_pairs = 10 * 16 * 16
    while len(true_pop) * n_bytes * 8 < n_pairs:
        key = baselines.random_key_bits(n_bytes, rng)
        if scheme == baselines.SCHEME_BASELINE1:
            _, transcript = baselines.baseline1_xor_auth(key, rng,
                                                         eavesdropper=True)
            inferred = transcript.eavesdropper_key
        else:
            _, _ = baselines.baseline2_hash_auth(key, rng)
            inferred = baselines.random_key_bits(n_bytes, rng)  # digest reveals nothing
        true_pop.append(baselines.key_bits_to_coeffs(key))
        inferred_pop.append(baselines.key_bits_to_coeffs(inferred))
    return leaked_information(np.concatenate(true_pop),
                              np.concatenate(inferred_pop))


def run_monte_carlo(config: ExperimentConfig) -> list[MetricsReport]:
    """Execute the configured experiment over its sweep and build reports."""
    config.validate()
    config_hash = stable_hash(config.canonical_text())

    if config.experiment == "efficiency":
        return _run_efficiency(config, config_hash)

    if config.sweep_axis is None:
        points = [(None, None)]
    else:
        points = [(config.sweep_axis, v) for v in config.sweep_values]

    reports = []
    fixed_ofdm = None
    if config.sweep_axis == "distance" and config.sweep_values:
        fixed_ofdm = fixed_power_ofdm(config, min(config.sweep_values))

    for axis, value in points:
        point = replace(config, sweep_axis=None, sweep_values=[])
        if axis is not None:
            apply_sweep_value(point, axis, value)
        tag = f"{axis}={value}"
        report = MetricsReport(axis or "none", value, point.n_auth,
                               config.master_seed, config_hash)
        model = baselines.BaselineCostModel.for_config(
            point.ofdm(), point.keylength, point.bd_symbol_span)
        report.latency_s = baselines.latency(baselines.SCHEME_OURS, model, 1)
        report.power_mw = baselines.power(baselines.SCHEME_OURS, model,
                                          point.d_ij_m, point.noise())
        if point.experiment == "roc":
            ofdm = fixed_ofdm if axis == "distance" else None
            stats = run_roc_point(point, tag, ofdm)
            report.delta = stats["delta"]
            report.tpr = stats["tpr"]
            report.fpr = stats["fpr"]
            report.auc = stats["auc"]
            report.roc = stats["roc"]
            report.tpr_at_limits = stats["tpr_at_limits"]
        elif point.experiment == "li":
            report.li = run_li_point(point, tag)
        elif point.experiment == "identify":
            confusion, device_ids = run_identify_point(point, tag)
            report.confusion = confusion
            report.device_ids = device_ids
        reports.append(report)
    return reports


def _run_efficiency(config: ExperimentConfig, config_hash: str
                    ) -> list[MetricsReport]:
    model = baselines.BaselineCostModel.for_config(
        config.ofdm(), config.keylength, config.bd_symbol_span)
    reports = []
    for scheme in baselines.SCHEMES:
        report = MetricsReport("scheme", scheme, config.n_auth,
                               config.master_seed, config_hash)
        report.latency_s = baselines.latency(scheme, model, config.n_auth)
        report.power_mw = baselines.power(scheme, model, config.d_ij_m,
                                          config.noise())
        report.li = _efficiency_li(config, scheme, "efficiency")
        reports.append(report)
    return reports


def calibrate_delta(config: ExperimentConfig, target_fpr: float | None = None
                    ) -> float:
    """Train the decision threshold on a dedicated calibration population."""
    config.validate()
    target = config.target_fpr if target_fpr is None else target_fpr
    point = replace(config, sweep_axis=None, sweep_values=[])
    gen, att = _distance_populations(point, "calibrate", "cal", point.n_auth,
                                     None)
    return float(calibrate_threshold(gen, att, target))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


SUMMARY_COLUMNS = ["sweep_axis", "sweep_value", "n_auth", "delta", "tpr",
                   "fpr", "auc", "tpr_at_fpr0", "tpr_at_fpr0.02", "li",
                   "latency_s", "power_mw", "master_seed", "config_hash"]


def export_csv(reports: list[MetricsReport], out_dir) -> list[str]:
    """Write summary/roc/confusion CSVs plus a plot-recipe file."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    summary_path = os.path.join(out_dir, "summary.csv")
    with open(summary_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(SUMMARY_COLUMNS)
        for r in reports:
            w.writerow([_fmt(v) for v in (
                r.sweep_axis, r.sweep_value, r.n_auth, r.delta, r.tpr, r.fpr,
                r.auc, r.tpr_at_limits.get("0.0"), r.tpr_at_limits.get("0.02"),
                r.li, r.latency_s, r.power_mw, r.master_seed, r.config_hash)])
    written.append(summary_path)

    if any(r.roc is not None for r in reports):
        roc_path = os.path.join(out_dir, "roc.csv")
        with open(roc_path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["sweep_axis", "sweep_value", "fpr", "tpr", "delta"])
            for r in reports:
                if r.roc is None:
                    continue
                for fpr, tpr, delta in r.roc.points:
                    w.writerow([_fmt(v) for v in
                                (r.sweep_axis, r.sweep_value, fpr, tpr, delta)])
        written.append(roc_path)

    for r in reports:
        if r.confusion is None:
            continue
        conf_path = os.path.join(out_dir, "confusion.csv")
        with open(conf_path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["true_id"] + r.device_ids)
            for ref, row in zip(r.device_ids, r.confusion):
                w.writerow([ref] + [str(c) for c in row])
        written.append(conf_path)
        break

    recipe_path = os.path.join(out_dir, "plot_recipes.txt")
    with open(recipe_path, "w", encoding="utf-8") as f:
        f.write("figure=roc source=roc.csv x=fpr y=tpr group=sweep_value\n")
        f.write("figure=metric_vs_sweep source=summary.csv x=sweep_value "
                "y=tpr group=sweep_axis\n")
        f.write("figure=auc_vs_sweep source=summary.csv x=sweep_value y=auc\n")
        f.write("figure=leaked_information source=summary.csv x=sweep_value "
                "y=li\n")
        f.write("figure=efficiency source=summary.csv x=sweep_value "
                "y=latency_s,power_mw\n")
        f.write("figure=confusion source=confusion.csv matrix=true_id\n")
    written.append(recipe_path)
    return written


def dump_example_iq(config: ExperimentConfig, path) -> None:
    """Write one challenge transmission as interleaved float32 I/Q."""
    reg_i, _ = build_pair_registries(config, "iq")
    rng = rng_for(config.master_seed, "iq")
    env = build_session_env(config, rng)
    cfg = controlled_ofdm(config, env)
    _, _, air = challenge(reg_i, "bd_j", env, cfg, rng, collect_air=True)
    write_iq(path, air.frame_samples)
