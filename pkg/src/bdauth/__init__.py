"""Desk-scale simulator of power-ratio challenge-response authentication
between ambient-backscatter devices."""

from .channel import (FadingProcess, LinkGeometry, MultipathProfile,
                      NoiseModel, awgn, coherence_time_s, evolve,
                      flat_profile, path_loss_gain, rural_profile,
                      urban_profile)
from .phy import (BackscatterLink, BackscatterSymbol, BasebandFrame,
                  HarvestedPowerReading, OfdmConfig, apply_multipath,
                  backscatter_modulate, cp_subtract, gen_ofdm_frame,
                  harvested_power, transmit_bd_message)
from .protocol import (AuthDecision, AuthSession, AuthThreshold,
                       DeviceRegistry, PidKey, SessionEnv, challenge,
                       generate_random_number, identify_device, key_update,
                       mutual_authenticate, one_way_authenticate,
                       prover_estimate_random, random_key, respond,
                       verifier_estimate_key, verify)
from .attacks import (AttackerConfig, EavesdropObservation,
                      counterfeit_attack, impersonation_attempt,
                      leaked_information, naive_eavesdrop, replay_attack,
                      smart_eavesdrop)
from .baselines import (BaselineCostModel, baseline1_xor_auth,
                        baseline2_hash_auth, latency, power)
from .config import ExperimentConfig, parse_config_file
from .harness import calibrate_delta, export_csv, run_monte_carlo
from .metrics import MetricsReport, RocCurve, compute_roc, tpr_at_fpr

__version__ = "0.1.0"
