"""ROC construction, threshold calibration helpers, and the per-point report."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np


class MetricsError(ValueError):
    pass


@dataclass
class RocCurve:
    """Threshold-test ROC: (fpr, tpr, delta) triples ordered by fpr."""

    points: list[tuple[float, float, float]]

    def __post_init__(self):
        fprs = [p[0] for p in self.points]
        tprs = [p[1] for p in self.points]
        if any(b < a - 1e-12 for a, b in zip(fprs, fprs[1:])):
            raise MetricsError("fpr must be nondecreasing along the curve")
        if any(b < a - 1e-12 for a, b in zip(tprs, tprs[1:])):
            raise MetricsError("tpr must be nondecreasing along the curve")

    @property
    def fpr(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def tpr(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def delta(self) -> np.ndarray:
        return np.array([p[2] for p in self.points])

    def auc(self) -> float:
        fpr = np.concatenate(([0.0], self.fpr, [1.0]))
        tpr = np.concatenate(([0.0], self.tpr, [1.0]))
        return float(np.trapezoid(tpr, fpr))


def compute_roc(genuine_distances: np.ndarray,
                attacker_distances: np.ndarray) -> RocCurve:
    """Sweep the acceptance threshold over the pooled distances.

    Acceptance means distance <= delta, so both rates grow with delta.  The
    curve always starts at the largest zero-FPR threshold and ends at (1, 1).
    """
    gen = np.sort(np.asarray(genuine_distances, dtype=float))
    att = np.sort(np.asarray(attacker_distances, dtype=float))
    if len(gen) == 0 or len(att) == 0:
        raise MetricsError("both populations must be nonempty")

    thresholds = np.unique(np.concatenate((gen, att)))
    # Largest threshold that is still below every attacker distance.
    zero_fpr_delta = np.nextafter(att[0], -np.inf)
    thresholds = np.unique(np.concatenate(([zero_fpr_delta], thresholds)))

    points = []
    for delta in thresholds:
        fpr = float(np.searchsorted(att, delta, side="right")) / len(att)
        tpr = float(np.searchsorted(gen, delta, side="right")) / len(gen)
        points.append((fpr, tpr, float(delta)))
    points.sort(key=lambda p: (p[0], p[1], p[2]))
    return RocCurve(points)


def tpr_at_fpr(roc: RocCurve, fpr_limit: float) -> float:
    """Largest TPR among curve points with FPR <= limit; 0 when none qualify."""
    best = 0.0
    for fpr, tpr, _ in roc.points:
        if fpr <= fpr_limit:
            best = max(best, tpr)
    return best


def calibrate_threshold(genuine_distances: np.ndarray,
                        attacker_distances: np.ndarray,
                        target_fpr: float) -> float:
    """Largest threshold whose empirical FPR stays at or below the target."""
    att = np.sort(np.asarray(attacker_distances, dtype=float))
    pooled = np.unique(np.concatenate((attacker_distances, genuine_distances)))
    best = np.nextafter(att[0], -np.inf)  # always a zero-FPR fallback
    for delta in pooled:
        fpr = float(np.searchsorted(att, delta, side="right")) / len(att)
        if fpr <= target_fpr:
            best = max(best, float(delta))
    return best


def confusion_trace_fraction(confusion: np.ndarray) -> float:
    total = confusion.sum()
    if total == 0:
        raise MetricsError("empty confusion matrix")
    return float(np.trace(confusion) / total)


@dataclass
class MetricsReport:
    """Aggregated outputs of one Monte Carlo sweep point."""

    sweep_axis: str
    sweep_value: object
    n_auth: int
    master_seed: int
    config_hash: str
    delta: float | None = None
    tpr: float | None = None
    fpr: float | None = None
    auc: float | None = None
    tpr_at_limits: dict[str, float] = field(default_factory=dict)
    li: float | None = None
    latency_s: float | None = None
    power_mw: float | None = None
    roc: RocCurve | None = None
    confusion: np.ndarray | None = None
    device_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sweep_axis": self.sweep_axis,
            "sweep_value": self.sweep_value,
            "n_auth": self.n_auth,
            "master_seed": self.master_seed,
            "config_hash": self.config_hash,
            "delta": self.delta,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "auc": self.auc,
            "tpr_at_limits": self.tpr_at_limits,
            "li": self.li,
            "latency_s": self.latency_s,
            "power_mw": self.power_mw,
            "roc": None if self.roc is None else self.roc.points,
            "confusion": None if self.confusion is None else self.confusion.tolist(),
            "device_ids": self.device_ids,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        roc = None
        if data.get("roc") is not None:
            roc = RocCurve([tuple(p) for p in data["roc"]])
        confusion = None
        if data.get("confusion") is not None:
            confusion = np.asarray(data["confusion"])
        return cls(data["sweep_axis"], data["sweep_value"], data["n_auth"],
                   data["master_seed"], data["config_hash"], data.get("delta"),
                   data.get("tpr"), data.get("fpr"), data.get("auc"),
                   data.get("tpr_at_limits", {}), data.get("li"),
                   data.get("latency_s"), data.get("power_mw"), roc, confusion,
                   data.get("device_ids", []))


def reports_to_json(reports: list[MetricsReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=1, sort_keys=True)


def reports_from_json(text: str) -> list[MetricsReport]:
    return [MetricsReport.from_dict(d) for d in json.loads(text)]


def stable_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
