"""Batch figure rendering for experiment reports (written next to the CSVs)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import MetricsReport


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_roc_figure(reports: list[MetricsReport], path: str) -> str | None:
    curves = [r for r in reports if r.roc is not None]
    if not curves:
        return None
    fig, ax = plt.subplots(figsize=(5, 4))
    for r in curves:
        label = f"{r.sweep_axis}={r.sweep_value}" if r.sweep_value is not None else "default"
        ax.plot(r.roc.fpr, r.roc.tpr, marker=".", markersize=3, label=label)
    ax.plot([0, 1], [0, 1], "k:", linewidth=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8)
    return _save(fig, path)


def save_sweep_figure(reports: list[MetricsReport], column: str,
                      path: str) -> str | None:
    rows = [(r.sweep_value, getattr(r, column, None) if hasattr(r, column)
             else r.tpr_at_limits.get(column)) for r in reports]
    rows = [(x, y) for x, y in rows if y is not None and x is not None]
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(5, 3.5))
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    if all(isinstance(x, (int, float)) for x in xs):
        ax.plot(xs, ys, marker="o")
    else:
        ax.bar(range(len(xs)), ys)
        ax.set_xticks(range(len(xs)), [str(x) for x in xs])
    ax.set_xlabel(reports[0].sweep_axis)
    ax.set_ylabel(column)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def save_confusion_figure(report: MetricsReport, path: str) -> str | None:
    if report.confusion is None:
        return None
    counts = report.confusion.astype(float)
    frac = counts / np.maximum(counts.sum(axis=1, keepdims=True), 1)
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(frac, cmap="Blues", vmin=0, vmax=1)
    n = len(report.device_ids)
    ax.set_xticks(range(n), report.device_ids, rotation=45, fontsize=7)
    ax.set_yticks(range(n), report.device_ids, fontsize=7)
    for i in range(n):
        for j in range(n):
            if frac[i, j] > 0:
                ax.text(j, i, f"{100 * frac[i, j]:.0f}", ha="center",
                        va="center", fontsize=6,
                        color="white" if frac[i, j] > 0.5 else "black")
    ax.set_xlabel("identified as")
    ax.set_ylabel("true device")
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, path)


def save_efficiency_figure(reports: list[MetricsReport], path: str) -> str | None:
    rows = [r for r in reports if r.sweep_axis == "scheme"]
    if not rows:
        return None
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.5))
    names = [str(r.sweep_value) for r in rows]
    axes[0].bar(names, [r.latency_s for r in rows])
    axes[0].set_ylabel("latency per authentication [s]")
    axes[1].bar(names, [r.power_mw for r in rows])
    axes[1].set_ylabel("power per authentication [mW]")
    for ax in axes:
        ax.grid(True, axis="y", alpha=0.3)
    return _save(fig, path)


def render_all(reports: list[MetricsReport], out_dir) -> list[str]:
    """Render every applicable figure; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    jobs = [
        save_roc_figure(reports, os.path.join(out_dir, "roc.png")),
        save_sweep_figure(reports, "tpr", os.path.join(out_dir, "tpr.png")),
        save_sweep_figure(reports, "auc", os.path.join(out_dir, "auc.png")),
        save_sweep_figure(reports, "li", os.path.join(out_dir, "li.png")),
        save_efficiency_figure(reports, os.path.join(out_dir, "efficiency.png")),
    ]
    for r in reports:
        if r.confusion is not None:
            jobs.append(save_confusion_figure(
                r, os.path.join(out_dir, "confusion.png")))
            break
    written.extend(p for p in jobs if p)
    return written
