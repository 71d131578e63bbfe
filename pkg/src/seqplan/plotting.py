"""Figures for experiment reports (rendered to files, never shown)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .config import PRUNE_REASONS  # noqa: E402
from .experiment import AggregateStats  # noqa: E402


def histogram_figure(stats: AggregateStats, path, title: str = "") -> Path:
    """Bar chart of first-ranked sequence frequencies."""
    labels = list(stats.histogram)
    freqs = [stats.histogram[k] for k in labels]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(labels) + 2.0), 3.6))
    ax.bar(range(len(labels)), freqs, color="#4c72b0")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("Frequency")
    ax.set_ylim(0, max(freqs + [1]) * 1.15)
    ax.set_title(title or f"first-ranked sequences ({stats.runs} runs)")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def pruning_figure(stats: AggregateStats, path, title: str = "") -> Path:
    """Pruned share of the worst-case tree per reason with one-sigma bars."""
    names = [r.value for r in PRUNE_REASONS]
    means = [stats.pruned_pct[k][0] for k in names]
    sigmas = [stats.pruned_pct[k][1] for k in names]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.bar(range(len(names)), means, yerr=sigmas, capsize=3, color="#dd8452")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels([n.replace("_", "\n") for n in names], fontsize=8)
    ax.set_ylabel("pruned nodes [%]")
    ax.set_ylim(0, 100)
    ax.set_title(title or "pruning by reason")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
