"""Figures for benchmark reports (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def flags_vs_acceptance(rows: list[dict], path: str | Path) -> Path:
    """Scatter acceptance rate against flag count, one point per circuit.

    Each row needs ``flags``, ``acceptance_rate``, ``acceptance_ci95`` and
    ``label``.
    """
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for row in rows:
        lo, hi = row["acceptance_ci95"]
        rate = row["acceptance_rate"]
        ax.errorbar(row["flags"], rate, yerr=[[rate - lo], [hi - rate]], fmt="o", capsize=3)
        ax.annotate(row["label"], (row["flags"], rate), textcoords="offset points", xytext=(4, 4), fontsize=7)
    ax.set_xlabel("flag measurements")
    ax.set_ylabel("acceptance rate")
    ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    # fixed metadata keeps the file byte-identical across runs
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def failure_vs_flags(rows: list[dict], path: str | Path) -> Path:
    """Logical failure rate (weight above t) with 95% intervals against flag count."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for row in rows:
        lo, hi = row["ci95"]
        p = row["p_over_t"]
        ax.errorbar(row["flags"], p, yerr=[[p - lo], [hi - p]], fmt="s", capsize=3)
        ax.annotate(row["label"], (row["flags"], p), textcoords="offset points", xytext=(4, 4), fontsize=7)
    ax.set_xlabel("flag measurements")
    ax.set_ylabel("failure rate among accepted shots")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path
