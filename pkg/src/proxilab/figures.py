"""Figure rendering for run artifacts (file output only, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_orbit_figure(ledger, path: Path, title: str = ""):
    """Two panels per orbit: the step-distance trace against its unrolled
    bound and gap floor, and the per-step slack."""
    fig, (ax_top, ax_bot) = plt.subplots(2, 1, sharex=True, figsize=(7.5, 5.5))
    k = ledger.k
    ax_top.plot(k, ledger.d, lw=1.4, label="d_k")
    ax_top.plot(k, ledger.bound, lw=1.0, ls="--", label=f"{ledger.chain} bound")
    if np.any(ledger.lower > 0):
        ax_top.plot(k, ledger.lower, lw=0.8, ls=":", color="gray", label="D floor")
    ax_top.set_ylabel("step distance")
    ax_top.legend(loc="best", fontsize=8)
    if title:
        ax_top.set_title(title, fontsize=10)
    ax_bot.plot(k, ledger.slack, lw=1.0, color="tab:green")
    ax_bot.axhline(0.0, color="black", lw=0.6)
    ax_bot.set_ylabel("bound slack")
    ax_bot.set_xlabel("step k")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


_VERDICT_LEVELS = {"to_D": 0, "to_zero": 1, "bounded": 2, "inconclusive": 3, "divergent": 4, "escape": 5}


def render_sweep_figure(rows, a_values, lam1_values, lam2_values, path: Path):
    """One heatmap per plant gain: verdict class over the impulse-gain grid."""
    a_values = list(a_values)
    n = len(a_values)
    cols = min(5, n)
    rows_n = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows_n, cols, figsize=(2.6 * cols, 2.4 * rows_n), squeeze=False)
    by_a = {}
    for row in rows:
        by_a.setdefault(row["a"], []).append(row)
    l1 = list(lam1_values)
    l2 = list(lam2_values)
    for idx, a in enumerate(a_values):
        ax = axes[idx // cols][idx % cols]
        grid = np.zeros((len(l2), len(l1)))
        for row in by_a.get(float(a), []):
            i = l1.index(row["lambda_1"])
            j = l2.index(row["lambda_2"])
            grid[j, i] = _VERDICT_LEVELS.get(row["verdict"], 3)
        ax.imshow(
            grid,
            origin="lower",
            aspect="auto",
            vmin=0,
            vmax=5,
            cmap="viridis",
            extent=(min(l1), max(l1), min(l2), max(l2)),
        )
        ax.set_title(f"a = {a:g}", fontsize=8)
        ax.tick_params(labelsize=6)
    for idx in range(n, rows_n * cols):
        axes[idx // cols][idx % cols].axis("off")
    fig.suptitle("stability verdicts (dark = settles to gap)", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
