"""Static PNG figures rendered alongside the delimited outputs.

Everything routes through the Agg backend with fixed geometry so that a
rerun of the same command writes byte-identical image files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .cohort import CohortSummary
from .evaluate import DISPLAY_NAMES, Leaderboard
from .scale import StratificationTable

_SAVE = {"dpi": 110, "metadata": {"Software": "tafrisk"}}


def _finish(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def cohort_overview_figure(summary: CohortSummary, path: str | Path) -> Path:
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4.2))
    n_neg = summary.n_rows - summary.n_positive
    left.bar(["no AF", "AF"], [n_neg, summary.n_positive], color=["#7570b3", "#d95f02"])
    left.set_title(
        f"{summary.n_rows} patients, balance {summary.class_balance}"
        f" ({summary.prevalence:.1%} positive)"
    )
    left.set_ylabel("patients")

    by_missing = sorted(summary.features, key=lambda f: (-f.missing_fraction, f.name))[:12]
    names = [f.name for f in by_missing][::-1]
    fractions = [f.missing_fraction for f in by_missing][::-1]
    right.barh(names, fractions, color="#1b9e77")
    right.set_xlim(0, max(0.05, max(fractions, default=0.0) * 1.25))
    right.set_title("highest missing fractions")
    right.set_xlabel("fraction of cells missing")
    right.tick_params(axis="y", labelsize=7)
    fig.tight_layout()
    return _finish(fig, Path(path))


def leaderboard_figure(board: Leaderboard, path: str | Path) -> Path:
    rows = board.rows[::-1]  # best on top of the horizontal chart
    names = [f"{DISPLAY_NAMES[r.kind]}  [{r.config_id}]" for r in rows]
    f1 = [r.mean_metrics.f1 for r in rows]
    acc = [r.mean_metrics.accuracy for r in rows]
    fig, ax = plt.subplots(figsize=(9, 0.55 * max(4, len(rows)) + 1.2))
    y = np.arange(len(rows))
    ax.barh(y + 0.18, f1, height=0.36, label="F1 (mean)", color="#d95f02")
    ax.barh(y - 0.18, acc, height=0.36, label="accuracy (mean)", color="#7570b3")
    ax.set_yticks(y, names, fontsize=8)
    ax.set_xlim(0, 1)
    ax.set_xlabel("cross-validated mean")
    ax.set_title(f"model comparison over the preprocessing grid (k={board.folds})")
    ax.legend(loc="lower right")
    fig.tight_layout()
    return _finish(fig, Path(path))


def stratification_figure(table: StratificationTable, path: str | Path) -> Path:
    bands = [row.band.value for row in table.rows]
    fp1 = [row.frequency_fp1 if row.frequency_fp1 is not None else 0.0 for row in table.rows]
    counts = [row.count for row in table.rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    bars = ax.bar(bands, fp1, color="#d95f02")
    for bar, count in zip(bars, counts):
        ax.annotate(
            f"n={count}",
            (bar.get_x() + bar.get_width() / 2, bar.get_height()),
            ha="center",
            va="bottom",
            fontsize=8,
        )
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("fraction with AF")
    ax.set_title(f"outcome frequency per risk band ({table.total} patients)")
    fig.tight_layout()
    return _finish(fig, Path(path))
