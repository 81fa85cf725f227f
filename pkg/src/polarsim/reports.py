"""Report outputs: reaction-curve data and rendered figures.

The curve export samples each interaction type's reaction probability on a
201-point agent-opinion grid for a handful of fixed assessed-message
opinions, one CSV row per point. The figure renderers write PNGs next to
the delimited output so a report directory is self-contained.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import kernels
from .engine import STAT_COLUMNS, PlatformStats
from .kernels import ReactionParams, reaction_probability

CURVE_POINTS = 201
CURVE_MESSAGE_OPINIONS = (-1.0, -0.8, -0.5, 0.0, 0.5, 0.8, 1.0)


def default_curve_params() -> dict[str, ReactionParams]:
    return {
        "like": kernels.like_params(),
        "repost": kernels.repost_params(),
        "comment": kernels.comment_params(),
        "follow": kernels.follow_params(),
    }


def curve_rows(
    params_by_type: Mapping[str, ReactionParams] | None = None,
    message_opinions: Iterable[float] = CURVE_MESSAGE_OPINIONS,
    points: int = CURVE_POINTS,
) -> list[tuple[float, float, str, float]]:
    """(o_i, o_m, interaction_type, probability) rows over the opinion grid."""
    params_by_type = params_by_type or default_curve_params()
    grid = np.linspace(-1.0, 1.0, points)
    rows = []
    for kind, params in params_by_type.items():
        for o_m in message_opinions:
            for o_i in grid:
                rows.append(
                    (float(o_i), float(o_m), kind, reaction_probability(float(o_i), o_m, params))
                )
    return rows


def save_curve_figure(rows: list[tuple[float, float, str, float]], path: Path) -> None:
    """One panel per interaction type, one curve per assessed-message opinion."""
    kinds = sorted({r[2] for r in rows})
    fig, axes = plt.subplots(1, len(kinds), figsize=(4 * len(kinds), 3.2), sharey=True)
    if len(kinds) == 1:
        axes = [axes]
    for ax, kind in zip(axes, kinds):
        subset = [r for r in rows if r[2] == kind]
        for o_m in sorted({r[1] for r in subset}):
            pts = [(r[0], r[3]) for r in subset if r[1] == o_m]
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], label=f"$o_m$={o_m:+.1f}")
        ax.set_title(kind)
        ax.set_xlabel("agent opinion")
        ax.grid(alpha=0.3)
    axes[0].set_ylabel("reaction probability")
    axes[-1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_stats_figure(stats: PlatformStats, path: Path) -> None:
    """Grouped bars: one cluster per metric, one bar per user type."""
    roles = ("overall", "influencers", "regular")
    x = np.arange(len(STAT_COLUMNS))
    width = 0.27
    fig, ax = plt.subplots(figsize=(9, 3.6))
    for i, role in enumerate(roles):
        values = [stats.rows[role][c] for c in STAT_COLUMNS]
        ax.bar(x + (i - 1) * width, values, width, label=role)
    ax.set_xticks(x)
    ax.set_xticklabels([c.removeprefix("avg_") for c in STAT_COLUMNS])
    ax.set_ylabel("mean per agent")
    ax.grid(axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
