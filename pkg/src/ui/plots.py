"""
SVG renderings of the cluster map and component timelines
"""

import logging
import os
from typing import Mapping, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.operations.analysis import ComponentTimeline  # noqa: E402
from src.operations.clustering import DROPPED  # noqa: E402
from src.ui.themes import ThemeManager  # noqa: E402

logger = logging.getLogger(__name__)

# fixed ids and no date metadata keep the SVG bytes stable between runs
plt.rcParams["svg.hashsalt"] = "narrativemap"
plt.rcParams["svg.fonttype"] = "path"
SVG_METADATA = {"Date": None, "Creator": "NarrativeMap"}


def _style(ax, theme: ThemeManager) -> None:
    ax.set_facecolor(theme.get_color("background"))
    ax.tick_params(colors=theme.get_color("default"))
    for spine in ax.spines.values():
        spine.set_color(theme.get_color("grid"))
    ax.grid(True, color=theme.get_color("grid"), linewidth=0.5)


def _save(fig, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA, facecolor=fig.get_facecolor())
    plt.close(fig)
    logger.debug(f"Wrote {path}")


def plot_clusters(path: str, projection: np.ndarray, labels: np.ndarray,
                  names: Optional[Mapping[int, str]] = None, theme: Optional[ThemeManager] = None) -> None:
    """Scatter of the 2-d projection, one color per cluster, labels at cluster medians"""
    theme = theme or ThemeManager().initialize_colors()
    names = names or {}
    points = np.asarray(projection, dtype=np.float64)
    if points.shape[1] == 1:
        points = np.hstack([points, np.zeros_like(points)])
    labels = np.asarray(labels)
    kept = labels != DROPPED
    clusters = sorted(int(c) for c in np.unique(labels[kept]))
    colors = theme.cluster_colors(max(clusters) + 1 if clusters else 0)

    fig, ax = plt.subplots(figsize=(8, 6), facecolor=theme.get_color("background"))
    _style(ax, theme)
    for cluster in clusters:
        members = points[labels == cluster]
        ax.scatter(members[:, 0], members[:, 1], s=12, color=colors[cluster], label=str(cluster))
        centre = np.median(members[:, :2], axis=0)
        text = f"{cluster}: {names[cluster]}" if names.get(cluster) else str(cluster)
        ax.annotate(text, centre, fontsize=7, color=theme.get_color("highlight"), ha="center")
    ax.set_title("Narrative clusters", color=theme.get_color("default"))
    _save(fig, path)


def plot_timeline(path: str, timeline: ComponentTimeline, theme: Optional[ThemeManager] = None) -> None:
    """Weekly article counts, one line per timeline series"""
    theme = theme or ThemeManager().initialize_colors()
    colors = theme.cluster_colors(len(timeline.series))
    fig, ax = plt.subplots(figsize=(10, 4), facecolor=theme.get_color("background"))
    _style(ax, theme)
    positions = np.arange(len(timeline.weeks))
    for color, (key, values) in zip(colors, timeline.series.items()):
        ax.plot(positions, values, color=color, linewidth=1.2, label=" / ".join(map(str, key)))
    ax.set_xticks(positions)
    ax.set_xticklabels(timeline.weeks, rotation=90, fontsize=6)
    ax.set_ylabel("Articles per week", color=theme.get_color("default"))
    if timeline.series:
        ax.legend(fontsize=6, facecolor=theme.get_color("background"), labelcolor=theme.get_color("default"))
    fig.tight_layout()
    _save(fig, path)
