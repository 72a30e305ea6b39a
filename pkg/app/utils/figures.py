from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from app.hybrid.graph import DOT_COLORS, ExclusivityGraph  # noqa: E402


def render_graph_figure(G: ExclusivityGraph, path: str | Path, title: str | None = None) -> Path:
    """Draw G on a circle, edges colored by tag (A red, B blue, both green), and save it as a PNG."""
    path = Path(path)
    angles = np.pi / 2 - 2 * np.pi * np.arange(G.n) / G.n
    xs, ys = np.cos(angles), np.sin(angles)

    fig, ax = plt.subplots(figsize=(8, 8))
    for (u, v), tag in sorted(G.tags.items()):
        ax.plot([xs[u], xs[v]], [ys[u], ys[v]], color=DOT_COLORS[tag], linewidth=1.2, zorder=1)
    ax.scatter(xs, ys, s=300, color="white", edgecolors="black", zorder=2)
    for v in range(G.n):
        ax.annotate(G.label(v), (1.12 * xs[v], 1.12 * ys[v]), ha="center", va="center", fontsize=8)
    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title)
    plt.savefig(path, bbox_inches="tight", dpi=150)
    plt.close(fig)
    return path
