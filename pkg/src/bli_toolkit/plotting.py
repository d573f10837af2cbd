"""Static figures for merged BLI tables (PNG/PDF/SVG via matplotlib's Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 7,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    # fixed metadata keeps output files byte-stable across reruns
    "svg.hashsalt": "bli-toolkit",
}


def precision_bars(table, path, title: str = "BLI precision@k"):
    """Grouped bars: one group per table row, one bar per k."""
    rows, ks = table.rows, table.ks
    with plt.rc_context(STYLE):
        width = max(4.0, 0.55 * len(rows) * max(1, len(ks)) / 2 + 1.5)
        fig, ax = plt.subplots(figsize=(width, 3.2))
        x = np.arange(len(rows))
        bar = 0.8 / len(ks)
        for j, k in enumerate(ks):
            vals = [r.value(k) for r in rows]
            ax.bar(x + (j - (len(ks) - 1) / 2) * bar, vals, bar, label=f"P@{k}")
        ax.set_xticks(x)
        ax.set_xticklabels([r.label() for r in rows], rotation=35, ha="right")
        ax.set_ylabel("precision (%)")
        ax.set_ylim(0, 100)
        ax.set_title(title)
        ax.legend(frameon=False, ncol=len(ks))
        ax.yaxis.grid(True, linewidth=0.4, alpha=0.6)
        ax.set_axisbelow(True)
        fig.savefig(path, metadata=_metadata(path))
        plt.close(fig)


def gain_bars(table, path, title: str = "Relative improvement over base"):
    """Relative gains (percent) of every variant row that has a base row."""
    picked = [(r, g) for r, g in zip(table.rows, table.gains) if g is not None]
    if not picked:
        return False
    ks = table.ks
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(picked) + 1.5), 3.2))
        x = np.arange(len(picked))
        bar = 0.8 / len(ks)
        for j, k in enumerate(ks):
            vals = [0.0 if g[k] is None else g[k] for _, g in picked]
            ax.bar(x + (j - (len(ks) - 1) / 2) * bar, vals, bar, label=f"P@{k}")
        ax.axhline(0.0, color="black", linewidth=0.6)
        ax.set_xticks(x)
        ax.set_xticklabels([r.label() for r, _ in picked], rotation=35, ha="right")
        ax.set_ylabel("gain (%)")
        ax.set_title(title)
        ax.legend(frameon=False, ncol=len(ks))
        fig.savefig(path, metadata=_metadata(path))
        plt.close(fig)
    return True


def _metadata(path) -> dict:
    suffix = str(path).lower().rsplit(".", 1)[-1]
    if suffix == "png":
        return {"Software": None}
    if suffix == "pdf":
        return {"Creator": None, "Producer": None, "CreationDate": None}
    if suffix == "svg":
        return {"Date": None, "Creator": None}
    return {}
