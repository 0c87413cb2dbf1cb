"""Static SVG figures for pipeline reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no date stamp keep the SVG bytes reproducible
matplotlib.rcParams["svg.hashsalt"] = "hodgeflow"


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def bar_plot(path, labels, values, errors=None, title="", ylabel="", colors=None) -> None:
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * len(values) + 2), 3.5))
    if colors is None:
        colors = ["#c0392b" if v > 0 else "#2c6fbb" for v in values]
    err = None if errors is None else np.nan_to_num(np.asarray(errors, dtype=float))
    ax.bar(np.arange(len(values)), values, yerr=err, color=colors, capsize=3)
    ax.axhline(0, color="black", lw=0.8)
    ax.set_xticks(np.arange(len(values)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    _save(fig, path)


def matrix_plot(path, matrix, labels, title="") -> None:
    m = np.asarray(matrix, dtype=float)
    finite = m[np.isfinite(m)]
    vmax = float(np.max(np.abs(finite))) if finite.size else 1.0
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    im = ax.imshow(np.ma.masked_invalid(m), cmap="RdBu_r", vmin=-vmax or -1, vmax=vmax or 1)
    ax.set_xticks(np.arange(len(labels)))
    ax.set_yticks(np.arange(len(labels)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    ax.set_yticklabels(labels, fontsize=8)
    ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.8)
    _save(fig, path)
