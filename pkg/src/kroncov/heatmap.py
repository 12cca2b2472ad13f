"""PNG heatmaps and benchmark bar plots (matplotlib, Agg backend)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_heatmap(matrix, path, title=None):
    """Heatmap of a matrix scaled so its max |entry| is 1.

    Fixed symmetric diverging color map over [-1, 1], so plots of different
    factors are directly comparable.
    """
    m = np.asarray(matrix, dtype=np.float64)
    peak = np.max(np.abs(m))
    scaled = m / peak if peak > 0 else m
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(scaled, cmap="RdBu_r", vmin=-1.0, vmax=1.0, interpolation="nearest")
    fig.colorbar(im, ax=ax, fraction=0.046)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_error_bars(table, path, metric="frob"):
    """Bar plot of mean errors per method with stderr whiskers."""
    methods = [m for m in table.methods if (m, metric) in table.means]
    means = [table.means[(m, metric)] for m in methods]
    errs = [table.stderrs[(m, metric)] for m in methods]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar(range(len(methods)), means, yerr=errs, capsize=4, color="#4878d0")
    ax.set_xticks(range(len(methods)))
    ax.set_xticklabels(methods, rotation=30, ha="right")
    ax.set_ylabel(f"mean |estimate - truth| ({metric})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
