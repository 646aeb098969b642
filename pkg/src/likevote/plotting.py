"""PNG figures for the CLI reports.

matplotlib is imported lazily with the Agg backend, so the rest of the
package never needs it. PNGs are written without a Software/date stamp and
are byte-identical across runs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

_META = {"Software": None}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update({
        "font.size": 9,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "figure.dpi": 100,
    })
    return plt


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(Path(path), format="png", metadata=_META)
    import matplotlib.pyplot as plt

    plt.close(fig)


def plot_grid(cells, path):
    """Accuracy against party like cap, one line per min-likes threshold."""
    from .rules import grid_matrix

    plt = _pyplot()
    mins, plcs, acc = grid_matrix(cells)
    fig, ax = plt.subplots(figsize=(6, 4))
    cmap = plt.get_cmap("viridis")
    for i, m in enumerate(mins):
        ax.plot(plcs, acc[i], marker="o", ms=3, lw=1,
                color=cmap(i / max(1, len(mins) - 1)), label=f"min {m}")
    ax.set_xlabel("party like cap")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.02)
    ax.legend(ncol=2, fontsize=7, frameon=False)
    _save(fig, path)


def plot_trace(trace: Sequence[float], path):
    """Penalised objective per iteration, as the gap above the final value."""
    plt = _pyplot()
    t = np.asarray(trace, dtype=float)
    gap = t - t[-1]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    keep = gap > 0
    if keep.any():
        ax.semilogy(np.flatnonzero(keep), gap[keep], lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective - final")
    _save(fig, path)


def plot_forecast(parties: Sequence[str], raw, weighted, actual, path):
    """Grouped bars of raw and poll-weighted shares, with the actual result if known."""
    plt = _pyplot()
    series = [("raw counts", raw), ("weighted", weighted)]
    if actual is not None:
        series.append(("actual", actual))
    x = np.arange(len(parties))
    width = 0.8 / len(series)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for j, (name, v) in enumerate(series):
        ax.bar(x + (j - (len(series) - 1) / 2) * width, v, width, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels(parties)
    ax.set_ylabel("vote share")
    ax.legend(frameon=False)
    _save(fig, path)


def plot_replicate(runs, path):
    """Cross-validated accuracy per model with its 95% interval."""
    plt = _pyplot()
    names = [r.kind.value for r in runs]
    acc = [r.report.accuracy for r in runs]
    ci = [r.report.ci_95 for r in runs]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(np.arange(len(runs)), acc, yerr=ci, capsize=3, color="0.6")
    ax.axhline(1 / 9, ls="--", lw=0.8, color="k")
    ax.set_xticks(np.arange(len(runs)))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("CV accuracy")
    ax.set_ylim(0, 1)
    _save(fig, path)
