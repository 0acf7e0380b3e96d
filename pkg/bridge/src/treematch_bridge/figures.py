"""Figure rendering from the primary toolkit's plot-ready tables.

Outputs (deterministic names inside the configured directory):
  similarity_hist.png   per-class histograms of similarity-to-reference
  symbol_counts_hist.png  per-symbol histograms of label counts, by class
  embedding_scatter.png   embedding colored by cluster (noise in grey)
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .config import (
    BridgeConfig,
    MissingColumnError,
    load_embedding_file,
    load_partition_file,
    read_csv_table,
)


def _by_class(columns, rows, value_columns):
    try:
        class_idx = columns.index("class")
    except ValueError:
        raise MissingColumnError("table lacks a 'class' column") from None
    indices = []
    for name in value_columns:
        try:
            indices.append(columns.index(name))
        except ValueError:
            raise MissingColumnError(f"table lacks a {name!r} column") from None
    grouped: dict[str, list[list[float]]] = {}
    for row in rows:
        grouped.setdefault(row[class_idx], []).append(
            [float(row[i]) for i in indices]
        )
    return {cls: np.asarray(vals) for cls, vals in grouped.items()}


def render_figures(config: BridgeConfig) -> list[str]:
    os.makedirs(config.out, exist_ok=True)
    written = []

    if config.scores:
        columns, rows = read_csv_table(config.scores)
        grouped = _by_class(columns, rows, ["score"])
        fig, ax = plt.subplots(figsize=(6, 4))
        for cls in sorted(grouped):
            vals = grouped[cls][:, 0]
            ax.hist(vals, bins=20, alpha=0.6, label=f"class {cls}")
        ax.set_xlabel("similarity to reference")
        ax.set_ylabel("trees")
        ax.legend()
        path = os.path.join(config.out, "similarity_hist.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    if config.counts:
        columns, rows = read_csv_table(config.counts)
        symbols = [c for c in columns if c not in ("id", "class")]
        if not symbols:
            raise MissingColumnError("counts table has no symbol columns")
        grouped = _by_class(columns, rows, symbols)
        ncols = min(len(symbols), 5)
        nrows = (len(symbols) + ncols - 1) // ncols
        fig, axes = plt.subplots(
            nrows, ncols, figsize=(3 * ncols, 2.5 * nrows), squeeze=False
        )
        for s, symbol in enumerate(symbols):
            ax = axes[s // ncols][s % ncols]
            for cls in sorted(grouped):
                ax.hist(grouped[cls][:, s], bins=15, alpha=0.6, label=f"class {cls}")
            ax.set_title(symbol)
        axes[0][0].legend(fontsize="small")
        fig.tight_layout()
        path = os.path.join(config.out, "symbol_counts_hist.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    if config.embedding and os.path.exists(config.embedding):
        ids, coords = load_embedding_file(config.embedding)
        labels = None
        if config.partition and os.path.exists(config.partition):
            pids, plabels = load_partition_file(config.partition)
            lookup = dict(zip(pids, plabels))
            labels = np.asarray([lookup.get(i, -1) for i in ids])
        fig, ax = plt.subplots(figsize=(5, 5))
        xy = coords[:, :2] if coords.shape[1] >= 2 else np.column_stack(
            [coords[:, 0], np.zeros(len(ids))]
        )
        if labels is None:
            ax.scatter(xy[:, 0], xy[:, 1], s=14)
        else:
            noise = labels == -1
            if noise.any():
                ax.scatter(xy[noise, 0], xy[noise, 1], s=10, c="lightgrey",
                           label="noise")
            for cls in sorted(set(labels[~noise])):
                sel = labels == cls
                ax.scatter(xy[sel, 0], xy[sel, 1], s=14, label=f"cluster {cls}")
            ax.legend(fontsize="small")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        path = os.path.join(config.out, "embedding_scatter.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written
