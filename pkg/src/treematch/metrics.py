"""Small evaluation helpers: rank AUC, adjusted Rand index, silhouette.

Numpy-only implementations used by the experiment harnesses and benchmarks;
nothing here is specific to trees.
"""

from __future__ import annotations

import numpy as np


def rank_auc(positives, negatives) -> float:
    """Probability a random positive outranks a random negative (ties 0.5)."""
    pos = np.asarray(positives, dtype=float)
    neg = np.asarray(negatives, dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both groups must be nonempty")
    combined = np.concatenate([pos, neg])
    order = np.argsort(combined, kind="mergesort")
    ranks = np.empty(combined.size)
    sorted_vals = combined[order]
    i = 0
    while i < combined.size:
        j = i
        while j + 1 < combined.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    u = ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected agreement between two partitions of the same items."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError("partitions must label the same items")
    n = a.size
    _, a_ids = np.unique(a, return_inverse=True)
    _, b_ids = np.unique(b, return_inverse=True)
    table = np.zeros((a_ids.max() + 1, b_ids.max() + 1), dtype=np.int64)
    np.add.at(table, (a_ids, b_ids), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    index = comb2(table).sum()
    row = comb2(table.sum(axis=1)).sum()
    col = comb2(table.sum(axis=0)).sum()
    expected = row * col / comb2(n)
    max_index = 0.5 * (row + col)
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))


def mean_silhouette(distances: np.ndarray, labels) -> float:
    """Mean silhouette width from a precomputed distance matrix.

    Singleton-cluster points contribute 0.
    """
    d = np.asarray(distances, dtype=float)
    labs = np.asarray(labels)
    n = d.shape[0]
    uniq = np.unique(labs)
    if uniq.size < 2:
        raise ValueError("need at least two clusters")
    scores = np.zeros(n)
    for i in range(n):
        own = labs == labs[i]
        own_size = own.sum()
        if own_size == 1:
            continue
        a = d[i, own].sum() / (own_size - 1)
        b = min(d[i, labs == c].mean() for c in uniq if c != labs[i])
        scores[i] = (b - a) / max(a, b)
    return float(scores.mean())
