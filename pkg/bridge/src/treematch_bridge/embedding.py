"""Nonlinear manifold embedding of a precomputed distance matrix."""

from __future__ import annotations

import numpy as np
from sklearn.manifold import TSNE

from .config import BridgeConfig, load_matrix, write_table


def embed_distances(distances: np.ndarray, dims: int, seed: int) -> np.ndarray:
    n = distances.shape[0]
    # t-SNE needs perplexity < n; scale it down for tiny inputs.
    perplexity = float(min(30.0, max(1.0, (n - 1) / 3.0)))
    if n <= 2:
        # Degenerate but well-defined: place points on a line by distance.
        coords = np.zeros((n, dims))
        if n == 2:
            coords[1, 0] = distances[0, 1]
        return coords
    tsne = TSNE(
        n_components=dims,
        metric="precomputed",
        init="random",
        random_state=seed,
        perplexity=perplexity,
    )
    return np.asarray(tsne.fit_transform(distances), dtype=float)


def run_embedding(config: BridgeConfig) -> str:
    """Embed config.matrix and write the coordinate file; returns its path."""
    distances = load_matrix(config.matrix)
    coords = embed_distances(distances, config.dims, config.seed)
    write_table(
        config.embedding,
        [
            "method = tsne (precomputed distances)",
            f"dims = {config.dims}",
            f"seed = {config.seed}",
            f"points = {coords.shape[0]}",
        ],
        ["id"] + [f"x{i + 1}" for i in range(coords.shape[1])],
        [[i, *(format(x, ".17g") for x in row)] for i, row in enumerate(coords)],
    )
    return config.embedding
