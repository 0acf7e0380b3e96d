"""Hierarchical density-based clustering of embedded coordinates."""

from __future__ import annotations

from sklearn.cluster import HDBSCAN

from .config import BridgeConfig, load_embedding_file, write_table


def run_clustering(config: BridgeConfig, coordinates: str | None = None) -> str:
    """Cluster a coordinate file; cluster -1 marks noise.  Returns the path."""
    source = coordinates or config.embedding
    ids, coords = load_embedding_file(source)
    if len(ids) < 2:
        labels = [0] * len(ids)
    else:
        mcs = min(config.min_cluster_size, max(2, len(ids)))
        labels = HDBSCAN(min_cluster_size=mcs).fit_predict(coords)
    write_table(
        config.partition,
        [
            "method = hdbscan",
            f"min_cluster_size = {config.min_cluster_size}",
            f"source = {source}",
        ],
        ["id", "cluster"],
        [[i, int(lab)] for i, lab in zip(ids, labels)],
    )
    return config.partition
