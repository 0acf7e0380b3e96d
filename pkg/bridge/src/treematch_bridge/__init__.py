"""Workflow tail for treematch corpora, strictly file-coupled.

Consumes exported distance matrices and plot-ready tables, applies a
nonlinear manifold embedding (t-SNE over precomputed distances; the UMAP
package is unavailable in this environment) and hierarchical density-based
clustering (HDBSCAN via scikit-learn), and renders the standard figures.
Never imports or recomputes anything from the primary package; the file
formats are the entire contract.
"""

from .config import BridgeConfig, load_config
from .embedding import run_embedding
from .clustering import run_clustering
from .figures import render_figures

__version__ = "0.1.0"

__all__ = [
    "BridgeConfig",
    "load_config",
    "render_figures",
    "run_clustering",
    "run_embedding",
]
