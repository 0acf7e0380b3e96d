"""Backend selection for the matching DP kernels.

The forward pass of the matcher is the hot loop of the whole package (every
pairwise-similarity entry walks n*m table cells), so it exists twice:

* ``treematch._dpcore``   - Cython extension, compiled at install time;
* ``treematch._dpcore_py`` - pure-Python mirror, bit-identical results.

The compiled backend is picked at import when available.  Set the
environment variable ``TREEMATCH_FORCE_PYTHON_KERNEL=1`` to force the
fallback (used by the benchmark and the cross-backend tests).  Both
backends expose the same four functions:

    score_diag / score_parts   forward pass, best score + end cell only
    full_diag  / full_parts    forward pass + per-cell choice table for
                               backtracing, optionally the dense DP table

"diag" mode covers indicator and frequency weights (a per-node code plus a
per-node self-match value); "parts" covers composite weights (one code per
tuple component plus component weights).  Rows of the DP table are only
ever read at a node's ancestor, so the kernels walk the first tree in DFS
preorder and keep just the current root-to-node path of rows in a ring
buffer (depth+2 rows), which keeps the working set in cache.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

if os.environ.get("TREEMATCH_FORCE_PYTHON_KERNEL"):
    from . import _dpcore_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _dpcore as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        from . import _dpcore_py as _impl

        BACKEND = "python"


@dataclass
class TreeCodes:
    """Per-tree label encoding consumed by the kernels.

    mode "diag":  codes (n,) int64, values (n,) float64 self-match weights.
    mode "parts": codes (n, k) int64, part_weights (k,) float64.
    Equal codes mean "these labels match" under the originating WeightSpec.
    """

    mode: str
    codes: np.ndarray
    values: np.ndarray | None = None
    part_weights: np.ndarray | None = None
    unit_values: bool = False

    def __post_init__(self):
        dtype = np.int32 if self.mode == "diag" else np.int64
        self.codes = np.ascontiguousarray(self.codes, dtype=dtype)
        if self.values is not None:
            self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.part_weights is not None:
            self.part_weights = np.ascontiguousarray(
                self.part_weights, dtype=np.float64
            )


def forward_score(g, h, cg: TreeCodes, ch: TreeCodes) -> float:
    """Best matching score between trees g and h (no backtrace bookkeeping)."""
    if cg.mode == "diag":
        if cg.unit_values:
            return float(_impl.score_indicator(
                g.preorder, g.depths, cg.codes,
                h.shifted_ancestors, ch.codes,
            ))
        return _impl.score_diag(
            g.ancestors, g.preorder, g.depths, cg.codes, cg.values,
            h.ancestors, ch.codes,
        )
    return _impl.score_parts(
        g.ancestors, g.preorder, g.depths, cg.codes,
        h.ancestors, ch.codes, cg.part_weights,
    )


def forward_full(g, h, cg: TreeCodes, ch: TreeCodes, want_table: bool = False):
    """Forward pass retaining the choice table (and optionally the DP table).

    Returns (score, end_u, end_v, choice, table).  choice has shape
    (len(g), len(h)) with entries 1, 2, 3 naming the recurrence branch that
    won at each cell, ties going to the largest option.  table is None
    unless requested.
    """
    if cg.mode == "diag":
        return _impl.full_diag(
            g.ancestors, g.preorder, g.depths, cg.codes, cg.values,
            h.ancestors, ch.codes, want_table,
        )
    return _impl.full_parts(
        g.ancestors, g.preorder, g.depths, cg.codes,
        h.ancestors, ch.codes, cg.part_weights, want_table,
    )
