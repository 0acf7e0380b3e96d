"""Fuzzy path matching between labelled directed trees.

The package finds highest-scoring order-preserving node matchings between
trees by dynamic programming, generates synthetic planted-path corpora with
known ground truth, runs similarity/embedding/clustering workflows over
tree collections, and ingests process-tree telemetry.  See README.md for
the CLI surface.
"""

from ._kernel import BACKEND as KERNEL_BACKEND
from .errors import TreematchError
from .matching import (
    LengthIndexedResult,
    MatchResult,
    brute_force_oracle,
    match_basic,
    match_gap_limited,
    match_length_indexed,
    match_subtree,
    match_top_k,
    similarity_score,
)
from .trees import (
    LabelledTree,
    Matching,
    build_tree,
    is_ancestor,
    read_tree,
    score_matching,
    validate_matching,
    write_tree,
)
from .weights import composite_weight, frequency_weight, indicator_weight

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "LabelledTree",
    "LengthIndexedResult",
    "MatchResult",
    "Matching",
    "TreematchError",
    "brute_force_oracle",
    "build_tree",
    "composite_weight",
    "frequency_weight",
    "indicator_weight",
    "is_ancestor",
    "match_basic",
    "match_gap_limited",
    "match_length_indexed",
    "match_subtree",
    "match_top_k",
    "read_tree",
    "score_matching",
    "similarity_score",
    "validate_matching",
    "write_tree",
]
