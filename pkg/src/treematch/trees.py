"""Labelled rooted trees, their partial order, and path matchings.

A tree on nodes 0..n is stored as a flat ancestor array: ``ancestor[0] == -1``
(the root sentinel, never matched) and ``ancestor[v] < v`` for v >= 1, so node
indices are always a topological order of the tree partial order.  Labels are
fixed-arity tuples of strings; numeric features must be stringified by the
caller so that weight functions see one uniform type.

The on-disk format used repo-wide is one node per line::

    node_id<TAB>parent_id<TAB>label_1<TAB>...<TAB>label_k

with parent_id -1 for the root, UTF-8, and ``#`` comment lines ignored.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    CycleDetectedError,
    InvalidMatchingError,
    MultipleRootsError,
    ParseError,
)

LabelTuple = tuple[str, ...]

ROOT_SENTINEL = -1


@dataclass(frozen=True)
class LabelledTree:
    """Rooted directed tree with topologically ordered nodes and tuple labels.

    Immutable after construction; all derived structure (depths, children,
    DFS preorder) is computed lazily and cached, so instances are safe to
    share across threads.
    """

    ancestors: np.ndarray
    labels: tuple[LabelTuple, ...]

    def __post_init__(self):
        anc = np.ascontiguousarray(self.ancestors, dtype=np.int32)
        object.__setattr__(self, "ancestors", anc)
        if anc.ndim != 1 or anc.shape[0] < 1:
            raise ValueError("ancestor array must be 1-D and non-empty")
        if anc[0] != ROOT_SENTINEL:
            raise MultipleRootsError("node 0 must be the root (ancestor -1)")
        n = anc.shape[0]
        if n > 1:
            rest = anc[1:]
            if (rest == ROOT_SENTINEL).any():
                raise MultipleRootsError("only node 0 may have the sentinel ancestor")
            if (rest < 0).any() or not (rest < np.arange(1, n, dtype=np.int32)).all():
                raise CycleDetectedError(
                    "ancestor indices must satisfy ancestor[v] < v; "
                    "use build_tree to repair unordered input"
                )
        if not isinstance(self.labels, tuple):
            object.__setattr__(self, "labels", tuple(tuple(l) for l in self.labels))
        if len(self.labels) != n:
            raise ValueError(f"expected {n} labels, got {len(self.labels)}")

    @property
    def node_count(self) -> int:
        return int(self.ancestors.shape[0])

    def __len__(self) -> int:
        return self.node_count

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelledTree):
            return NotImplemented
        return (
            np.array_equal(self.ancestors, other.ancestors)
            and self.labels == other.labels
        )

    __hash__ = None  # mutable-array field; identity hashing would mislead

    @cached_property
    def depths(self) -> np.ndarray:
        """Depth of every node (root has depth 0).  One pass thanks to ordering."""
        anc = self.ancestors
        d = np.zeros(anc.shape[0], dtype=np.int32)
        for v in range(1, anc.shape[0]):
            d[v] = d[anc[v]] + 1
        return d

    @cached_property
    def depth(self) -> int:
        return int(self.depths.max())

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        """Children of each node, in ascending index order."""
        kids: list[list[int]] = [[] for _ in range(self.node_count)]
        anc = self.ancestors
        for v in range(1, self.node_count):
            kids[anc[v]].append(v)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def preorder(self) -> np.ndarray:
        """DFS preorder visiting children in ascending index order.

        The matching kernels iterate rows in this order so that only the
        current root-to-node path of DP rows has to stay live.
        """
        out = np.empty(self.node_count, dtype=np.int32)
        stack = [0]
        pos = 0
        kids = self.children
        while stack:
            u = stack.pop()
            out[pos] = u
            pos += 1
            stack.extend(reversed(kids[u]))
        return out

    @cached_property
    def shifted_ancestors(self) -> np.ndarray:
        """ancestors + 1: ring-buffer column indices used by the DP kernels."""
        return np.add(self.ancestors, 1, dtype=np.int32)

    @cached_property
    def subtree_sizes(self) -> np.ndarray:
        """Number of nodes in the full subtree rooted at each node."""
        sizes = np.ones(self.node_count, dtype=np.int64)
        anc = self.ancestors
        for v in range(self.node_count - 1, 0, -1):
            sizes[anc[v]] += sizes[v]
        return sizes

    def leaves(self) -> list[int]:
        return [v for v, kids in enumerate(self.children) if not kids]

    def ancestor_chain(self, v: int) -> list[int]:
        """Nodes from the root down to v inclusive."""
        chain = [v]
        anc = self.ancestors
        while anc[chain[-1]] != ROOT_SENTINEL:
            chain.append(int(anc[chain[-1]]))
        chain.reverse()
        return chain

    def label_arity(self) -> int:
        return len(self.labels[0]) if self.labels else 0

    def with_labels(self, labels: Sequence[LabelTuple]) -> "LabelledTree":
        return LabelledTree(self.ancestors, tuple(tuple(l) for l in labels))


def build_tree(
    ancestor_array: Sequence[int],
    labels: Sequence[Iterable[str]],
) -> tuple[LabelledTree, list[int] | None]:
    """Validate (and if necessary repair) raw ancestor/label arrays.

    Input nodes may be numbered arbitrarily as long as exactly one node has
    ancestor -1.  If the array is not already topologically ordered, nodes
    are renumbered by breadth-first discovery order from the root and the
    old-index -> new-index map is returned; otherwise the map is None.

    Raises CycleDetectedError if some ancestor chain never reaches the root
    and MultipleRootsError if the sentinel appears more than once (or never).
    """
    anc = [int(a) for a in ancestor_array]
    labs = [tuple(l) for l in labels]
    if len(anc) != len(labs) or not anc:
        raise ValueError("ancestor and label arrays must have equal length >= 1")
    n = len(anc)
    roots = [v for v, a in enumerate(anc) if a == ROOT_SENTINEL]
    if len(roots) != 1:
        raise MultipleRootsError(f"expected exactly one root, found {len(roots)}")
    root = roots[0]
    for v, a in enumerate(anc):
        if v != root and not 0 <= a < n:
            raise CycleDetectedError(f"node {v} has out-of-range ancestor {a}")

    ordered = root == 0 and all(anc[v] < v for v in range(1, n))
    if ordered:
        return LabelledTree(np.asarray(anc, dtype=np.int32), tuple(labs)), None

    # BFS relabelling; doubles as cycle/connectivity detection because any
    # node not reached from the root can never reach it either.
    kids: list[list[int]] = [[] for _ in range(n)]
    for v, a in enumerate(anc):
        if v != root:
            kids[a].append(v)
    order = []
    queue = deque([root])
    seen = [False] * n
    seen[root] = True
    while queue:
        u = queue.popleft()
        order.append(u)
        for c in kids[u]:
            if not seen[c]:
                seen[c] = True
                queue.append(c)
    if len(order) != n:
        missing = next(v for v in range(n) if not seen[v])
        raise CycleDetectedError(
            f"node {missing} cannot reach the root (cycle or disconnected input)"
        )
    old_to_new = [0] * n
    for new, old in enumerate(order):
        old_to_new[old] = new
    new_anc = np.empty(n, dtype=np.int32)
    new_labs: list[LabelTuple] = [()] * n
    for old in range(n):
        new = old_to_new[old]
        new_anc[new] = ROOT_SENTINEL if old == root else old_to_new[anc[old]]
        new_labs[new] = labs[old]
    return LabelledTree(new_anc, tuple(new_labs)), old_to_new


def is_ancestor(tree: LabelledTree, u: int, v: int) -> bool:
    """True iff u strictly precedes v in the tree order (never for u == v)."""
    n = tree.node_count
    if not (0 <= u < n and 0 <= v < n):
        raise IndexError(f"node index out of range for tree of size {n}")
    if u >= v:
        # Topological ordering: an ancestor always has the smaller index.
        return False
    anc = tree.ancestors
    depths = tree.depths
    du = depths[u]
    while depths[v] > du:
        v = anc[v]
    return v == u


@dataclass(frozen=True)
class Matching:
    """Ordered list of node-index pairs, strictly descending in both trees."""

    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "pairs", tuple((int(u), int(v)) for u, v in self.pairs)
        )

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]


def validate_matching(g: LabelledTree, h: LabelledTree, m: Matching) -> bool:
    """Check both coordinate sequences are strictly increasing chains.

    Out-of-range pairs make the matching invalid rather than raising.
    """
    pairs = m.pairs if isinstance(m, Matching) else tuple(m)
    for u, v in pairs:
        if not (0 <= u < g.node_count and 0 <= v < h.node_count):
            return False
    for (u1, v1), (u2, v2) in zip(pairs, pairs[1:]):
        if not (is_ancestor(g, u1, u2) and is_ancestor(h, v1, v2)):
            return False
    return True


def score_matching(g: LabelledTree, h: LabelledTree, m: Matching, w) -> float:
    """Sum of w over the matched label pairs.  Raises on an invalid matching."""
    if not validate_matching(g, h, m):
        raise InvalidMatchingError("matching violates the two-sided chain order")
    pairs = m.pairs if isinstance(m, Matching) else tuple(m)
    return float(sum(w(g.labels[u], h.labels[v]) for u, v in pairs))


# ---------------------------------------------------------------------------
# Tree file format
# ---------------------------------------------------------------------------

def write_tree(tree: LabelledTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_tree(tree))


def format_tree(tree: LabelledTree) -> str:
    lines = []
    anc = tree.ancestors
    for v in range(tree.node_count):
        fields = [str(v), str(int(anc[v]))]
        fields.extend(tree.labels[v])
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def read_tree(path) -> LabelledTree:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_tree(fh.read(), source=str(path))


def parse_tree(text: str, source: str = "<string>") -> LabelledTree:
    ids: list[int] = []
    parents: list[int] = []
    labels: list[LabelTuple] = []
    arity = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise ParseError(
                "expected node_id, parent_id and at least one label column",
                location=f"{source} line {lineno}",
            )
        try:
            node = int(fields[0])
            parent = int(fields[1])
        except ValueError:
            raise ParseError(
                f"non-integer node or parent id {fields[:2]!r}",
                location=f"{source} line {lineno}",
            ) from None
        label = tuple(fields[2:])
        if arity is None:
            arity = len(label)
        elif len(label) != arity:
            raise ParseError(
                f"label arity {len(label)} differs from first row ({arity})",
                location=f"{source} line {lineno}",
            )
        ids.append(node)
        parents.append(parent)
        labels.append(label)
    if not ids:
        raise ParseError("no node records found", location=source)

    # Node ids need not be 0..n or sorted; normalize before build_tree.
    id_pos = {}
    for i, node in enumerate(ids):
        if node in id_pos:
            raise ParseError(f"duplicate node id {node}", location=source)
        id_pos[node] = i
    anc = []
    for i, parent in enumerate(parents):
        if parent == ROOT_SENTINEL:
            anc.append(ROOT_SENTINEL)
        elif parent in id_pos:
            anc.append(id_pos[parent])
        else:
            raise ParseError(f"unknown parent id {parent}", location=source)
    tree, _ = build_tree(anc, labels)
    return tree
