"""Process-tree construction from endpoint telemetry edge tables.

Input is a delimited text table with one process record per line carrying a
process id hash, its parent's id hash, a process name and a user name (both
names are frequently blank; blanks are preserved, never imputed).  Records
define parent-to-child edges of a large directed graph whose connected
components are the process trees.

Real logs are not clean, so construction repairs anomalies and counts them:

* duplicate (pid, parent) edges are dropped;
* a pid reporting two distinct parents keeps the first-seen parent;
* a record whose parent is itself becomes a root;
* cycles (only possible among nodes unreachable from any root) are broken
  by cutting the parent link of the first cycle node discovered, which
  becomes a root;
* a weak component left with several roots after repair is split into one
  tree per root.

Under strict mode any repair is an error instead of a warning.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Sequence

import numpy as np

from .errors import DataIntegrityError, EmptyInputError, ParseError
from .trees import LabelTuple, LabelledTree

logger = logging.getLogger(__name__)

RECORD_FIELDS = ("pid_hash", "parent_pid_hash", "process_name", "user_name")
DEFAULT_COLUMNS: Mapping[str, str] = {f: f for f in RECORD_FIELDS}


@dataclass(frozen=True)
class ProcessRecord:
    pid_hash: str
    parent_pid_hash: str
    process_name: str
    user_name: str


@dataclass
class TreeMeta:
    nodes: int
    depth: int
    root_label: LabelTuple
    has_bad_user: bool


@dataclass
class IngestManifest:
    source: str
    source_sha256: str
    ingested_at: str
    delimiter: str
    trees: list[TreeMeta] = field(default_factory=list)
    warnings: dict[str, int] = field(default_factory=dict)

    @property
    def tree_total(self) -> int:
        return len(self.trees)

    @property
    def node_total(self) -> int:
        return sum(t.nodes for t in self.trees)

    @property
    def edge_total(self) -> int:
        # Every tree of n nodes carries n - 1 retained parent-child edges.
        return sum(t.nodes - 1 for t in self.trees)


def _column_indices(header, column_map, source):
    indices = {}
    for fld in RECORD_FIELDS:
        key = column_map.get(fld, fld)
        if isinstance(key, int):
            indices[fld] = key
        else:
            try:
                indices[fld] = header.index(key)
            except ValueError:
                raise ParseError(
                    f"column {key!r} (for {fld}) not in header {header}",
                    location=f"{source} line 1",
                ) from None
    return indices


def read_process_records(
    path,
    column_map: Mapping[str, str | int] | None = None,
    delimiter: str = ",",
) -> list[ProcessRecord]:
    """Parse an edge table.  A header row is required unless every mapped
    column is given as an integer position."""
    column_map = dict(column_map or DEFAULT_COLUMNS)
    headerless = all(isinstance(v, int) for v in column_map.values()) and len(
        column_map
    ) == len(RECORD_FIELDS)
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        indices = None
        if headerless:
            indices = {f: int(column_map[f]) for f in RECORD_FIELDS}
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            if indices is None:
                indices = _column_indices(row, column_map, str(path))
                continue
            needed = max(indices.values())
            if len(row) <= needed:
                raise ParseError(
                    f"expected at least {needed + 1} columns, got {len(row)}",
                    location=f"{path} line {lineno}",
                )
            records.append(
                ProcessRecord(
                    pid_hash=row[indices["pid_hash"]].strip(),
                    parent_pid_hash=row[indices["parent_pid_hash"]].strip(),
                    process_name=row[indices["process_name"]],
                    user_name=row[indices["user_name"]],
                )
            )
    if not records:
        raise EmptyInputError(f"no process records in {path}")
    return records


def build_forest(records: Sequence[ProcessRecord]) -> tuple[list[LabelledTree], dict[str, int]]:
    """Repair the edge set and return one LabelledTree per root."""
    warnings = {
        "duplicate_records": 0,
        "duplicate_edges": 0,
        "multi_parent": 0,
        "self_parent": 0,
        "cycle_broken": 0,
        "blank_pid": 0,
        "orphan_parent": 0,
    }
    # Nodes are exactly the pids that carry a record; a parent hash that
    # never appears as a pid is dropped and its children root their own
    # components.
    index: dict[str, int] = {}
    labels: list[LabelTuple] = []
    for rec in records:
        if not rec.pid_hash:
            warnings["blank_pid"] += 1
            continue
        if rec.pid_hash in index:
            warnings["duplicate_records"] += 1
            continue
        index[rec.pid_hash] = len(labels)
        labels.append((rec.process_name, rec.user_name))

    parent = [-1] * len(labels)
    seen_edges: set[tuple[int, int]] = set()
    for rec in records:
        if not rec.pid_hash or not rec.parent_pid_hash:
            continue
        if rec.parent_pid_hash == rec.pid_hash:
            warnings["self_parent"] += 1
            continue
        child = index[rec.pid_hash]
        par = index.get(rec.parent_pid_hash)
        if par is None:
            warnings["orphan_parent"] += 1
            continue
        if (child, par) in seen_edges:
            warnings["duplicate_edges"] += 1
            continue
        seen_edges.add((child, par))
        if parent[child] == -1:
            parent[child] = par
        elif parent[child] != par:
            warnings["multi_parent"] += 1
            logger.warning(
                "pid %s reports second parent %s; keeping first-seen parent",
                rec.pid_hash, rec.parent_pid_hash,
            )

    n = len(labels)
    children: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        if parent[v] != -1:
            children[parent[v]].append(v)

    visited = [False] * n
    roots = [v for v in range(n) if parent[v] == -1]

    def bfs(root: int) -> list[int]:
        order = [root]
        visited[root] = True
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for c in children[u]:
                if not visited[c]:
                    visited[c] = True
                    order.append(c)
                    queue.append(c)
        return order

    components = [bfs(r) for r in roots]

    # Anything still unvisited sits on (or hangs off) a parent cycle: walk
    # upward until a node repeats, cut that node's parent link, re-root.
    for v in range(n):
        if visited[v]:
            continue
        walk_pos: dict[int, int] = {}
        x = v
        while x not in walk_pos and not visited[x]:
            walk_pos[x] = len(walk_pos)
            x = parent[x]
        if not visited[x]:
            children[parent[x]].remove(x)
            parent[x] = -1
            warnings["cycle_broken"] += 1
            logger.warning("cycle broken at node %d; it becomes a root", x)
            components.append(bfs(x))

    trees = []
    for order in components:
        remap = {old: new for new, old in enumerate(order)}
        anc = np.empty(len(order), dtype=np.int32)
        labs = []
        for new, old in enumerate(order):
            anc[new] = -1 if parent[old] == -1 else remap[parent[old]]
            labs.append(labels[old])
        trees.append(LabelledTree(anc, tuple(labs)))
    return trees, warnings


def ingest_edge_table(
    path,
    column_map: Mapping[str, str | int] | None = None,
    delimiter: str = ",",
    *,
    strict: bool = False,
) -> tuple[list[LabelledTree], IngestManifest]:
    """Full ingestion: parse, repair, convert, summarize."""
    records = read_process_records(path, column_map, delimiter)
    trees, warnings = build_forest(records)
    if strict:
        # Orphan parents are expected in captured telemetry (the parent
        # exited before collection began); everything else repaired data.
        raised = {
            k: v for k, v in warnings.items() if v and k != "orphan_parent"
        }
        if raised:
            raise DataIntegrityError(f"telemetry needed repairs: {raised}")
    sha = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            sha.update(chunk)
    manifest = IngestManifest(
        source=str(path),
        source_sha256=sha.hexdigest(),
        ingested_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        delimiter=delimiter,
        warnings=warnings,
    )
    for tree in trees:
        users = [lab[1] for lab in tree.labels]
        manifest.trees.append(
            TreeMeta(
                nodes=tree.node_count,
                depth=tree.depth,
                root_label=tree.labels[0],
                has_bad_user=any(u.startswith("bad") for u in users),
            )
        )
    return trees, manifest


def default_root_name_filter(name: str) -> bool:
    return bool(name.strip()) and name.strip().lower() != "unknown"


def extract_subtrees(
    trees: Sequence[LabelledTree],
    min_size: int = 3,
    max_size: int = 10000,
    min_subtree_size: int = 3,
    root_name_filter=None,
) -> list[LabelledTree]:
    """Every node-rooted full subtree passing the size and root-name rules.

    Trees outside [min_size, max_size] are skipped entirely.  The root-name
    predicate sees the first label component (the process name); the
    default accepts anything nonblank and not "unknown".
    """
    if min_size > max_size:
        raise ValueError("min_size must not exceed max_size")
    accept = root_name_filter or default_root_name_filter
    out = []
    for tree in trees:
        if not min_size <= tree.node_count <= max_size:
            continue
        sizes = tree.subtree_sizes
        kids = tree.children
        for v in range(tree.node_count):
            if sizes[v] < min_subtree_size or not accept(tree.labels[v][0]):
                continue
            order = [v]
            queue = deque([v])
            while queue:
                u = queue.popleft()
                for c in kids[u]:
                    order.append(c)
                    queue.append(c)
            remap = {old: new for new, old in enumerate(order)}
            anc = np.empty(len(order), dtype=np.int32)
            labs = []
            for new, old in enumerate(order):
                par = int(tree.ancestors[old])
                anc[new] = -1 if old == v else remap[par]
                labs.append(tree.labels[old])
            out.append(LabelledTree(anc, tuple(labs)))
    return out


# ---------------------------------------------------------------------------
# Manifest file
# ---------------------------------------------------------------------------

def save_ingest_manifest(manifest: IngestManifest, names: Sequence[str], path) -> None:
    if len(names) != len(manifest.trees):
        raise ValueError("one file name per tree required")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# ingested process-tree corpus\n")
        fh.write("format = treematch-ingest/1\n")
        fh.write(f"source = {manifest.source}\n")
        fh.write(f"source_sha256 = {manifest.source_sha256}\n")
        fh.write(f"ingested_at = {manifest.ingested_at}\n")
        fh.write(f"delimiter = {manifest.delimiter!r}\n")
        fh.write(f"trees = {manifest.tree_total}\n")
        fh.write(f"nodes = {manifest.node_total}\n")
        fh.write(f"edges = {manifest.edge_total}\n")
        for key, value in sorted(manifest.warnings.items()):
            fh.write(f"warning_{key} = {value}\n")
        fh.write("\n[trees]\n")
        fh.write("file\tnodes\tdepth\troot_process\troot_user\tbad_user\n")
        for name, meta in zip(names, manifest.trees):
            fh.write(
                f"{name}\t{meta.nodes}\t{meta.depth}\t"
                f"{meta.root_label[0]}\t{meta.root_label[1]}\t"
                f"{int(meta.has_bad_user)}\n"
            )
