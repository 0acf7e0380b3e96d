"""Corpus-level workflows built on the pairwise matcher.

The unsupervised pipeline is three pluggable stages over a similarity
matrix S (S[i][j] = best matching score between trees i and j, diagonal =
self-match):

1. normalize_distances: D[i][j] = sqrt(1 - S[i][j] / sqrt(M[i] M[j])) with
   M[i] the row maximum, clamped into [0, 1] against floating-point spill;
2. embed_classical: deterministic classical multidimensional scaling;
3. cluster_kmedoids: seeded PAM-style swap descent, every point assigned.

The defaults are deterministic on purpose; plug in any other
embedder/clusterer with the same array contracts (the companion bridge
package does exactly that, by file exchange).

Also here: consensus exemplar extraction from matched label sequences
(center-star + majority columns) and featurization of trees against a
template library (score vector per tree plus a count of templates whose
match reaches a threshold).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _kernel
from .errors import (
    DegenerateRowError,
    DimsTooLargeError,
    DomainError,
    EmptyInputError,
    ParseError,
)
from .matching import match_basic
from .synth import sample_leaf_path
from .trees import LabelTuple, LabelledTree, Matching
from .weights import WeightSpec


# ---------------------------------------------------------------------------
# Pairwise similarity
# ---------------------------------------------------------------------------

@dataclass
class PairwiseResult:
    """Symmetric score matrix; matchings for i < j kept only on request."""

    scores: np.ndarray
    matchings: dict[tuple[int, int], Matching] | None = None


def pairwise_similarity(
    trees: Sequence[LabelledTree],
    w: WeightSpec,
    variant: str = "basic",
    *,
    keep_matchings: bool = False,
    threads: int | None = None,
) -> PairwiseResult:
    """All-pairs matching scores (plus self-match diagonal).

    Labels are encoded once against a shared vocabulary; unordered pairs
    are scheduled largest-first over a thread pool (the kernels drop the
    GIL).  ``variant`` may be "basic" or "subtree"; the subtree variant is
    much slower and meant for small corpora.
    """
    if len(trees) < 2:
        raise DomainError("pairwise similarity needs at least two trees")
    if variant not in ("basic", "subtree"):
        raise DomainError(f"unknown variant {variant!r}")
    n = len(trees)
    scores = np.zeros((n, n))
    matchings: dict[tuple[int, int], Matching] | None = (
        {} if keep_matchings else None
    )

    if variant == "subtree":
        from .matching import match_subtree

        for i in range(n):
            scores[i, i] = match_subtree(trees[i], trees[i], w).score
            for j in range(i + 1, n):
                res = match_subtree(trees[i], trees[j], w)
                scores[i, j] = scores[j, i] = res.score
                if matchings is not None:
                    matchings[(i, j)] = res.matching
        return PairwiseResult(scores, matchings)

    codes = w.encode_trees(trees)
    jobs = [(i, i) for i in range(n)] + [
        (i, j) for i in range(n) for j in range(i + 1, n)
    ]
    jobs.sort(key=lambda ij: -(len(trees[ij[0]]) * len(trees[ij[1]])))

    def score_pair(ij):
        i, j = ij
        if keep_matchings and i != j:
            res = match_basic(trees[i], trees[j], w)
            return ij, res.score, res.matching
        gi, gj = i, j
        if len(trees[gj]) > len(trees[gi]):
            gi, gj = gj, gi  # larger tree outer, smaller row in cache
        val = _kernel.forward_score(trees[gi], trees[gj], codes[gi], codes[gj])
        return ij, float(val), None

    workers = threads if threads is not None else (os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(score_pair, jobs))
    else:
        results = [score_pair(ij) for ij in jobs]
    for (i, j), val, matching in results:
        scores[i, j] = scores[j, i] = val
        if matchings is not None and i != j and matching is not None:
            matchings[(i, j)] = matching
    return PairwiseResult(scores, matchings)


# ---------------------------------------------------------------------------
# Normalizer, embedder, clusterer
# ---------------------------------------------------------------------------

def normalize_distances(similarity: np.ndarray) -> np.ndarray:
    """Row-max geometric normalization of a similarity matrix into [0, 1].

    Raises DegenerateRowError when a row is all zero (its scale M[i] would
    be undefined); the self-match diagonal normally prevents that.
    """
    s = np.asarray(similarity, dtype=float)
    m = s.max(axis=1)
    if (m <= 0).any():
        bad = int(np.argmax(m <= 0))
        raise DegenerateRowError(f"row {bad} has no positive similarity")
    ratio = s / np.sqrt(np.outer(m, m))
    np.clip(ratio, 0.0, 1.0, out=ratio)
    d = np.sqrt(1.0 - ratio)
    np.fill_diagonal(d, 0.0)
    return d


def embed_classical(distances: np.ndarray, dims: int) -> np.ndarray:
    """Classical multidimensional scaling to ``dims`` coordinates.

    Deterministic: eigenpairs of the double-centered squared-distance
    matrix, negative eigenvalues clamped to zero, and each axis's sign
    fixed so its largest-magnitude coordinate is positive.
    """
    d = np.asarray(distances, dtype=float)
    n = d.shape[0]
    if not 0 < dims < n:
        raise DimsTooLargeError(f"dims must be in [1, {n - 1}], got {dims}")
    j = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * j @ (d * d) @ j
    eigvals, eigvecs = np.linalg.eigh(b)
    order = np.argsort(eigvals)[::-1][:dims]
    lams = np.clip(eigvals[order], 0.0, None)
    # Axes whose eigenvalue is numerically zero carry no information; zero
    # them outright so duplicate inputs embed to identical points.
    if lams.size and lams[0] > 0:
        lams[lams < lams[0] * 1e-12] = 0.0
    coords = eigvecs[:, order] * np.sqrt(lams)
    for axis in range(dims):
        col = coords[:, axis]
        lead = int(np.argmax(np.abs(col)))
        if col[lead] < 0:
            coords[:, axis] = -col
    return coords


def cluster_kmedoids(
    data: np.ndarray,
    k: int,
    seed: int = 0,
    *,
    restarts: int = 10,
    precomputed: bool = False,
) -> np.ndarray:
    """PAM-style k-medoids partition; every point is assigned a cluster.

    ``data`` is either a coordinate matrix or, with ``precomputed=True``, a
    distance matrix.  Each restart draws initial medoids from its own
    seeded generator and runs best-improvement swap descent; the restart
    with the lowest total within-cluster distance wins.
    """
    x = np.asarray(data, dtype=float)
    if precomputed:
        d = x
    else:
        diff = x[:, None, :] - x[None, :, :]
        d = np.sqrt((diff * diff).sum(axis=2))
    n = d.shape[0]
    if not 1 <= k <= n:
        raise DomainError(f"k must be in [1, {n}]")

    def total_cost(medoids):
        return d[:, medoids].min(axis=1).sum()

    best_labels = None
    best_cost = np.inf
    for r in range(restarts):
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, r))))
        medoids = np.sort(gen.permutation(n)[:k])
        cost = total_cost(medoids)
        improved = True
        while improved:
            improved = False
            swap = None
            swap_cost = cost
            in_medoids = np.zeros(n, dtype=bool)
            in_medoids[medoids] = True
            for a in range(k):
                trial = medoids.copy()
                for o in range(n):
                    if in_medoids[o]:
                        continue
                    trial[a] = o
                    c = total_cost(trial)
                    if c < swap_cost:
                        swap_cost = c
                        swap = (a, o)
                trial[a] = medoids[a]
            if swap is not None:
                medoids = medoids.copy()
                medoids[swap[0]] = swap[1]
                medoids.sort()
                assert swap_cost <= cost  # swap descent never goes uphill
                cost = swap_cost
                improved = True
        if cost < best_cost:
            best_cost = cost
            best_labels = np.argmin(d[:, medoids], axis=1)
    return best_labels


# ---------------------------------------------------------------------------
# Exemplars
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Exemplar:
    """Consensus label sequence with per-position agreement fractions.

    ``support`` is the number of contributing sequences; ``agreement[t]``
    is the fraction of them that aligned a symbol onto position t of the
    consensus (only positions reaching half the support are kept).
    """

    labels: tuple[LabelTuple, ...]
    support: int
    agreement: tuple[float, ...]


def _lcs_table(a, b) -> np.ndarray:
    table = np.zeros((len(a) + 1, len(b) + 1), dtype=np.int32)
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i, j] = table[i - 1, j - 1] + 1
            elif table[i - 1, j] >= table[i, j - 1]:
                table[i, j] = table[i - 1, j]
            else:
                table[i, j] = table[i, j - 1]
    return table


def _lcs_align(center, seq) -> list[int | None]:
    """For each center position, the aligned seq position (or None)."""
    table = _lcs_table(center, seq)
    out: list[int | None] = [None] * len(center)
    i, j = len(center), len(seq)
    while i > 0 and j > 0:
        if center[i - 1] == seq[j - 1]:
            out[i - 1] = j - 1
            i -= 1
            j -= 1
        elif table[i - 1, j] >= table[i, j - 1]:
            i -= 1
        else:
            j -= 1
    return out


def extract_exemplar(matched_sequences: Sequence[Sequence[LabelTuple]]) -> Exemplar:
    """Center-star consensus of matched label sequences.

    The center is the sequence with the highest total pairwise common
    subsequence length (lowest index on ties); every sequence is aligned
    to it and consensus positions keep the center's symbol wherever at
    least half the sequences aligned something there.
    """
    seqs = [tuple(tuple(l) for l in s) for s in matched_sequences]
    if not seqs:
        raise EmptyInputError("no sequences to summarize")
    totals = [0] * len(seqs)
    for i in range(len(seqs)):
        for j in range(i + 1, len(seqs)):
            sc = int(_lcs_table(seqs[i], seqs[j])[-1, -1])
            totals[i] += sc
            totals[j] += sc
    center = seqs[int(np.argmax(totals))]
    occupancy = np.zeros(len(center), dtype=np.int64)
    for s in seqs:
        for pos, hit in enumerate(_lcs_align(center, s)):
            if hit is not None:
                occupancy[pos] += 1
    support = len(seqs)
    keep = [t for t in range(len(center)) if 2 * occupancy[t] >= support]
    return Exemplar(
        labels=tuple(center[t] for t in keep),
        support=support,
        agreement=tuple(occupancy[t] / support for t in keep),
    )


def cluster_exemplars(
    trees: Sequence[LabelledTree],
    labels,
    w: WeightSpec,
    *,
    max_pairs_per_cluster: int = 100,
) -> dict[int, Exemplar]:
    """One exemplar per cluster from within-cluster best matchings.

    Both sides of every matching contribute their matched label sequence.
    Clusters larger than the pair budget use a deterministic evenly-spaced
    subsample of the pair list.  Noise points (cluster -1) are skipped.
    """
    labels = np.asarray(labels)
    out: dict[int, Exemplar] = {}
    for cluster in sorted(set(int(c) for c in labels)):
        if cluster == -1:
            continue
        members = [int(i) for i in np.flatnonzero(labels == cluster)]
        if len(members) == 1:
            single = tuple(trees[members[0]].labels[v] for v in
                           trees[members[0]].ancestor_chain(trees[members[0]].leaves()[0]))
            out[cluster] = Exemplar(single, 1, (1.0,) * len(single))
            continue
        pairs = [
            (members[s], members[t])
            for s in range(len(members))
            for t in range(s + 1, len(members))
        ]
        if len(pairs) > max_pairs_per_cluster:
            idx = np.linspace(0, len(pairs) - 1, max_pairs_per_cluster).astype(int)
            pairs = [pairs[int(i)] for i in idx]
        sequences = []
        for a, b in pairs:
            res = match_basic(trees[a], trees[b], w)
            if not res.matching.pairs:
                continue
            sequences.append([trees[a].labels[u] for u, _ in res.matching])
            sequences.append([trees[b].labels[v] for _, v in res.matching])
        if sequences:
            out[cluster] = extract_exemplar(sequences)
    return out


# ---------------------------------------------------------------------------
# Template features
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TemplateFeatures:
    scores: np.ndarray           # X[i][j]: match score of tree i vs template j
    threshold_counts: np.ndarray  # S[i] = #{j : X[i][j] >= tau}
    tau: float


@dataclass(frozen=True)
class Template:
    tree: LabelledTree
    source_index: int
    source_path: tuple[int, ...]


def featurize_templates(
    trees: Sequence[LabelledTree],
    templates: Sequence[LabelledTree],
    w: WeightSpec,
    tau: float = 3.0,
    *,
    threads: int | None = None,
) -> TemplateFeatures:
    """Match every tree against every template; count scores reaching tau."""
    if not templates:
        raise EmptyInputError("need at least one template")
    all_codes = w.encode_trees(list(trees) + list(templates))
    tree_codes = all_codes[: len(trees)]
    template_codes = all_codes[len(trees):]
    x = np.zeros((len(trees), len(templates)))

    def row(i):
        vals = [
            _kernel.forward_score(trees[i], templates[j], tree_codes[i], template_codes[j])
            for j in range(len(templates))
        ]
        return i, vals

    workers = threads if threads is not None else (os.cpu_count() or 1)
    if workers > 1 and len(trees) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(len(trees))))
    else:
        rows = [row(i) for i in range(len(trees))]
    for i, vals in rows:
        x[i] = vals
    return TemplateFeatures(x, (x >= tau).sum(axis=1), float(tau))


def pick_random_templates(
    trees: Sequence[LabelledTree], count: int, seed: int
) -> list[Template]:
    """Uniformly sample (tree, root-to-leaf path) pairs as path templates."""
    if count < 1:
        raise DomainError("count must be >= 1")
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    out = []
    for _ in range(count):
        idx = int(gen.integers(len(trees)))
        path = sample_leaf_path(trees[idx], gen)
        anc = np.arange(-1, len(path) - 1, dtype=np.int32)
        labels = tuple(trees[idx].labels[v] for v in path)
        out.append(Template(LabelledTree(anc, labels), idx, tuple(path)))
    return out


# ---------------------------------------------------------------------------
# File formats: matrices, embeddings, partitions, exemplars
# ---------------------------------------------------------------------------

def save_matrix(matrix: np.ndarray, path) -> None:
    m = np.asarray(matrix, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={m.shape[0]}\n")
        for row in m:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def load_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [l.strip() for l in fh if l.strip() and not l.startswith("#")]
    if not lines or not lines[0].startswith("n="):
        raise ParseError("matrix file must start with an 'n=<size>' header",
                         location=str(path))
    try:
        n = int(lines[0][2:])
        rows = [[float(x) for x in line.split(",")] for line in lines[1:]]
    except ValueError:
        raise ParseError("non-numeric matrix entry", location=str(path)) from None
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ParseError(f"expected {n} rows of {n} entries", location=str(path))
    return np.asarray(rows)


def save_embedding(coords: np.ndarray, path, comments: Sequence[str] = ()) -> None:
    c = np.asarray(coords, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("id," + ",".join(f"x{i + 1}" for i in range(c.shape[1])) + "\n")
        for idx, row in enumerate(c):
            fh.write(str(idx) + "," + ",".join(format(x, ".17g") for x in row) + "\n")


def load_embedding(path) -> tuple[list[int], np.ndarray]:
    ids, rows = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("id,"):
                continue
            fields = line.split(",")
            ids.append(int(fields[0]))
            rows.append([float(x) for x in fields[1:]])
    return ids, np.asarray(rows)


def save_partition(labels, path, comments: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("id,cluster\n")
        for idx, lab in enumerate(labels):
            fh.write(f"{idx},{int(lab)}\n")


def load_partition(path) -> tuple[list[int], list[int]]:
    ids, labels = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("id,"):
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ParseError("expected 'id,cluster' rows",
                                 location=f"{path} line {lineno}")
            ids.append(int(fields[0]))
            labels.append(int(fields[1]))
    return ids, labels


def save_exemplar(exemplar: Exemplar, path, comments: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(f"# support = {exemplar.support}\n")
        fh.write("position\tagreement\tlabel\n")
        for t, (label, agree) in enumerate(zip(exemplar.labels, exemplar.agreement)):
            fh.write(f"{t}\t{agree:.6f}\t" + "\t".join(label) + "\n")


def load_exemplar(path) -> Exemplar:
    support = 1
    labels: list[LabelTuple] = []
    agreement: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# support ="):
                support = int(line.split("=")[1])
                continue
            if not line.strip() or line.startswith("#") or line.startswith("position\t"):
                continue
            fields = line.split("\t")
            agreement.append(float(fields[1]))
            labels.append(tuple(fields[2:]))
    return Exemplar(tuple(labels), support, tuple(agreement))
