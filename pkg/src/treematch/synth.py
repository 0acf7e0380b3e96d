"""Synthetic planted-path corpora with known ground truth.

Pieces, composable or used through ``sample_toy_corpus``:

* depth-conditioned random tree skeletons: every node spawns a Poisson
  number of children, truncated at depth N, rejection-resampled until the
  last level is populated (supercritical mean keeps retries rare);
* a uniformly random root-to-leaf path;
* planting: a random subsequence of a base label sequence is written onto a
  random subset of the path, every other node label drawn i.i.d. from a
  background distribution, so label *counts* carry no signal;
* the multi-class model: each class plants an independent uniformly random
  permutation of one shared base sequence, which makes the per-tree label
  multiset distribution identical across classes by construction.

Randomness contract: all draws come from numpy ``Generator`` instances over
the counter-based Philox bit generator.  Each observation (class i, index
j) derives its generator from ``SeedSequence((seed, i, j))`` and each class
permutation from ``SeedSequence((seed, i))``, so corpora are reproducible
and order-independent.  Poisson child counts use plain inversion of a
single uniform per node (exact for the small means used here); the
algorithm identifiers and numpy version are recorded in corpus manifests.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from . import config as _config
from .errors import DomainError, ParseError, PathNotChainError, RetriesExhaustedError
from .trees import LabelTuple, LabelledTree, read_tree, write_tree

RNG_NOTE = "numpy Generator over Philox 4x64; Poisson by inversion"


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if not isinstance(rng, np.random.SeedSequence):
        rng = np.random.SeedSequence(rng)
    return np.random.Generator(np.random.Philox(rng))


def observation_rng(seed: int, class_index: int, obs_index: int) -> np.random.Generator:
    """Independent per-observation generator; order of use is irrelevant."""
    return _generator(np.random.SeedSequence((seed, class_index, obs_index)))


def class_rng(seed: int, class_index: int) -> np.random.Generator:
    return _generator(np.random.SeedSequence((seed, class_index)))


def _poisson_counts(gen: np.random.Generator, lam: float, size: int) -> np.ndarray:
    """Poisson draws by inversion, one uniform per draw (lam <= 30)."""
    if lam > 30:  # far outside the intended regime; numpy's sampler is fine
        return gen.poisson(lam, size)
    u = gen.random(size)
    p = np.full(size, math.exp(-lam))
    cum = p.copy()
    counts = np.zeros(size, dtype=np.int64)
    active = u > cum
    while active.any():
        counts[active] += 1
        p[active] *= lam / counts[active]
        cum[active] += p[active]
        active = u > cum
    return counts


# ---------------------------------------------------------------------------
# Tree and path sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GWSpec:
    """Depth-conditioned Poisson branching tree.

    max_depth N >= 0; mean_children > 1 so that an attempt survives to
    depth N with probability bounded away from zero and rejection ends
    quickly.
    """

    max_depth: int
    mean_children: float
    max_retries: int = 10000

    def __post_init__(self):
        if self.max_depth < 0:
            raise DomainError("max_depth must be >= 0")
        if self.mean_children <= 1.0:
            raise DomainError("mean_children must be > 1 (supercritical)")
        if self.max_retries < 1:
            raise DomainError("max_retries must be >= 1")


@dataclass(frozen=True)
class GWSample:
    tree: LabelledTree  # skeleton: labels are empty single-component tuples
    attempts: int


def sample_gw_tree(spec: GWSpec, rng) -> GWSample:
    """One tree of depth exactly max_depth, conditioned by rejection.

    Nodes at the final level get no children (the process is truncated
    there); an attempt fails as soon as a level comes up empty.
    """
    gen = _generator(rng)
    for attempt in range(1, spec.max_retries + 1):
        ancestors = [-1]
        level = [0]
        alive = True
        for _ in range(spec.max_depth):
            counts = _poisson_counts(gen, spec.mean_children, len(level))
            nxt = []
            for node, c in zip(level, counts):
                for _ in range(int(c)):
                    ancestors.append(node)
                    nxt.append(len(ancestors) - 1)
            if not nxt:
                alive = False
                break
            level = nxt
        if alive:
            tree = LabelledTree(
                np.asarray(ancestors, dtype=np.int32),
                (("",),) * len(ancestors),
            )
            return GWSample(tree, attempt)
    raise RetriesExhaustedError(
        f"no depth-{spec.max_depth} tree in {spec.max_retries} attempts",
        attempts=spec.max_retries,
    )


def extinction_probability(lam: float) -> float:
    """The root q in (0, 1) of q = exp(lam * (q - 1)) for lam > 1.

    1 - q bounds from below the per-attempt success rate of the rejection
    sampler, whatever the depth.  Fixed-point iteration from 0 converges to
    the smallest fixed point, which is the extinction probability.
    """
    if lam <= 1.0:
        raise DomainError("extinction probability is 1 for lam <= 1")
    q = 0.0
    for _ in range(100000):
        q_next = math.exp(lam * (q - 1.0))
        if abs(q_next - q) <= 1e-10:
            return q_next
        q = q_next
    return q


def sample_leaf_path(tree: LabelledTree, rng) -> list[int]:
    """Root-to-leaf chain for a uniformly chosen leaf."""
    gen = _generator(rng)
    leaves = tree.leaves()
    leaf = leaves[int(gen.integers(len(leaves)))]
    return tree.ancestor_chain(leaf)


# ---------------------------------------------------------------------------
# Planting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlantSpec:
    """Inputs for planting one base sequence into one (tree, path) pair."""

    alphabet: tuple[str, ...]
    distribution: tuple[float, ...]
    base_sequence: tuple[str, ...]
    observation_probability: float = 1.0
    rate: Mapping[str, float] | None = None  # None means constant rate

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "distribution", tuple(float(x) for x in self.distribution))
        object.__setattr__(self, "base_sequence", tuple(self.base_sequence))
        if len(self.alphabet) != len(self.distribution):
            raise DomainError("distribution length must match alphabet")
        if any(x < 0 for x in self.distribution) or abs(sum(self.distribution) - 1.0) > 1e-9:
            raise DomainError("distribution must be a probability vector")
        p = self.observation_probability
        if not 0.0 < p <= 1.0:
            raise DomainError("observation probability must be in (0, 1]")
        unknown = set(self.base_sequence) - set(self.alphabet)
        if unknown:
            raise DomainError(f"base sequence symbols not in alphabet: {unknown}")
        if self.rate is not None:
            if set(self.rate) < set(self.alphabet) or any(
                r <= 0 for r in self.rate.values()
            ):
                raise DomainError("rate must assign a positive value to every symbol")

    def rate_of(self, symbol: str) -> float:
        return 1.0 if self.rate is None else float(self.rate[symbol])


@dataclass(frozen=True)
class PlantResult:
    labels: tuple[LabelTuple, ...]
    path_positions: tuple[int, ...]      # indices into the path (sorted)
    sequence_indices: tuple[int, ...]    # indices into base_sequence (sorted)


def plant_labels(tree: LabelledTree, path: Sequence[int], spec: PlantSpec, rng) -> PlantResult:
    """Label a tree skeleton, hiding part of the base sequence on the path.

    The number of planted symbols is Binomial(len(path), p) capped at the
    sequence length; their path slots are a uniform subset, their sequence
    slots a subset weighted by the per-symbol rate (sequential weighted
    draws without replacement, exactly uniform for a constant rate), and
    both are consumed in increasing order, so the planted labels read along
    the path as an order-preserving subsequence of the base sequence.
    Every other node gets an i.i.d. draw from the background distribution.
    """
    gen = _generator(rng)
    path = list(path)
    for a, b in zip(path, path[1:]):
        x = b
        anc = tree.ancestors
        while x != -1 and x != a:
            x = int(anc[x])
        if x != a:
            raise PathNotChainError(f"{a} is not an ancestor of {b}")
    ell = len(path)
    k = len(spec.base_sequence)

    n_prime = int((gen.random(ell) < spec.observation_probability).sum())
    n_plant = min(n_prime, k)
    s1 = np.sort(gen.permutation(ell)[:n_plant])

    weights = np.array([spec.rate_of(s) for s in spec.base_sequence])
    chosen: list[int] = []
    available = list(range(k))
    for _ in range(n_plant):
        w = weights[available]
        cum = np.cumsum(w)
        x = gen.random() * cum[-1]
        idx = int(np.searchsorted(cum, x, side="right"))
        idx = min(idx, len(available) - 1)
        chosen.append(available.pop(idx))
    s2 = sorted(chosen)

    # Background labels for every node (planted slots overwritten below).
    cum_pi = np.cumsum(spec.distribution)
    draws = np.searchsorted(cum_pi, gen.random(tree.node_count), side="right")
    draws = np.minimum(draws, len(spec.alphabet) - 1)
    # One shared tuple per symbol keeps big corpora at pointer cost.
    pool = [(sym,) for sym in spec.alphabet]
    labels = [pool[int(i)] for i in draws]
    pool_by_sym = {sym: (sym,) for sym in spec.alphabet}
    for pos, seq_idx in zip(s1, s2):
        labels[path[int(pos)]] = pool_by_sym[spec.base_sequence[seq_idx]]
    return PlantResult(tuple(labels), tuple(int(x) for x in s1), tuple(s2))


# ---------------------------------------------------------------------------
# Multi-class toy corpora
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToyModelSpec:
    """Corpus recipe: (tree, path) source, planting inputs, class sizes."""

    tree_path_source: GWSpec | tuple
    plant: PlantSpec
    class_sizes: tuple[int, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "class_sizes", tuple(int(n) for n in self.class_sizes))
        if not self.class_sizes or any(n < 1 for n in self.class_sizes):
            raise DomainError("every class needs at least one observation")


@dataclass(frozen=True)
class PlantedCorpus:
    trees: tuple[LabelledTree, ...]
    paths: tuple[tuple[int, ...], ...]
    class_of: tuple[int, ...]
    permutations: tuple[tuple[int, ...], ...]  # one per class, 0-based
    seed: int
    spec: ToyModelSpec | None = None

    def __len__(self) -> int:
        return len(self.trees)


def sample_toy_corpus(spec: ToyModelSpec) -> PlantedCorpus:
    """Sample every class's permuted planting; deterministic given the seed."""
    k = len(spec.plant.base_sequence)
    permutations = []
    trees: list[LabelledTree] = []
    paths: list[tuple[int, ...]] = []
    class_of: list[int] = []
    for i, n_i in enumerate(spec.class_sizes):
        sigma = tuple(int(x) for x in class_rng(spec.seed, i).permutation(k))
        permutations.append(sigma)
        permuted = tuple(spec.plant.base_sequence[s] for s in sigma)
        plant_spec = replace(spec.plant, base_sequence=permuted)
        for j in range(n_i):
            gen = observation_rng(spec.seed, i, j)
            if isinstance(spec.tree_path_source, GWSpec):
                skeleton = sample_gw_tree(spec.tree_path_source, gen).tree
                path = sample_leaf_path(skeleton, gen)
            else:
                pick = int(gen.integers(len(spec.tree_path_source)))
                skeleton, path = spec.tree_path_source[pick]
            planted = plant_labels(skeleton, path, plant_spec, gen)
            trees.append(skeleton.with_labels(planted.labels))
            paths.append(tuple(int(x) for x in path))
            class_of.append(i)
    return PlantedCorpus(
        tuple(trees), tuple(paths), tuple(class_of), tuple(permutations),
        spec.seed, spec,
    )


# ---------------------------------------------------------------------------
# Recovery heuristic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecoveryMargin:
    lhs: float
    rhs: float
    recoverable: bool


def recovery_margin(p: float, k: int, m: int, d: int) -> RecoveryMargin:
    """Back-of-envelope check that a planted path should outscore noise.

    For resampling noise p, alphabet size k, branching m and depth d: a
    planted-path node pair still matches with probability
    q = (1-p)^2 + (1 - (1-p)^2)/k, so the planted match scores about q*d,
    while the best of the ~m^d off-path matchings reaches about
    (1/k + sqrt(2 ln(m)/k)) * d.  Recovery is plausible when the former
    clearly exceeds the latter.  Heuristic only: constants and lower-order
    terms are ignored.
    """
    if not 0.0 < p < 1.0:
        raise DomainError("p must be in (0, 1)")
    if k < 2 or m < 2 or d < 1:
        raise DomainError("need k >= 2, m >= 2, d >= 1")
    q = (1.0 - p) ** 2 + (1.0 - (1.0 - p) ** 2) / k
    lhs = q * d
    rhs = (1.0 / k + math.sqrt(2.0 * math.log(m) / k)) * d
    return RecoveryMargin(lhs, rhs, lhs > rhs)


# ---------------------------------------------------------------------------
# Corpus directory layout: one tree file per observation plus manifest.txt
# ---------------------------------------------------------------------------

MANIFEST_NAME = "manifest.txt"
_OBS_HEADER = "file\tclass\tpermutation\tpath\tsubseed"


def save_corpus(corpus: PlantedCorpus, dirpath) -> None:
    os.makedirs(dirpath, exist_ok=True)
    width = max(5, len(str(len(corpus.trees))))
    names = []
    for idx, tree in enumerate(corpus.trees):
        name = f"obs_{idx:0{width}d}.tree"
        names.append(name)
        write_tree(tree, os.path.join(dirpath, name))

    pairs = [
        ("format", "treematch-corpus/1"),
        ("rng", RNG_NOTE),
        ("numpy", np.__version__),
        ("seed", str(corpus.seed)),
        ("classes", str(len(corpus.permutations))),
    ]
    spec = corpus.spec
    if spec is not None:
        plant = spec.plant
        pairs += [
            ("class_sizes", ",".join(str(n) for n in spec.class_sizes)),
            ("alphabet", ",".join(plant.alphabet)),
            ("pi", ",".join(format(x, "g") for x in plant.distribution)),
            ("base_sequence", ",".join(plant.base_sequence)),
            ("p", format(plant.observation_probability, "g")),
        ]
        if plant.rate is not None:
            pairs.append(
                ("rate", ",".join(format(plant.rate_of(s), "g") for s in plant.alphabet))
            )
        if isinstance(spec.tree_path_source, GWSpec):
            gw = spec.tree_path_source
            pairs += [
                ("source", "gw"),
                ("gw_depth", str(gw.max_depth)),
                ("gw_branching", format(gw.mean_children, "g")),
                ("gw_max_retries", str(gw.max_retries)),
            ]
        else:
            pairs.append(("source", "fixed"))
    for i, sigma in enumerate(corpus.permutations):
        pairs.append((f"permutation_{i}", ",".join(str(s) for s in sigma)))

    lines = [_config.format_kv(pairs), "\n[observations]\n", _OBS_HEADER + "\n"]
    counts = [0] * len(corpus.permutations)
    for idx, name in enumerate(names):
        cls = corpus.class_of[idx]
        sigma = corpus.permutations[cls]
        path = ",".join(str(v) for v in corpus.paths[idx])
        subseed = f"{corpus.seed},{cls},{counts[cls]}"
        counts[cls] += 1
        perm = ",".join(str(s) for s in sigma)
        lines.append(f"{name}\t{cls}\t{perm}\t{path}\t{subseed}\n")
    with open(os.path.join(dirpath, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        fh.writelines(lines)


def load_corpus(dirpath) -> PlantedCorpus:
    manifest = os.path.join(dirpath, MANIFEST_NAME)
    pairs, sections = _config.read_kv_file(manifest)
    kv = dict(pairs)
    seed = int(kv.get("seed", "0"))
    n_classes = int(kv.get("classes", "0"))
    permutations = tuple(
        tuple(_config.get_int_list(kv[f"permutation_{i}"]))
        for i in range(n_classes)
        if f"permutation_{i}" in kv
    )
    rows = [r for r in sections.get("observations", []) if r.strip()]
    if rows and rows[0].strip() == _OBS_HEADER.strip():
        rows = rows[1:]
    trees, paths, class_of = [], [], []
    for row in rows:
        fields = row.rstrip("\n").split("\t")
        if len(fields) != 5:
            raise ParseError(f"bad observation row {row!r}", location=manifest)
        name, cls, _perm, path, _subseed = fields
        trees.append(read_tree(os.path.join(dirpath, name)))
        paths.append(tuple(int(x) for x in path.split(",")) if path else ())
        class_of.append(int(cls))
    spec = _spec_from_manifest(kv)
    return PlantedCorpus(
        tuple(trees), tuple(paths), tuple(class_of), permutations, seed, spec,
    )


def _spec_from_manifest(kv) -> ToyModelSpec | None:
    if kv.get("source") != "gw" or "alphabet" not in kv:
        return None
    alphabet = tuple(_config.get_str_list(kv["alphabet"]))
    rates = _config.get_float_list(kv.get("rate", ""), "manifest") if kv.get("rate") else None
    plant = PlantSpec(
        alphabet=alphabet,
        distribution=tuple(_config.get_float_list(kv["pi"], "manifest")),
        base_sequence=tuple(_config.get_str_list(kv["base_sequence"])),
        observation_probability=float(kv["p"]),
        rate=dict(zip(alphabet, rates)) if rates else None,
    )
    gw = GWSpec(
        max_depth=int(kv["gw_depth"]),
        mean_children=float(kv["gw_branching"]),
        max_retries=int(kv.get("gw_max_retries", "10000")),
    )
    return ToyModelSpec(
        tree_path_source=gw,
        plant=plant,
        class_sizes=tuple(_config.get_int_list(kv["class_sizes"])),
        seed=int(kv["seed"]),
    )


def toy_spec_from_config(pairs, source="<config>") -> ToyModelSpec:
    """Build a ToyModelSpec from gen-config key-value pairs.

    Recognized keys: seed, classes, per_class (int or comma list),
    alphabet, pi (comma list or "uniform"), base_sequence (comma list) or
    base_length (sampled from pi with a seed-derived generator), p, rate
    (comma list or "uniform"), depth, branching, max_retries.
    """
    kv = dict(pairs)
    try:
        seed = int(kv["seed"])
        alphabet = tuple(_config.get_str_list(kv["alphabet"]))
        depth = int(kv["depth"])
        branching = float(kv["branching"])
        p = float(kv["p"])
    except KeyError as exc:
        raise ParseError(f"missing required key {exc.args[0]!r}", location=source)
    pi_raw = kv.get("pi", "uniform")
    if pi_raw == "uniform":
        pi = (1.0 / len(alphabet),) * len(alphabet)
    else:
        pi = tuple(_config.get_float_list(pi_raw, source))
    rate_raw = kv.get("rate", "uniform")
    rate = None
    if rate_raw != "uniform":
        rate = dict(zip(alphabet, _config.get_float_list(rate_raw, source)))
    if "base_sequence" in kv:
        base = tuple(_config.get_str_list(kv["base_sequence"]))
    else:
        length = int(kv.get("base_length", "10"))
        gen = _generator(np.random.SeedSequence((seed, 0xBA5E)))
        cum = np.cumsum(pi)
        idx = np.minimum(
            np.searchsorted(cum, gen.random(length), side="right"),
            len(alphabet) - 1,
        )
        base = tuple(alphabet[int(i)] for i in idx)
    n_classes = int(kv.get("classes", "1"))
    per_class = kv.get("per_class", "1")
    sizes = _config.get_int_list(per_class, source)
    if len(sizes) == 1:
        sizes = sizes * n_classes
    if len(sizes) != n_classes:
        raise ParseError("per_class list length must equal classes", location=source)
    plant = PlantSpec(
        alphabet=alphabet, distribution=pi, base_sequence=base,
        observation_probability=p, rate=rate,
    )
    gw = GWSpec(depth, branching, int(kv.get("max_retries", "10000")))
    return ToyModelSpec(gw, plant, tuple(sizes), seed)
