"""Command-line surface.

Subcommands: gen, match, simmatrix, embed, cluster, exemplar, featurize,
ingest, subtrees, hist.  Exit codes: 0 success, 2 usage error, 3 parse
error, 4 data-integrity error (repairs found under --strict), 1 any other
failure.  Errors print one line "E_<CODE>: detail" to stderr.

Environment: TREEMATCH_OUT prefixes relative output paths, TREEMATCH_LOG
sets the log level; no other variables are consulted.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import logging
import os
import sys

import numpy as np

from . import __version__, config as _config, pipeline, synth
from .errors import DataIntegrityError, ParseError, TreematchError
from .ingest import (
    extract_subtrees,
    ingest_edge_table,
    save_ingest_manifest,
)
from .matching import (
    format_match_record,
    match_basic,
    match_gap_limited,
    match_length_indexed,
    match_record_json,
    match_subtree,
    match_top_k,
    similarity_score,
)
from .trees import read_tree, write_tree
from .weights import (
    WeightSpec,
    frequency_weight,
    indicator_weight,
    parse_weight_config,
    read_frequency_table,
)

logger = logging.getLogger("treematch")


def _outpath(path: str) -> str:
    base = os.environ.get("TREEMATCH_OUT")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _load_weights(arg: str, trees=None):
    """Weight spec from a config file path or a bare kind name.

    A frequency spec without a fitted table is fitted on ``trees``.
    """
    if os.path.exists(arg):
        pairs, _ = _config.read_kv_file(arg)
        spec, table_path = parse_weight_config(pairs, source=arg)
        if spec.kind == "frequency":
            if table_path:
                table = read_frequency_table(
                    os.path.join(os.path.dirname(arg), table_path)
                )
                return WeightSpec(kind="frequency", frequency_table=table)
            if trees is None:
                raise ParseError(
                    "frequency weights need a table or a corpus to fit on",
                    location=arg,
                )
            return frequency_weight(trees)
        return spec
    if arg == "indicator":
        return indicator_weight()
    if arg == "frequency":
        if trees is None:
            raise ParseError("frequency weights need a corpus to fit on")
        return frequency_weight(trees)
    raise ParseError(f"unknown weight spec {arg!r} (not a file or kind name)")


def _load_corpus_dir(path):
    """Return (names, trees, classes or None) for any corpus directory."""
    manifest = os.path.join(path, synth.MANIFEST_NAME)
    if os.path.exists(manifest):
        pairs, sections = _config.read_kv_file(manifest)
        if dict(pairs).get("format", "").startswith("treematch-corpus"):
            corpus = synth.load_corpus(path)
            rows = [r for r in sections.get("observations", []) if r.strip()]
            names = [r.split("\t")[0] for r in rows[1:]]
            return names, list(corpus.trees), list(corpus.class_of)
    names = sorted(
        os.path.basename(p) for p in glob.glob(os.path.join(path, "*.tree"))
    )
    if not names:
        raise ParseError(f"no corpus manifest or .tree files in {path}")
    trees = [read_tree(os.path.join(path, n)) for n in names]
    return names, trees, None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    pairs, _ = _config.read_kv_file(args.config)
    if args.seed is not None:
        pairs = [(k, v) for k, v in pairs if k != "seed"]
        pairs.append(("seed", str(args.seed)))
    spec = synth.toy_spec_from_config(pairs, source=args.config)
    corpus = synth.sample_toy_corpus(spec)
    out = _outpath(args.out)
    synth.save_corpus(corpus, out)
    print(f"wrote {len(corpus.trees)} trees to {out}")
    return 0


def cmd_match(args) -> int:
    g = read_tree(args.tree_a)
    h = read_tree(args.tree_b)
    w = _load_weights(args.weights, trees=[g, h])
    records = []
    if args.variant == "basic":
        records = [match_basic(g, h, w)]
    elif args.variant == "subtree":
        records = [match_subtree(g, h, w)]
    elif args.variant == "topk":
        records = match_top_k(g, h, w, args.k)
    elif args.variant == "gaplim":
        records = [match_gap_limited(g, h, w, args.max_gap)]
    elif args.variant == "lengths":
        max_len = args.max_len or min(g.depth, h.depth) + 1
        res = match_length_indexed(g, h, w, max_len)
        out = _open_out(args)
        if args.json:
            doc = {
                "scores_by_length": list(res.scores_by_length),
                "matchings": [
                    [[u, v] for u, v in m.pairs] for m in res.matchings
                ],
            }
            out.write(json.dumps(doc, indent=2) + "\n")
        else:
            for r, (score, m) in enumerate(
                zip(res.scores_by_length, res.matchings)
            ):
                if r == 0:
                    continue
                out.write(f"# length {r}\n")
                for u, v in m.pairs:
                    out.write(f"{u}\t{v}\t{format(w(g.labels[u], h.labels[v]), 'g')}\n")
                out.write(f"score\t{format(score, 'g')}\n")
        _close_out(out)
        return 0

    out = _open_out(args)
    if args.json and len(records) != 1:
        docs = [json.loads(match_record_json(res, g, h, w)) for res in records]
        out.write(json.dumps(docs, indent=2) + "\n")
    elif args.json:
        out.write(match_record_json(records[0], g, h, w))
    else:
        for i, res in enumerate(records):
            if i:
                out.write("\n")
            out.write(format_match_record(res, g, h, w))
    _close_out(out)
    return 0


def _open_out(args):
    if getattr(args, "out", None):
        return open(_outpath(args.out), "w", encoding="utf-8")
    return sys.stdout


def _close_out(handle):
    if handle is not sys.stdout:
        handle.close()


def cmd_simmatrix(args) -> int:
    _, trees, _ = _load_corpus_dir(args.corpus)
    w = _load_weights(args.weights, trees=trees)
    result = pipeline.pairwise_similarity(
        trees, w, variant=args.variant, threads=args.threads
    )
    pipeline.save_matrix(result.scores, _outpath(args.sim))
    if args.dist:
        d = pipeline.normalize_distances(result.scores)
        pipeline.save_matrix(d, _outpath(args.dist))
    print(f"scored {len(trees)} trees ({args.variant} matcher)")
    return 0


def cmd_embed(args) -> int:
    d = pipeline.load_matrix(args.matrix)
    coords = pipeline.embed_classical(d, args.dims)
    pipeline.save_embedding(
        coords, _outpath(args.out),
        comments=[f"method = classical-mds", f"dims = {args.dims}"],
    )
    return 0


def cmd_cluster(args) -> int:
    if args.matrix:
        data = pipeline.load_matrix(args.matrix)
        labels = pipeline.cluster_kmedoids(
            data, args.k, seed=args.seed, precomputed=True
        )
    else:
        _, coords = pipeline.load_embedding(args.embedding)
        labels = pipeline.cluster_kmedoids(coords, args.k, seed=args.seed)
    pipeline.save_partition(
        labels, _outpath(args.out),
        comments=[f"method = k-medoids", f"k = {args.k}", f"seed = {args.seed}"],
    )
    return 0


def cmd_exemplar(args) -> int:
    _, trees, _ = _load_corpus_dir(args.corpus)
    ids, labels = pipeline.load_partition(args.partition)
    full = [-1] * len(trees)
    for i, lab in zip(ids, labels):
        full[i] = lab
    w = _load_weights(args.weights, trees=trees)
    exemplars = pipeline.cluster_exemplars(
        trees, full, w, max_pairs_per_cluster=args.max_pairs
    )
    out = _outpath(args.out)
    os.makedirs(out, exist_ok=True)
    for cluster, ex in sorted(exemplars.items()):
        path = os.path.join(out, f"exemplar_{cluster}.tsv")
        pipeline.save_exemplar(ex, path, comments=[f"cluster = {cluster}"])
    print(f"wrote {len(exemplars)} exemplars to {out}")
    return 0


def cmd_featurize(args) -> int:
    _, trees, _ = _load_corpus_dir(args.corpus)
    tnames, templates, _ = _load_corpus_dir(args.templates)
    w = _load_weights(args.weights, trees=trees)
    feats = pipeline.featurize_templates(trees, templates, w, tau=args.tau)
    out = _outpath(args.out)
    if args.json:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "templates": tnames,
                    "tau": feats.tau,
                    "scores": feats.scores.tolist(),
                    "threshold_counts": feats.threshold_counts.tolist(),
                },
                fh, indent=2,
            )
            fh.write("\n")
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", *tnames, "threshold_count"])
            for i, row in enumerate(feats.scores):
                writer.writerow(
                    [i, *[format(x, "g") for x in row], int(feats.threshold_counts[i])]
                )
    return 0


def cmd_ingest(args) -> int:
    columns = None
    if args.columns:
        columns = {}
        for part in args.columns.split(","):
            key, _, value = part.partition("=")
            columns[key.strip()] = int(value) if value.strip().isdigit() else value.strip()
    trees, manifest = ingest_edge_table(
        args.input, columns, args.delimiter, strict=args.strict
    )
    out = _outpath(args.out)
    os.makedirs(out, exist_ok=True)
    width = max(7, len(str(len(trees))))
    names = []
    for i, tree in enumerate(trees):
        name = f"tree_{i:0{width}d}.tree"
        names.append(name)
        write_tree(tree, os.path.join(out, name))
    save_ingest_manifest(manifest, names, os.path.join(out, "manifest_ingest.txt"))
    print(
        f"trees={manifest.tree_total} nodes={manifest.node_total} "
        f"edges={manifest.edge_total} "
        f"warnings={sum(manifest.warnings.values())}"
    )
    return 0


def cmd_subtrees(args) -> int:
    _, trees, _ = _load_corpus_dir(args.corpus)
    subs = extract_subtrees(
        trees,
        min_size=args.min_size,
        max_size=args.max_size,
        min_subtree_size=args.min_subtree_size,
    )
    out = _outpath(args.out)
    os.makedirs(out, exist_ok=True)
    width = max(5, len(str(len(subs))))
    for i, tree in enumerate(subs):
        write_tree(tree, os.path.join(out, f"sub_{i:0{width}d}.tree"))
    sizes = [t.node_count for t in subs]
    depths = [t.depth for t in subs]
    if subs:
        print(
            f"subtrees={len(subs)} sizes={min(sizes)}..{max(sizes)} "
            f"depths={min(depths)}..{max(depths)}"
        )
    else:
        print("subtrees=0")
    return 0


def cmd_hist(args) -> int:
    _, trees, classes = _load_corpus_dir(args.corpus)
    reference = read_tree(args.reference)
    w = _load_weights(args.weights, trees=trees)
    if classes is None:
        classes = [-1] * len(trees)
    with open(_outpath(args.scores), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "class", "score"])
        for i, tree in enumerate(trees):
            writer.writerow([i, classes[i], format(similarity_score(tree, reference, w), "g")])

    symbols = sorted({lab for tree in trees for lab in tree.labels})
    names = ["::".join(s) for s in symbols]
    index = {s: c for c, s in enumerate(symbols)}
    with open(_outpath(args.counts), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "class", *names])
        for i, tree in enumerate(trees):
            counts = [0] * len(symbols)
            for lab in tree.labels:
                counts[index[lab]] += 1
            writer.writerow([i, classes[i], *counts])
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treematch",
        description="Fuzzy path matching between labelled trees.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a planted-path corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("match", help="match two tree files")
    p.add_argument("tree_a")
    p.add_argument("tree_b")
    p.add_argument("--weights", default="indicator")
    p.add_argument(
        "--variant", default="basic",
        choices=["basic", "subtree", "topk", "gaplim", "lengths"],
    )
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--max-gap", type=int, default=0)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("simmatrix", help="pairwise similarity and distance matrices")
    p.add_argument("--corpus", required=True)
    p.add_argument("--weights", default="indicator")
    p.add_argument("--sim", required=True)
    p.add_argument("--dist", default=None)
    p.add_argument("--variant", default="basic", choices=["basic", "subtree"])
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_simmatrix)

    p = sub.add_parser("embed", help="classical MDS embedding of a distance matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cluster", help="k-medoids partition")
    p.add_argument("--matrix", default=None, help="precomputed distance matrix")
    p.add_argument("--embedding", default=None, help="coordinate file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("exemplar", help="consensus exemplar per cluster")
    p.add_argument("--corpus", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--weights", default="indicator")
    p.add_argument("--out", required=True)
    p.add_argument("--max-pairs", type=int, default=100)
    p.set_defaults(func=cmd_exemplar)

    p = sub.add_parser("featurize", help="match-score features against templates")
    p.add_argument("--corpus", required=True)
    p.add_argument("--templates", required=True)
    p.add_argument("--weights", default="indicator")
    p.add_argument("--tau", type=float, default=3.0)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("ingest", help="build process trees from a telemetry table")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--columns", default=None,
                   help="field=column overrides, e.g. pid_hash=PidHash")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("subtrees", help="extract node-rooted subtrees")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-size", type=int, default=3)
    p.add_argument("--max-size", type=int, default=10000)
    p.add_argument("--min-subtree-size", type=int, default=3)
    p.set_defaults(func=cmd_subtrees)

    p = sub.add_parser("hist", help="per-tree scores vs a reference, plus symbol counts")
    p.add_argument("--corpus", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--weights", default="indicator")
    p.add_argument("--scores", required=True)
    p.add_argument("--counts", required=True)
    p.set_defaults(func=cmd_hist)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("TREEMATCH_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"E_PARSE: {exc}", file=sys.stderr)
        return 3
    except DataIntegrityError as exc:
        print(f"E_DATA: {exc}", file=sys.stderr)
        return 4
    except TreematchError as exc:
        print(f"E_RUNTIME: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"E_IO: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
