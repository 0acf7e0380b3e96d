"""Benchmark the compiled matching kernels against the pure-Python fallback.

Times the score-only forward pass on depth-conditioned random tree pairs of
growing size, for both backends, and reports cells/second (a cell is one
dynamic-programming table entry).  Also times the threaded all-pairs driver
with the compiled backend.

Run:  python benchmarks/bench_kernels.py [--sizes 200,800,2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from treematch import _dpcore_py
from treematch import _kernel
from treematch.pipeline import pairwise_similarity
from treematch.synth import GWSpec, PlantSpec, ToyModelSpec, sample_toy_corpus
from treematch.weights import indicator_weight

try:
    from treematch import _dpcore
except ImportError:
    _dpcore = None


def sample_pair(rng_seed, target_nodes):
    # depth chosen so conditioned trees land near the requested size
    depth = max(3, int(np.log(max(target_nodes, 8) * 0.8) / np.log(1.8)))
    plant = PlantSpec(tuple("ABCDE"), (0.2,) * 5, tuple("ABCDE"))
    spec = ToyModelSpec(GWSpec(depth, 1.8), plant, (2,), seed=rng_seed)
    corpus = sample_toy_corpus(spec)
    return corpus.trees[0], corpus.trees[1]


def time_backend(impl, g, h, cg, ch, repeat):
    args = (g.preorder, g.depths, cg.codes, h.shifted_ancestors, ch.codes)
    best = float("inf")
    score = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        score = impl.score_indicator(*args)
        best = min(best, time.perf_counter() - t0)
    return score, best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="200,800,2000,4000")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    w = indicator_weight()
    print(f"compiled backend available: {_dpcore is not None}"
          f" (selected at import: {_kernel.BACKEND})")
    print(f"{'nodes g x h':>16} {'cells':>12} {'python':>14} {'cython':>14} {'speedup':>8}")
    for i, target in enumerate(sizes):
        g, h = sample_pair(1000 + i, target)
        cg, ch = w.encode_trees([g, h])
        cells = len(g) * len(h)
        score_py, t_py = time_backend(_dpcore_py, g, h, cg, ch, args.repeat)
        row = f"{len(g):>7} x {len(h):<6} {cells:>12.3g} {cells / t_py / 1e6:>11.1f} M/s"
        if _dpcore is not None:
            score_cy, t_cy = time_backend(_dpcore, g, h, cg, ch, args.repeat)
            assert score_cy == score_py, "backends disagree"
            row += f" {cells / t_cy / 1e6:>11.1f} M/s {t_py / t_cy:>7.1f}x"
        print(row)

    if _dpcore is not None:
        plant = PlantSpec(tuple("ABCDE"), (0.2,) * 5, tuple("ABCDE"))
        spec = ToyModelSpec(GWSpec(10, 1.8), plant, (24,), seed=3)
        trees = sample_toy_corpus(spec).trees
        cells = sum(
            len(trees[i]) * len(trees[j])
            for i in range(len(trees))
            for j in range(i, len(trees))
        )
        for threads in (1, 2):
            t0 = time.perf_counter()
            pairwise_similarity(trees, w, threads=threads)
            dt = time.perf_counter() - t0
            print(f"pairwise over {len(trees)} trees, threads={threads}: "
                  f"{dt:.2f}s ({cells / dt / 1e6:.0f} Mcell/s)")


if __name__ == "__main__":
    main()
