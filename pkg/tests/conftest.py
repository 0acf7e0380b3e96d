import numpy as np
import pytest

from treematch.trees import LabelledTree


def path_tree(*symbols: str) -> LabelledTree:
    """Chain 0 -> 1 -> ... with single-component labels."""
    n = len(symbols)
    anc = np.arange(-1, n - 1, dtype=np.int32)
    return LabelledTree(anc, tuple((s,) for s in symbols))


def star_tree(root: str, *leaf_symbols: str) -> LabelledTree:
    anc = np.array([-1] + [0] * len(leaf_symbols), dtype=np.int32)
    return LabelledTree(anc, tuple((s,) for s in (root, *leaf_symbols)))


def random_tree(rng: np.random.Generator, n: int, alphabet=( "A", "B", "C"), arity=1) -> LabelledTree:
    """Random attachment tree: already topologically ordered."""
    anc = np.empty(n, dtype=np.int32)
    anc[0] = -1
    for v in range(1, n):
        anc[v] = rng.integers(0, v)
    labels = tuple(
        tuple(alphabet[rng.integers(len(alphabet))] for _ in range(arity))
        for _ in range(n)
    )
    return LabelledTree(anc, labels)


def small_gw_tree(rng: np.random.Generator, depth: int, lam: float,
                  max_nodes: int, alphabet=("A", "B", "C")) -> LabelledTree:
    """Rejection-sample a depth-`depth` Poisson tree with at most max_nodes."""
    while True:
        anc = [-1]
        level = [0]
        ok = True
        for _ in range(depth):
            nxt = []
            for node in level:
                for _ in range(rng.poisson(lam)):
                    anc.append(node)
                    nxt.append(len(anc) - 1)
            if not nxt or len(anc) > max_nodes:
                ok = False
                break
            level = nxt
        if ok and len(anc) <= max_nodes:
            labels = tuple(
                (alphabet[rng.integers(len(alphabet))],) for _ in anc
            )
            return LabelledTree(np.asarray(anc, dtype=np.int32), labels)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
