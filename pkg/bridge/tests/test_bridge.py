import os
import subprocess

import numpy as np
import pytest

from treematch_bridge.clustering import run_clustering
from treematch_bridge.config import (
    BridgeConfig,
    MatrixFormatError,
    MissingColumnError,
    load_config,
    load_embedding_file,
    load_partition_file,
)
from treematch_bridge.embedding import run_embedding
from treematch_bridge.figures import render_figures


def save_matrix(m, path):
    with open(path, "w") as fh:
        fh.write(f"n={len(m)}\n")
        for row in m:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def block_matrix(rng, sizes, within=0.02, between=1.0):
    n = sum(sizes)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    d = np.where(labels[:, None] == labels[None, :], within, between)
    d = d + rng.random((n, n)) * 0.01
    d = (d + d.T) / 2
    np.fill_diagonal(d, 0.0)
    return d, labels


@pytest.fixture
def rng():
    return np.random.default_rng(11)


class TestEmbedding:
    def test_blocks_separate(self, rng, tmp_path):
        d, labels = block_matrix(rng, [20, 20])
        save_matrix(d, tmp_path / "D.txt")
        cfg = BridgeConfig(matrix=str(tmp_path / "D.txt"), out=str(tmp_path), seed=3)
        path = run_embedding(cfg)
        ids, coords = load_embedding_file(path)
        assert len(ids) == 40 and coords.shape == (40, 2)
        a = coords[labels == 0]
        b = coords[labels == 1]
        gap = np.linalg.norm(a.mean(axis=0) - b.mean(axis=0))
        spread = max(
            np.linalg.norm(a - a.mean(axis=0), axis=1).max(),
            np.linalg.norm(b - b.mean(axis=0), axis=1).max(),
        )
        assert gap > 5 * spread

    def test_tiny_matrix_runs(self, tmp_path):
        save_matrix(1.0 - np.eye(3), tmp_path / "D.txt")
        cfg = BridgeConfig(matrix=str(tmp_path / "D.txt"), out=str(tmp_path))
        ids, coords = load_embedding_file(run_embedding(cfg))
        assert len(ids) == 3

    def test_seed_recorded_in_header(self, rng, tmp_path):
        d, _ = block_matrix(rng, [5, 5])
        save_matrix(d, tmp_path / "D.txt")
        cfg = BridgeConfig(matrix=str(tmp_path / "D.txt"), out=str(tmp_path), seed=77)
        text = open(run_embedding(cfg)).read()
        assert "# seed = 77" in text

    def test_matrix_format_errors(self, tmp_path):
        (tmp_path / "bad.txt").write_text("1,2\n3,4\n")
        cfg = BridgeConfig(matrix=str(tmp_path / "bad.txt"), out=str(tmp_path))
        with pytest.raises(MatrixFormatError):
            run_embedding(cfg)
        (tmp_path / "short.txt").write_text("n=3\n0,1,1\n1,0,1\n")
        cfg = BridgeConfig(matrix=str(tmp_path / "short.txt"), out=str(tmp_path))
        with pytest.raises(MatrixFormatError):
            run_embedding(cfg)


class TestClustering:
    def test_blocks_recovered_with_little_noise(self, rng, tmp_path):
        d, labels = block_matrix(rng, [25, 25])
        save_matrix(d, tmp_path / "D.txt")
        cfg = BridgeConfig(
            matrix=str(tmp_path / "D.txt"), out=str(tmp_path),
            min_cluster_size=8, seed=5,
        )
        run_embedding(cfg)
        ids, found = load_partition_file(run_clustering(cfg))
        found = np.asarray(found)
        noise = (found == -1).sum()
        assert noise <= 0.05 * len(ids)
        mask = found != -1
        clusters = {}
        for lab, truth in zip(found[mask], labels[mask]):
            clusters.setdefault(lab, []).append(truth)
        assert len(clusters) == 2
        for members in clusters.values():
            assert len(set(members)) == 1

    def test_uniform_scatter_is_mostly_noise(self, rng, tmp_path):
        coords = rng.random((60, 2)) * 100
        with open(tmp_path / "emb.csv", "w") as fh:
            fh.write("id,x1,x2\n")
            for i, (x, y) in enumerate(coords):
                fh.write(f"{i},{x},{y}\n")
        cfg = BridgeConfig(
            matrix="unused", out=str(tmp_path),
            embedding=str(tmp_path / "emb.csv"), min_cluster_size=25,
        )
        _, found = load_partition_file(run_clustering(cfg))
        assert np.mean(np.asarray(found) == -1) > 0.5

    def test_identical_inputs_identical_label_multisets(self, rng, tmp_path):
        d, _ = block_matrix(rng, [15, 15])
        save_matrix(d, tmp_path / "D.txt")
        runs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            cfg = BridgeConfig(
                matrix=str(tmp_path / "D.txt"), out=str(out),
                min_cluster_size=5, seed=9,
            )
            run_embedding(cfg)
            _, labels = load_partition_file(run_clustering(cfg))
            runs.append(sorted(labels))
        assert runs[0] == runs[1]


class TestFigures:
    def write_tables(self, tmp_path, classes=("0", "1")):
        with open(tmp_path / "sc.csv", "w") as fh:
            fh.write("id,class,score\n")
            for i in range(20):
                fh.write(f"{i},{classes[i % len(classes)]},{5 + i % 7}\n")
        with open(tmp_path / "ct.csv", "w") as fh:
            fh.write("id,class,A,B\n")
            for i in range(20):
                fh.write(f"{i},{classes[i % len(classes)]},{i % 5},{i % 3}\n")

    def test_renders_all_files(self, rng, tmp_path):
        self.write_tables(tmp_path)
        d, _ = block_matrix(rng, [10, 10])
        save_matrix(d, tmp_path / "D.txt")
        cfg = BridgeConfig(
            matrix=str(tmp_path / "D.txt"), out=str(tmp_path / "figs"),
            scores=str(tmp_path / "sc.csv"), counts=str(tmp_path / "ct.csv"),
            min_cluster_size=5,
        )
        run_embedding(cfg)
        run_clustering(cfg)
        written = render_figures(cfg)
        names = sorted(os.path.basename(p) for p in written)
        assert names == [
            "embedding_scatter.png", "similarity_hist.png", "symbol_counts_hist.png",
        ]
        for p in written:
            assert os.path.getsize(p) > 0

    def test_single_class_input(self, tmp_path):
        self.write_tables(tmp_path, classes=("0",))
        cfg = BridgeConfig(
            matrix="unused", out=str(tmp_path / "figs"),
            scores=str(tmp_path / "sc.csv"),
        )
        written = render_figures(cfg)
        assert any(p.endswith("similarity_hist.png") for p in written)

    def test_missing_column(self, tmp_path):
        with open(tmp_path / "bad.csv", "w") as fh:
            fh.write("id,score\n0,3\n")
        cfg = BridgeConfig(
            matrix="unused", out=str(tmp_path / "figs"),
            scores=str(tmp_path / "bad.csv"),
        )
        with pytest.raises(MissingColumnError):
            render_figures(cfg)


class TestConfigAndCli:
    def test_config_file_round_trip(self, tmp_path):
        (tmp_path / "bridge.cfg").write_text(
            "matrix = D.txt\nout = results\ndims = 2\n"
            "min_cluster_size = 12\nseed = 4\n"
        )
        cfg = load_config(tmp_path / "bridge.cfg")
        assert cfg.matrix == str(tmp_path / "D.txt")
        assert cfg.out == str(tmp_path / "results")
        assert cfg.min_cluster_size == 12 and cfg.seed == 4

    def test_cli_subcommands(self, rng, tmp_path):
        d, _ = block_matrix(rng, [8, 8])
        save_matrix(d, tmp_path / "D.txt")
        (tmp_path / "bridge.cfg").write_text(
            "matrix = D.txt\nout = .\nmin_cluster_size = 4\nseed = 1\n"
        )
        for command in ("embed", "cluster", "figures"):
            proc = subprocess.run(
                ["treematch-bridge", command, "--config", str(tmp_path / "bridge.cfg")],
                capture_output=True, text=True,
            )
            assert proc.returncode == 0, proc.stderr
        proc = subprocess.run(
            ["treematch-bridge", "embed", "--config", str(tmp_path / "nope.cfg")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
