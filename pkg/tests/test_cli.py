import filecmp
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from treematch.cli import main
from treematch.pipeline import load_matrix, load_partition

A_TREE = "0\t-1\tA\n1\t0\tB\n2\t1\tC\n"
B_TREE = "0\t-1\tA\n1\t0\tX\n2\t1\tC\n"

GEN_CFG = """\
seed = 7
classes = 2
per_class = 4
alphabet = A,B,C,D,E
pi = uniform
base_sequence = A,B,C,D,E,A
p = 0.9
depth = 4
branching = 1.6
"""

TELEMETRY = """\
pid_hash,parent_pid_hash,process_name,user_name
p1,,root.exe,SYS
p2,p1,kid.exe,user1
p3,p1,kid2.exe,user1
p4,p3,deep.exe,bad1
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "a.tree").write_text(A_TREE)
    (tmp_path / "b.tree").write_text(B_TREE)
    (tmp_path / "gen.cfg").write_text(GEN_CFG)
    (tmp_path / "telemetry.csv").write_text(TELEMETRY)
    return tmp_path


def run(*argv):
    return main(list(argv))


class TestMatch:
    def test_basic_record(self, workdir, capsys):
        assert run("match", "a.tree", "b.tree", "--weights", "indicator") == 0
        out = capsys.readouterr().out
        assert out.endswith("score\t2\n")
        assert "0\t0\t1\n" in out and "2\t2\t1\n" in out

    def test_json_record(self, workdir, capsys):
        assert run("match", "a.tree", "b.tree", "--json") == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["score"] == 2.0
        assert [0, 0, 1.0] in doc["pairs"] and [2, 2, 1.0] in doc["pairs"]
        assert doc["end_cell"] == [2, 2]

    def test_variant_flags(self, workdir, capsys):
        assert run("match", "a.tree", "b.tree", "--variant", "gaplim",
                   "--max-gap", "0") == 0
        assert capsys.readouterr().out.endswith("score\t1\n")
        assert run("match", "a.tree", "a.tree", "--variant", "topk",
                   "--k", "2", "--json") == 0
        docs = json.loads(capsys.readouterr().out)
        assert len(docs) == 2 and docs[0]["score"] == 3.0
        assert run("match", "a.tree", "b.tree", "--variant", "lengths") == 0
        out = capsys.readouterr().out
        assert "# length 3" in out

    def test_missing_file_is_io_error(self, workdir, capsys):
        assert run("match", "absent.tree", "b.tree") == 1
        assert capsys.readouterr().err.startswith("E_IO:")

    def test_usage_error_exit_code(self, workdir):
        with pytest.raises(SystemExit) as exc:
            run("match")
        assert exc.value.code == 2


class TestGen:
    def test_deterministic_directories(self, workdir, capsys):
        assert run("gen", "--config", "gen.cfg", "--out", "c1") == 0
        assert run("gen", "--config", "gen.cfg", "--out", "c2") == 0
        cmp = filecmp.dircmp("c1", "c2")
        assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
        for name in os.listdir("c1"):
            assert (workdir / "c1" / name).read_bytes() == (
                workdir / "c2" / name
            ).read_bytes()

    def test_seed_override_changes_output(self, workdir, capsys):
        run("gen", "--config", "gen.cfg", "--out", "c1")
        run("gen", "--config", "gen.cfg", "--out", "c3", "--seed", "8")
        trees1 = sorted(p for p in os.listdir("c1") if p.endswith(".tree"))
        different = False
        for name in trees1:
            if (workdir / "c1" / name).read_text() != (workdir / "c3" / name).read_text():
                different = True
        assert different


class TestPipelineCommands:
    def test_full_chain(self, workdir, capsys):
        run("gen", "--config", "gen.cfg", "--out", "corp")
        assert run("simmatrix", "--corpus", "corp", "--weights", "indicator",
                   "--sim", "S.txt", "--dist", "D.txt") == 0
        s = load_matrix("S.txt")
        d = load_matrix("D.txt")
        assert s.shape == (8, 8) and np.array_equal(s, s.T)
        assert (np.diagonal(d) == 0).all()
        assert run("embed", "--matrix", "D.txt", "--dims", "2",
                   "--out", "emb.csv") == 0
        assert run("cluster", "--embedding", "emb.csv", "--k", "2",
                   "--seed", "1", "--out", "part.csv") == 0
        ids, labels = load_partition("part.csv")
        assert len(ids) == 8 and set(labels) <= {0, 1}
        assert run("cluster", "--matrix", "D.txt", "--k", "2",
                   "--seed", "1", "--out", "part2.csv") == 0
        assert run("exemplar", "--corpus", "corp", "--partition", "part.csv",
                   "--weights", "indicator", "--out", "exemplars") == 0
        files = os.listdir("exemplars")
        assert files and all(f.startswith("exemplar_") for f in files)

    def test_featurize(self, workdir, capsys):
        run("gen", "--config", "gen.cfg", "--out", "corp")
        os.makedirs("tpl")
        (workdir / "tpl" / "t0.tree").write_text(A_TREE)
        (workdir / "tpl" / "t1.tree").write_text(B_TREE)
        assert run("featurize", "--corpus", "corp", "--templates", "tpl",
                   "--weights", "indicator", "--tau", "1",
                   "--out", "feat.csv") == 0
        rows = (workdir / "feat.csv").read_text().strip().splitlines()
        assert rows[0] == "id,t0.tree,t1.tree,threshold_count"
        assert len(rows) == 9
        for row in rows[1:]:
            fields = row.split(",")
            expected = sum(float(x) >= 1 for x in fields[1:3])
            assert int(fields[3]) == expected

    def test_hist_tables(self, workdir):
        run("gen", "--config", "gen.cfg", "--out", "corp")
        assert run("hist", "--corpus", "corp", "--reference", "a.tree",
                   "--weights", "indicator", "--scores", "sc.csv",
                   "--counts", "ct.csv") == 0
        scores = (workdir / "sc.csv").read_text().strip().splitlines()
        assert scores[0] == "id,class,score"
        assert len(scores) == 9
        counts = (workdir / "ct.csv").read_text().strip().splitlines()
        assert counts[0].startswith("id,class,")
        # every class column is populated from the manifest
        assert {row.split(",")[1] for row in scores[1:]} == {"0", "1"}


class TestIngestCommands:
    def test_ingest_and_subtrees(self, workdir, capsys):
        assert run("ingest", "--input", "telemetry.csv", "--out", "ing") == 0
        out = capsys.readouterr().out
        assert "trees=1 nodes=4 edges=3" in out
        assert run("subtrees", "--corpus", "ing", "--out", "subs",
                   "--min-size", "3", "--min-subtree-size", "2") == 0
        assert len(os.listdir("subs")) == 2  # rooted at root.exe and kid2.exe

    def test_strict_exit_code(self, workdir, capsys):
        (workdir / "dup.csv").write_text(
            "pid_hash,parent_pid_hash,process_name,user_name\n"
            "a,,x,u\nb,a,y,u\nb,a,y,u\n"
        )
        assert run("ingest", "--input", "dup.csv", "--out", "ing2",
                   "--strict") == 4
        assert capsys.readouterr().err.startswith("E_DATA:")

    def test_parse_error_exit_code(self, workdir, capsys):
        (workdir / "bad.csv").write_text("not,a,real,header\n1,2,3,4\n")
        assert run("ingest", "--input", "bad.csv", "--out", "ing3") == 3
        assert capsys.readouterr().err.startswith("E_PARSE:")


class TestEnvOverrides:
    def test_output_dir_env(self, workdir, monkeypatch, capsys):
        outbase = workdir / "redirected"
        os.makedirs(outbase)
        monkeypatch.setenv("TREEMATCH_OUT", str(outbase))
        run("gen", "--config", "gen.cfg", "--out", "corp")
        assert (outbase / "corp" / "manifest.txt").exists()

    def test_installed_entry_point(self, workdir):
        out = subprocess.run(
            [sys.executable, "-m", "treematch.cli", "--version"],
            capture_output=True, text=True,
        )
        assert out.returncode == 0
