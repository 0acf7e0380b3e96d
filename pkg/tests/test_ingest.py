import os

import numpy as np
import pytest

from treematch.errors import DataIntegrityError, EmptyInputError, ParseError
from treematch.ingest import (
    build_forest,
    default_root_name_filter,
    extract_subtrees,
    ingest_edge_table,
    read_process_records,
    save_ingest_manifest,
)
from treematch.trees import format_tree, parse_tree, read_tree, write_tree

from conftest import path_tree, random_tree

MESSY = """pid_hash,parent_pid_hash,process_name,user_name
p1,,winlogon.exe,SYS
p2,p1,userinit.exe,user1
p3,p2,explorer.exe,user1
p4,p3,cmd.exe,bad3
p5,p1,svchost.exe,
p2,p1,userinit.exe,user1
p6,p9,orphan.exe,user2
c1,c2,spin.exe,u
c2,c1,spin2.exe,u
x7,p1,late.exe,user3
x7,p5,late.exe,user3
"""


@pytest.fixture
def messy_file(tmp_path):
    path = tmp_path / "telemetry.csv"
    path.write_text(MESSY)
    return path


class TestIngestion:
    def test_documented_repairs_produce_exact_forest(self, messy_file):
        trees, manifest = ingest_edge_table(messy_file)
        assert manifest.tree_total == 3
        assert manifest.node_total == 9
        assert manifest.edge_total == 6
        assert manifest.warnings == {
            "duplicate_records": 2,   # p2 repeated; x7's second record
            "duplicate_edges": 1,     # p2->p1 repeated
            "multi_parent": 1,        # x7 reports p1 then p5
            "self_parent": 0,
            "cycle_broken": 1,        # c1 <-> c2
            "blank_pid": 0,
            "orphan_parent": 1,       # p6's parent p9 never appears
        }
        # main tree: winlogon with both children, x7 under first parent p1
        main = trees[0]
        assert main.labels[0] == ("winlogon.exe", "SYS")
        assert main.node_count == 6
        assert sorted(main.labels[c][0] for c in main.children[0]) == [
            "late.exe", "svchost.exe", "userinit.exe",
        ]
        assert any(lab == ("cmd.exe", "bad3") for lab in main.labels)
        # orphaned child roots its own single-node component
        orphan = trees[1]
        assert orphan.node_count == 1
        assert orphan.labels[0] == ("orphan.exe", "user2")
        # broken cycle becomes a two-node tree rooted at the cut node
        cyc = trees[2]
        assert cyc.node_count == 2
        assert {cyc.labels[0][0], cyc.labels[1][0]} == {"spin.exe", "spin2.exe"}
        metas = manifest.trees
        assert [m.nodes for m in metas] == [6, 1, 2]
        assert metas[0].has_bad_user and not metas[1].has_bad_user

    def test_two_disjoint_parent_child_pairs(self, tmp_path):
        path = tmp_path / "pairs.csv"
        path.write_text(
            "pid_hash,parent_pid_hash,process_name,user_name\n"
            "a,b,x.exe,u\nb,,p.exe,u\nc,d,y.exe,u\nd,,q.exe,u\n"
        )
        trees, manifest = ingest_edge_table(path)
        assert manifest.tree_total == 2
        assert all(t.node_count == 2 for t in trees)

    def test_round_trip_serialization_identity(self, messy_file, tmp_path):
        trees, _ = ingest_edge_table(messy_file)
        for i, tree in enumerate(trees):
            p = tmp_path / f"t{i}.tree"
            write_tree(tree, p)
            back = read_tree(p)
            assert back == tree
            assert format_tree(back) == format_tree(tree)

    def test_strict_mode_raises(self, messy_file):
        with pytest.raises(DataIntegrityError):
            ingest_edge_table(messy_file, strict=True)

    def test_orphans_allowed_under_strict(self, tmp_path):
        path = tmp_path / "clean.csv"
        path.write_text(
            "pid_hash,parent_pid_hash,process_name,user_name\n"
            "a,zz,x.exe,u\nb,a,y.exe,u\n"
        )
        trees, manifest = ingest_edge_table(path, strict=True)
        assert manifest.warnings["orphan_parent"] == 1
        assert manifest.tree_total == 1

    def test_blank_labels_preserved(self, tmp_path):
        path = tmp_path / "blanks.csv"
        path.write_text(
            "pid_hash,parent_pid_hash,process_name,user_name\n"
            "a,,,\nb,a,,u2\n"
        )
        trees, _ = ingest_edge_table(path)
        assert trees[0].labels[0] == ("", "")
        assert trees[0].labels[1] == ("", "u2")

    def test_column_map_and_delimiter(self, tmp_path):
        path = tmp_path / "weird.tsv"
        path.write_text("PID\tPPID\tNAME\tUSER\n1\t\troot.exe\tu\n2\t1\tkid.exe\tu\n")
        trees, _ = ingest_edge_table(
            path,
            {"pid_hash": "PID", "parent_pid_hash": "PPID",
             "process_name": "NAME", "user_name": "USER"},
            delimiter="\t",
        )
        assert trees[0].node_count == 2

    def test_headerless_integer_columns(self, tmp_path):
        path = tmp_path / "nohdr.csv"
        path.write_text("1,,root.exe,u\n2,1,kid.exe,u\n")
        trees, _ = ingest_edge_table(
            path,
            {"pid_hash": 0, "parent_pid_hash": 1, "process_name": 2,
             "user_name": 3},
        )
        assert trees[0].node_count == 2

    def test_parse_errors(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("pid_hash,parent_pid_hash,process_name,user_name\na,b\n")
        with pytest.raises(ParseError):
            read_process_records(path)
        missing = tmp_path / "nocol.csv"
        missing.write_text("a,b,c,d\n1,2,3,4\n")
        with pytest.raises(ParseError):
            read_process_records(missing)

    def test_empty_input(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("pid_hash,parent_pid_hash,process_name,user_name\n")
        with pytest.raises(EmptyInputError):
            read_process_records(path)

    def test_manifest_file_counts_match_contents(self, messy_file, tmp_path):
        trees, manifest = ingest_edge_table(messy_file)
        names = [f"t{i}.tree" for i in range(len(trees))]
        for name, tree in zip(names, trees):
            write_tree(tree, tmp_path / name)
        save_ingest_manifest(manifest, names, tmp_path / "manifest_ingest.txt")
        text = (tmp_path / "manifest_ingest.txt").read_text()
        assert f"trees = {len(trees)}" in text
        for name, tree in zip(names, trees):
            reloaded = read_tree(tmp_path / name)
            assert reloaded.node_count == tree.node_count
            assert name in text


class TestSubtreeExtraction:
    def test_named_path_of_five(self):
        tree = path_tree("a.exe", "b.exe", "c.exe", "d.exe", "e.exe")
        subs = extract_subtrees([tree], min_subtree_size=3)
        assert len(subs) == 3
        assert sorted(s.node_count for s in subs) == [3, 4, 5]
        assert {s.labels[0][0] for s in subs} == {"a.exe", "b.exe", "c.exe"}

    def test_blank_or_unknown_roots_excluded(self):
        tree = path_tree("", "unknown", "c.exe", "d.exe", "e.exe")
        subs = extract_subtrees([tree], min_subtree_size=3)
        assert len(subs) == 1
        assert subs[0].labels[0][0] == "c.exe"

    def test_tree_size_window(self):
        small = path_tree("a.exe", "b.exe")
        big = path_tree(*[f"p{i}.exe" for i in range(12)])
        subs = extract_subtrees([small, big], min_size=3, max_size=10)
        assert subs == []

    def test_matches_brute_force_enumeration(self, rng):
        names = ["", "unknown", "a.exe", "b.exe", "c.exe"]
        for _ in range(10):
            n = int(rng.integers(2, 120))
            tree = random_tree(rng, n, alphabet=names, arity=2)
            subs = extract_subtrees([tree], min_size=1, max_size=10**6,
                                    min_subtree_size=3)
            expected = 0
            for v in range(n):
                members = [u for u in range(n)
                           if u == v or v in tree.ancestor_chain(u)]
                name = tree.labels[v][0]
                if len(members) >= 3 and default_root_name_filter(name):
                    expected += 1
            assert len(subs) == expected

    def test_subtree_structure_is_preserved(self, rng):
        tree = random_tree(rng, 30, alphabet=["a.exe", "b.exe"], arity=2)
        subs = extract_subtrees([tree], min_size=1, max_size=100,
                                min_subtree_size=2)
        for sub in subs:
            assert sub.ancestors[0] == -1
            assert (sub.ancestors[1:] < np.arange(1, sub.node_count)).all()


ACME_PATH = os.environ.get("TREEMATCH_ACME4_TABLE")


@pytest.mark.skipif(
    not ACME_PATH, reason="dataset-conditional: set TREEMATCH_ACME4_TABLE"
)
def test_acme4_headline_counts():
    trees, manifest = ingest_edge_table(ACME_PATH)
    assert manifest.tree_total == 1_111_277
    assert manifest.node_total == 2_884_171
    assert manifest.edge_total == 1_772_894
    sizes = [m.nodes for m in manifest.trees]
    assert min(sizes) == 2 and max(sizes) == 257_744
