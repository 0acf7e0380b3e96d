import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treematch.errors import ArityMismatchError, EmptyCorpusError, ParseError
from treematch.weights import (
    WildcardRule,
    composite_weight,
    format_weight_config,
    frequency_weight,
    indicator_weight,
    parse_weight_config,
    read_frequency_table,
    write_frequency_table,
)
from treematch.config import parse_kv_text

from conftest import path_tree


label = st.tuples(st.text(max_size=6), st.text(max_size=6))


class TestIndicator:
    def test_equal(self):
        assert indicator_weight()(("A",), ("A",)) == 1.0

    def test_unequal(self):
        assert indicator_weight()(("A",), ("B",)) == 0.0

    def test_partial_tuple_difference_scores_zero(self):
        assert indicator_weight()(("p", "u1"), ("p", "u2")) == 0.0


class TestFrequency:
    def test_formula_values(self):
        # corpus with B twice and C six times; A absent
        corpus = [path_tree(*(["B"] * 2 + ["C"] * 6))]
        w = frequency_weight(corpus)
        assert w(("A",), ("A",)) == 1.0          # N=0 -> 2/2
        assert w(("B",), ("B",)) == 0.5          # N=2 -> 2/4
        assert w(("C",), ("C",)) == 0.25         # N=6 -> 2/8
        assert w(("B",), ("C",)) == 0.0

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            frequency_weight([])

    def test_strictly_decreasing_in_count(self):
        values = []
        for n in range(1, 30):
            w = frequency_weight([path_tree(*["A"] * n)])
            values.append(w(("A",), ("A",)))
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(0.0 < v <= 1.0 for v in values)


class TestComposite:
    def test_both_match(self):
        w = composite_weight([0.75, 0.25])
        assert w(("cmd.exe", "user1"), ("cmd.exe", "user1")) == 1.0

    def test_process_only(self):
        w = composite_weight([0.75, 0.25])
        assert w(("cmd.exe", "user1"), ("cmd.exe", "user2")) == 0.75

    def test_wildcard_usernames(self):
        rule = WildcardRule(1, "prefix_any", ("user", "bad"))
        w = composite_weight([0.75, 0.25], [rule])
        assert w(("cmd.exe", "bad3"), ("cmd.exe", "user1")) == 1.0
        assert w(("cmd.exe", "bad3"), ("cmd.exe", "SYS")) == 0.75

    def test_equals_any_rule(self):
        rule = WildcardRule(0, "equals_any", ("sh", "bash"))
        w = composite_weight([1.0], [rule])
        assert w(("sh",), ("bash",)) == 1.0
        assert w(("sh",), ("zsh",)) == 0.0

    def test_weights_must_normalize(self):
        with pytest.raises(ValueError):
            composite_weight([0.75, 0.75])
        with pytest.raises(ValueError):
            composite_weight([1.5, -0.5])

    def test_arity_mismatch(self):
        w = composite_weight([0.75, 0.25])
        with pytest.raises(ArityMismatchError):
            w(("only-one",), ("only-one",))


class TestProperties:
    @given(label, label)
    @settings(max_examples=150, deadline=None)
    def test_symmetry_and_range_all_kinds(self, a, b):
        rule = WildcardRule(1, "prefix_any", ("u",))
        specs = [
            indicator_weight(),
            frequency_weight(
                [path_tree("A", "B", "B")]
            ),
            composite_weight([0.6, 0.4], [rule]),
        ]
        for w in specs:
            if w.kind == "frequency":
                x, y = (a[0],), (b[0],)
            else:
                x, y = a, b
            assert w(x, y) == w(y, x)
            assert 0.0 <= w(x, y) <= 1.0

    def test_positive_scaling_preserves_matching(self, rng):
        # doubling every weight must not change the argmax structure
        from treematch import _kernel
        from conftest import random_tree

        for _ in range(25):
            g = random_tree(rng, int(rng.integers(2, 25)))
            h = random_tree(rng, int(rng.integers(2, 25)))
            w = frequency_weight([g, h])
            cg, ch = w.encode_trees([g, h])
            base = _kernel.forward_full(g, h, cg, ch, False)
            cg.values = cg.values * 2.0
            ch.values = ch.values * 2.0
            scaled = _kernel.forward_full(g, h, cg, ch, False)
            assert scaled[0] == 2.0 * base[0]
            assert scaled[1:3] == base[1:3]
            assert (scaled[3] == base[3]).all()


class TestConfig:
    def test_indicator_round_trip(self):
        text = format_weight_config(indicator_weight())
        pairs, _ = parse_kv_text(text)
        spec, table = parse_weight_config(pairs)
        assert spec.kind == "indicator" and table is None

    def test_composite_round_trip(self):
        rule = WildcardRule(1, "prefix_any", ("user", "bad"))
        spec = composite_weight([0.75, 0.25], [rule])
        pairs, _ = parse_kv_text(format_weight_config(spec))
        back, _ = parse_weight_config(pairs)
        assert back == spec

    def test_frequency_table_round_trip(self, tmp_path):
        table = {("cmd.exe", "u1"): 4, ("", ""): 9}
        path = tmp_path / "freq.tsv"
        write_frequency_table(table, path)
        assert read_frequency_table(path) == table

    def test_frequency_config_references_table(self):
        pairs, _ = parse_kv_text("kind = frequency\ntable = counts.tsv\n")
        spec, table = parse_weight_config(pairs)
        assert spec.kind == "frequency" and table == "counts.tsv"

    def test_bad_configs(self):
        for text in [
            "kind = nonsense\n",
            "kind = composite\ncomponent_weights = a,b\n",
            "kind = composite\ncomponent_weights = 0.5,0.4\n",
            "kind = composite\ncomponent_weights = 0.5,0.5\nwildcard = oops\n",
        ]:
            pairs, _ = parse_kv_text(text)
            with pytest.raises(ParseError):
                parse_weight_config(pairs)
