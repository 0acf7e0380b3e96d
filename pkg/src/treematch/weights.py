"""Weight functions over label tuples.

Three constructors cover the matching workflows:

* ``indicator_weight`` scores 1 for exact tuple equality, else 0.
* ``frequency_weight`` down-weights common labels: a label seen N times in
  the fitting corpus self-matches with weight 2/(N+2), so an unseen label is
  worth 1 and weights decay toward 0 for ubiquitous labels.  Distinct labels
  score 0.
* ``composite_weight`` splits the weight across tuple components (for
  example 0.75 for the process name plus 0.25 for the user name), with
  declarative wildcard rules that let configured value families match as if
  equal (for example all user names starting with "user" or "bad").

All evaluation is symmetric, bounded to [0, 1], and pure; a WeightSpec is
immutable and safe to share between threads.  ``encode_trees`` lowers a
spec to flat integer/float arrays consumed by the matching kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._kernel import TreeCodes
from .errors import ArityMismatchError, EmptyCorpusError, ParseError
from .trees import LabelTuple, LabelledTree

INDICATOR = "indicator"
FREQUENCY = "frequency"
COMPOSITE = "composite"

_RULE_KINDS = ("prefix_any", "equals_any")


@dataclass(frozen=True)
class WildcardRule:
    """Declares that certain values of one tuple component are interchangeable.

    ``prefix_any``: two values match if each starts with one of the listed
    prefixes (or if they are equal).  ``equals_any``: two values match if both
    belong to the listed set (or are equal).
    """

    component: int
    kind: str
    values: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in _RULE_KINDS:
            raise ValueError(f"unknown wildcard rule kind {self.kind!r}")
        object.__setattr__(self, "values", tuple(self.values))

    def covers(self, value: str) -> bool:
        if self.kind == "prefix_any":
            return any(value.startswith(p) for p in self.values)
        return value in self.values


# Canonical class tokens start with NUL so they can never collide with real
# field values coming out of the tab-separated parsers.
def _canonical(value: str, rules: Sequence[WildcardRule]) -> str:
    for i, rule in enumerate(rules):
        if rule.covers(value):
            return f"\x00rule{i}"
    return value


@dataclass(frozen=True)
class WeightSpec:
    """Symmetric label-pair weight function, one of the three kinds above."""

    kind: str
    frequency_table: Mapping[LabelTuple, int] | None = None
    component_weights: tuple[float, ...] | None = None
    wildcard_rules: tuple[WildcardRule, ...] = ()

    def __post_init__(self):
        if self.kind not in (INDICATOR, FREQUENCY, COMPOSITE):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == COMPOSITE:
            cw = tuple(float(x) for x in self.component_weights or ())
            if not cw or any(x < 0 for x in cw):
                raise ValueError("component weights must be nonnegative")
            if abs(sum(cw) - 1.0) > 1e-9:
                raise ValueError(f"component weights must sum to 1, got {sum(cw)}")
            object.__setattr__(self, "component_weights", cw)
        object.__setattr__(self, "wildcard_rules", tuple(self.wildcard_rules))

    # -- scalar evaluation --------------------------------------------------

    def __call__(self, a: LabelTuple, b: LabelTuple) -> float:
        if self.kind == INDICATOR:
            return 1.0 if a == b else 0.0
        if self.kind == FREQUENCY:
            return self.diagonal(a) if a == b else 0.0
        cw = self.component_weights
        if len(a) != len(cw) or len(b) != len(cw):
            raise ArityMismatchError(
                f"labels of arity {len(a)}/{len(b)} fed to a "
                f"{len(cw)}-component weight"
            )
        total = 0.0
        for c, wc in enumerate(cw):
            if self._component_match(c, a[c], b[c]):
                total += wc
        return total

    def diagonal(self, label: LabelTuple) -> float:
        """w(label, label); the largest weight any pair with this label gets."""
        if self.kind == FREQUENCY:
            n = self.frequency_table.get(tuple(label), 0)
            return 2.0 / (n + 2.0)
        return 1.0

    def _rules_for(self, component: int) -> tuple[WildcardRule, ...]:
        return tuple(r for r in self.wildcard_rules if r.component == component)

    def _component_match(self, component: int, x: str, y: str) -> bool:
        if x == y:
            return True
        rules = self._rules_for(component)
        return bool(rules) and _canonical(x, rules) == _canonical(y, rules)

    # -- kernel lowering ----------------------------------------------------

    def encode_trees(self, trees: Sequence[LabelledTree]) -> list[TreeCodes]:
        """Lower every tree's labels to integer codes sharing one vocabulary.

        Two nodes receive equal codes exactly when their labels match under
        this weight kind (per component for composite weights), which is what
        the DP kernels test in their inner loop.
        """
        if self.kind == COMPOSITE:
            arity = len(self.component_weights)
            vocabs: list[dict[str, int]] = [{} for _ in range(arity)]
            rules = [self._rules_for(c) for c in range(arity)]
            out = []
            for t in trees:
                if t.label_arity() != arity:
                    raise ArityMismatchError(
                        f"tree arity {t.label_arity()} != weight arity {arity}"
                    )
                codes = np.empty((t.node_count, arity), dtype=np.int64)
                for v, label in enumerate(t.labels):
                    for c in range(arity):
                        key = _canonical(label[c], rules[c])
                        vocab = vocabs[c]
                        codes[v, c] = vocab.setdefault(key, len(vocab))
                out.append(
                    TreeCodes(
                        mode="parts",
                        codes=codes,
                        values=None,
                        part_weights=np.asarray(self.component_weights),
                    )
                )
            return out

        vocab: dict[LabelTuple, int] = {}
        out = []
        for t in trees:
            codes = np.empty(t.node_count, dtype=np.int32)
            values = np.empty(t.node_count, dtype=np.float64)
            for v, label in enumerate(t.labels):
                codes[v] = vocab.setdefault(label, len(vocab))
                values[v] = self.diagonal(label)
            out.append(
                TreeCodes(
                    mode="diag", codes=codes, values=values,
                    unit_values=self.kind == INDICATOR,
                )
            )
        return out


def indicator_weight() -> WeightSpec:
    """Weight 1 for exact tuple equality, 0 otherwise."""
    return WeightSpec(kind=INDICATOR)


def frequency_weight(corpus: Iterable[LabelledTree]) -> WeightSpec:
    """Fit per-label weights 2/(N+2) from label occurrence counts.

    N counts nodes over the whole corpus, so weights are strictly decreasing
    in how common a label is; a label absent from the corpus scores 1.
    """
    table: dict[LabelTuple, int] = {}
    any_tree = False
    for tree in corpus:
        any_tree = True
        for label in tree.labels:
            table[label] = table.get(label, 0) + 1
    if not any_tree:
        raise EmptyCorpusError("frequency weights need at least one tree")
    return WeightSpec(kind=FREQUENCY, frequency_table=table)


def composite_weight(
    component_weights: Sequence[float],
    wildcard_rules: Sequence[WildcardRule] = (),
) -> WeightSpec:
    """Per-component weights summing to 1, with optional wildcard rules."""
    return WeightSpec(
        kind=COMPOSITE,
        component_weights=tuple(component_weights),
        wildcard_rules=tuple(wildcard_rules),
    )


# ---------------------------------------------------------------------------
# Plain-text configuration blocks
# ---------------------------------------------------------------------------
#
#   kind = composite
#   component_weights = 0.75, 0.25
#   wildcard = 1 prefix_any user,bad
#
# A frequency block may reference a fitted table ("table = counts.tsv",
# resolved relative to the config file); without one the CLI fits the table
# from the corpus it is processing.

def format_weight_config(spec: WeightSpec, table_path: str | None = None) -> str:
    lines = [f"kind = {spec.kind}"]
    if spec.kind == COMPOSITE:
        lines.append(
            "component_weights = "
            + ", ".join(format(x, "g") for x in spec.component_weights)
        )
        for rule in spec.wildcard_rules:
            lines.append(
                f"wildcard = {rule.component} {rule.kind} {','.join(rule.values)}"
            )
    if spec.kind == FREQUENCY and table_path is not None:
        lines.append(f"table = {table_path}")
    return "\n".join(lines) + "\n"


def parse_weight_config(pairs: Sequence[tuple[str, str]], source="<config>"):
    """Build a WeightSpec from parsed key-value pairs.

    Returns (spec, table_path).  For frequency kind, spec.frequency_table is
    None and table_path may also be None, meaning "fit from the corpus".
    """
    kv = dict(pairs)
    kind = kv.get("kind")
    if kind == INDICATOR:
        return indicator_weight(), None
    if kind == FREQUENCY:
        return WeightSpec(kind=FREQUENCY, frequency_table=None), kv.get("table")
    if kind == COMPOSITE:
        raw = kv.get("component_weights", "")
        try:
            cw = tuple(float(x) for x in raw.split(","))
        except ValueError:
            raise ParseError(f"bad component_weights {raw!r}", location=source) from None
        rules = []
        for key, value in pairs:
            if key != "wildcard":
                continue
            parts = value.split(None, 2)
            if len(parts) != 3:
                raise ParseError(
                    f"wildcard needs '<component> <kind> <values>': {value!r}",
                    location=source,
                )
            comp, rkind, vals = parts
            try:
                rule = WildcardRule(int(comp), rkind, tuple(vals.split(",")))
            except (ValueError, TypeError) as exc:
                raise ParseError(str(exc), location=source) from None
            rules.append(rule)
        try:
            return composite_weight(cw, rules), None
        except ValueError as exc:
            raise ParseError(str(exc), location=source) from None
    raise ParseError(f"unknown or missing weight kind {kind!r}", location=source)


def write_frequency_table(table: Mapping[LabelTuple, int], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for label in sorted(table):
            fh.write("\t".join([str(table[label]), *label]) + "\n")


def read_frequency_table(path) -> dict[LabelTuple, int]:
    table: dict[LabelTuple, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise ParseError(
                    "expected count plus label columns",
                    location=f"{path} line {lineno}",
                )
            try:
                count = int(fields[0])
            except ValueError:
                raise ParseError(
                    f"non-integer count {fields[0]!r}",
                    location=f"{path} line {lineno}",
                ) from None
            table[tuple(fields[1:])] = count
    return table
