"""Bridge configuration and the shared text file formats.

The readers here mirror the primary toolkit's formats byte for byte; they
are reimplemented on purpose so the two packages stay coupled only through
files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


class MatrixFormatError(Exception):
    """A distance-matrix file does not follow the 'n=<size>' + rows format."""


class MissingColumnError(Exception):
    """A plot-ready table lacks a required column."""


@dataclass
class BridgeConfig:
    matrix: str
    out: str
    dims: int = 2
    min_cluster_size: int = 10
    seed: int = 0
    scores: str | None = None       # hist tables for figure rendering
    counts: str | None = None
    embedding: str | None = None    # defaults to <out>/embedding.csv
    partition: str | None = None    # defaults to <out>/partition.csv

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError("dims must be >= 1")
        if self.embedding is None:
            self.embedding = os.path.join(self.out, "embedding.csv")
        if self.partition is None:
            self.partition = os.path.join(self.out, "partition.csv")


def load_config(path) -> BridgeConfig:
    kv = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if p is None or os.path.isabs(p) else os.path.join(base, p)

    return BridgeConfig(
        matrix=resolve(kv["matrix"]),
        out=resolve(kv.get("out", ".")),
        dims=int(kv.get("dims", "2")),
        min_cluster_size=int(kv.get("min_cluster_size", "10")),
        seed=int(kv.get("seed", "0")),
        scores=resolve(kv.get("scores")),
        counts=resolve(kv.get("counts")),
        embedding=resolve(kv.get("embedding")),
        partition=resolve(kv.get("partition")),
    )


def load_matrix(path) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [l.strip() for l in fh if l.strip() and not l.startswith("#")]
    except OSError as exc:
        raise MatrixFormatError(str(exc)) from exc
    if not lines or not lines[0].startswith("n="):
        raise MatrixFormatError(f"{path}: missing 'n=<size>' header")
    try:
        n = int(lines[0][2:])
        rows = [[float(x) for x in line.split(",")] for line in lines[1:]]
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: {exc}") from None
    if len(rows) != n or any(len(r) != n for r in rows):
        raise MatrixFormatError(f"{path}: expected {n}x{n} entries")
    return np.asarray(rows)


def write_table(path, header_comments, columns, rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")


def read_csv_table(path):
    """Return (columns, rows-of-strings), skipping comment lines."""
    columns = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            if columns is None:
                columns = line.split(",")
                continue
            rows.append(line.split(","))
    if columns is None:
        raise MissingColumnError(f"{path}: empty table")
    return columns, rows


def load_embedding_file(path):
    columns, rows = read_csv_table(path)
    if not columns or columns[0] != "id":
        raise MissingColumnError(f"{path}: expected an 'id' first column")
    ids = [int(r[0]) for r in rows]
    coords = np.asarray([[float(x) for x in r[1:]] for r in rows])
    return ids, coords


def load_partition_file(path):
    columns, rows = read_csv_table(path)
    if columns[:2] != ["id", "cluster"]:
        raise MissingColumnError(f"{path}: expected 'id,cluster' columns")
    return [int(r[0]) for r in rows], [int(r[1]) for r in rows]
