"""Bridge command line: embed | cluster | figures, each driven by --config.

Config keys: matrix (required for embed), out, dims, min_cluster_size,
seed, scores, counts, embedding, partition.  Paths resolve relative to the
config file.
"""

from __future__ import annotations

import argparse
import sys

from .clustering import run_clustering
from .config import MatrixFormatError, MissingColumnError, load_config
from .embedding import run_embedding
from .figures import render_figures


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="treematch-bridge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("embed", "cluster", "figures"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "embed":
            print(run_embedding(config))
        elif args.command == "cluster":
            print(run_clustering(config))
        else:
            for path in render_figures(config):
                print(path)
        return 0
    except (MatrixFormatError, MissingColumnError) as exc:
        print(f"E_FORMAT: {exc}", file=sys.stderr)
        return 3
    except KeyError as exc:
        print(f"E_CONFIG: missing key {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"E_IO: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
