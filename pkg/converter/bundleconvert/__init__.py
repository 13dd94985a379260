"""Export public node-classification benchmarks as graph bundle directories.

The output format is the bundle directory consumed by the gsoselect CLI
(meta.json, edges.tsv, features.tsv|features.f32, labels.tsv, split.tsv).
This package never imports gsoselect: the directory format is the contract,
and the tests exercise compatibility through the installed CLI.
"""

from .graph import ConvertError, RawGraph, canonicalize_edges, random_split
from .registry import DATASETS, DatasetEntry
from .writer import write_bundle

__all__ = [
    "ConvertError",
    "DATASETS",
    "DatasetEntry",
    "RawGraph",
    "canonicalize_edges",
    "random_split",
    "write_bundle",
]
