"""Parser for the webpage-network text distribution (Cornell, Wisconsin).

Three files per dataset:

    <name>_edges.txt            header line, then one "u<TAB>v" pair per line
    <name>_features_labels.txt  header line, then "id<TAB>f1,f2,...<TAB>label"
    <name>_split_0.npz          boolean train_mask/val_mask/test_mask arrays

The published splits come in ten variants; the converter ships the first
one (index 0) as the public split.  Features are binary bags of words,
stored as comma-separated 0/1 integers.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .graph import ConvertError, RawGraph


def _data_lines(path: Path) -> list[str]:
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ConvertError(f"{path.name} is empty")
    first = lines[0].split("\t")[0]
    if not first.isdigit():    # header row
        lines = lines[1:]
    return lines


def parse(cache: dict[str, Path], name: str) -> RawGraph:
    feat_path = cache[f"{name}_features_labels.txt"]
    rows = {}
    for ln in _data_lines(feat_path):
        parts = ln.split("\t")
        if len(parts) != 3:
            raise ConvertError(
                f"{feat_path.name}: expected 'id<TAB>features<TAB>label', "
                f"got {len(parts)} fields")
        node = int(parts[0])
        feats = np.fromiter(parts[1].split(","), dtype=np.float64)
        rows[node] = (feats, int(parts[2]))
    n = max(rows) + 1
    if len(rows) != n:
        raise ConvertError(f"{feat_path.name}: node ids not contiguous "
                           f"({len(rows)} rows, max id {n - 1})")
    d = rows[0][0].size
    x = np.zeros((n, d))
    y = np.zeros(n, dtype=np.int64)
    for node, (feats, label) in rows.items():
        if feats.size != d:
            raise ConvertError(f"{feat_path.name}: inconsistent feature "
                               f"width at node {node}")
        x[node] = feats
        y[node] = label

    pairs = [tuple(map(int, ln.split("\t")[:2]))
             for ln in _data_lines(cache[f"{name}_edges.txt"])]
    edges = np.asarray(pairs, dtype=np.int64)

    with np.load(cache[f"{name}_split_0.npz"]) as npz:
        try:
            masks = tuple(np.asarray(npz[k], dtype=bool)
                          for k in ("train_mask", "val_mask", "test_mask"))
        except KeyError as exc:
            raise ConvertError(f"split file missing array {exc}") from exc
    if any(m.shape != (n,) for m in masks):
        raise ConvertError("split masks do not match the node count")
    return RawGraph(x, y, edges, *masks)
