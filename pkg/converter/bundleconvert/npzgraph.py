"""Parser for the single-file npz graph distribution (co-purchase and
co-authorship benchmarks).

The archive stores the adjacency and attribute matrices in CSR form:

    adj_data, adj_indices, adj_indptr, adj_shape
    attr_data, attr_indices, attr_indptr, attr_shape   (or attr_matrix dense)
    labels

No public split is distributed, so the returned graph carries no masks and
conversion falls back to the documented random-split default.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .graph import ConvertError, RawGraph


def _csr_rows(data, indices, indptr, shape) -> np.ndarray:
    """Densify a CSR triplet without scipy; shapes here are modest."""
    rows, cols = int(shape[0]), int(shape[1])
    out = np.zeros((rows, cols))
    for i in range(rows):
        sl = slice(indptr[i], indptr[i + 1])
        out[i, indices[sl]] = data[sl]
    return out


def _csr_edges(indices, indptr, n: int) -> np.ndarray:
    counts = np.diff(indptr)
    u = np.repeat(np.arange(n, dtype=np.int64), counts)
    return np.stack([u, indices.astype(np.int64)], axis=1)


def parse(cache: dict[str, Path], filename: str) -> RawGraph:
    with np.load(cache[filename], allow_pickle=True) as npz:
        keys = set(npz.files)
        needed = {"adj_data", "adj_indices", "adj_indptr", "adj_shape",
                  "labels"}
        if not needed <= keys:
            raise ConvertError(
                f"{filename}: missing arrays {sorted(needed - keys)}")
        n = int(npz["adj_shape"][0])
        edges = _csr_edges(npz["adj_indices"], npz["adj_indptr"], n)
        if "attr_matrix" in keys:
            x = np.asarray(npz["attr_matrix"], dtype=np.float64)
        elif {"attr_data", "attr_indices", "attr_indptr", "attr_shape"} <= keys:
            x = _csr_rows(npz["attr_data"], npz["attr_indices"],
                          npz["attr_indptr"], npz["attr_shape"])
        else:
            raise ConvertError(f"{filename}: no attribute matrix found")
        y = np.asarray(npz["labels"], dtype=np.int64)
    if x.shape[0] != n or y.shape[0] != n:
        raise ConvertError(f"{filename}: node count mismatch between "
                           f"adjacency ({n}), attributes ({x.shape[0]}) "
                           f"and labels ({y.shape[0]})")
    return RawGraph(x, y, edges)
