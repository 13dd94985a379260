"""Parser for the pickled citation-network distribution (Cora, Citeseer, Pubmed).

Each dataset ships eight files, ind.<name>.<suffix>:

    x / y        training-node features (scipy CSR) and one-hot labels
    tx / ty      test-node features and one-hot labels
    allx / ally  features/labels for every non-test node
    graph        dict: node id -> neighbor id list
    test.index   text file, one test node id per line (unsorted)

Node ids place the test block last: allx rows are ids [0, n_allx) and test
ids start at n_allx.  tx rows follow test.index order, but stacking them
after allx parks row r at the r-th *sorted* test id, so rows are then moved
from sorted-id to shipped positions.  One distribution quirk is handled
explicitly: ids inside the test range may be missing from test.index
(isolated nodes); their feature and label rows are zero-filled, which
resolves their argmax label to class 0 — the conventional treatment.
"""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np

from .graph import ConvertError, RawGraph

VAL_SIZE = 500  # nodes immediately after the training block, by convention


def _load_pickle(path: Path):
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")  # python2-era pickles


def _dense(block) -> np.ndarray:
    # feature blocks are scipy sparse matrices; plain arrays pass through
    if hasattr(block, "toarray"):
        return np.asarray(block.toarray(), dtype=np.float64)
    return np.asarray(block, dtype=np.float64)


def parse(cache: dict[str, Path], name: str) -> RawGraph:
    try:
        y = np.asarray(_load_pickle(cache[f"ind.{name}.y"]))
        tx = _dense(_load_pickle(cache[f"ind.{name}.tx"]))
        ty = np.asarray(_load_pickle(cache[f"ind.{name}.ty"]), dtype=np.float64)
        allx = _dense(_load_pickle(cache[f"ind.{name}.allx"]))
        ally = np.asarray(_load_pickle(cache[f"ind.{name}.ally"]),
                          dtype=np.float64)
        graph = _load_pickle(cache[f"ind.{name}.graph"])
        test_idx = np.loadtxt(cache[f"ind.{name}.test.index"],
                              dtype=np.int64, ndmin=1)
    except (pickle.UnpicklingError, KeyError, OSError, EOFError) as exc:
        raise ConvertError(f"failed to parse planetoid files: {exc}") from exc

    n_allx = allx.shape[0]
    lo, hi = int(test_idx.min()), int(test_idx.max())
    if lo != n_allx:
        raise ConvertError(
            f"planetoid layout violation: test ids start at {lo}, "
            f"expected {n_allx} (size of allx)")
    srt = np.sort(test_idx)
    if hi - lo + 1 != test_idx.size:
        # gaps in the test range: zero-fill rows for the missing ids
        width = hi - lo + 1
        tx_full = np.zeros((width, tx.shape[1]))
        ty_full = np.zeros((width, ty.shape[1]))
        tx_full[srt - lo] = tx
        ty_full[srt - lo] = ty
        tx, ty = tx_full, ty_full

    features = np.vstack([allx, tx])
    onehot = np.vstack([ally, ty])
    # rows currently sit at sorted-id positions; move to shipped positions
    features[test_idx] = features[srt]
    onehot[test_idx] = onehot[srt]

    n = features.shape[0]
    labels = onehot.argmax(axis=1).astype(np.int64)

    pairs = [(u, v) for u, nbrs in graph.items() for v in nbrs
             if u < n and v < n]
    edges = (np.asarray(pairs, dtype=np.int64) if pairs
             else np.empty((0, 2), dtype=np.int64))

    train_mask = np.zeros(n, dtype=bool)
    val_mask = np.zeros(n, dtype=bool)
    test_mask = np.zeros(n, dtype=bool)
    n_train = y.shape[0]
    train_mask[:n_train] = True
    val_mask[n_train:n_train + VAL_SIZE] = True
    test_mask[test_idx] = True
    # in shipped layouts the val block ends before the test ids; clamp so
    # undersized graphs still produce disjoint masks
    val_mask &= ~test_mask
    return RawGraph(features, labels, edges, train_mask, val_mask, test_mask)
