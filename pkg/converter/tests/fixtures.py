"""Tiny synthetic artifacts in each upstream distribution format.

Every builder writes files named exactly as the registry expects, so a
cache directory populated from here makes the full conversion pipeline run
without any network access.
"""

from __future__ import annotations

import gzip
import io
import pickle
import zipfile
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def _dump(path: Path, obj) -> None:
    with open(path, "wb") as fh:
        pickle.dump(obj, fh, protocol=2)


def _onehot(labels, c):
    out = np.zeros((len(labels), c))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def write_planetoid(cache: Path, name: str = "cora",
                    with_gap: bool = False) -> dict:
    """10-node graph; 7 non-test nodes, test ids shipped out of order.

    Feature row of node i is [i, i, i, i] so reordering is checkable.
    with_gap drops id 8 from test.index, exercising the zero-fill path
    (node 8 then reads as all-zero features, class 0).
    """
    d, c = 4, 3
    n_allx, n = 7, 10
    labels = np.array([0, 1, 2, 0, 1, 2, 0, 1, 2, 0])
    test_shipped = [9, 7] if with_gap else [9, 7, 8]

    allx = sp.csr_matrix(np.tile(np.arange(n_allx)[:, None], (1, d)).astype(float))
    ally = _onehot(labels[:n_allx], c)
    tx_rows = np.tile(np.asarray(test_shipped, dtype=float)[:, None], (1, d))
    tx = sp.csr_matrix(tx_rows)
    ty = _onehot(labels[test_shipped], c)
    x = allx[:2]
    y = ally[:2]
    graph = {0: [1, 2], 1: [0], 2: [0, 9], 3: [4], 4: [3], 5: [6],
             6: [5], 7: [8], 8: [7], 9: [2]}

    _dump(cache / f"ind.{name}.x", x)
    _dump(cache / f"ind.{name}.y", y)
    _dump(cache / f"ind.{name}.tx", tx)
    _dump(cache / f"ind.{name}.ty", ty)
    _dump(cache / f"ind.{name}.allx", allx)
    _dump(cache / f"ind.{name}.ally", ally)
    _dump(cache / f"ind.{name}.graph", graph)
    (cache / f"ind.{name}.test.index").write_text(
        "\n".join(str(i) for i in test_shipped) + "\n")
    return {"n": n, "d": d, "c": c, "labels": labels,
            "test_shipped": test_shipped, "n_train": 2}


def write_webkb(cache: Path, name: str = "cornell") -> dict:
    """6-node webpage graph with header rows and a shipped split."""
    n, d = 6, 5
    labels = [0, 1, 2, 1, 0, 2]
    lines = ["node_id\tfeature\tlabel"]
    for i in range(n):
        feats = ",".join(str((i + j) % 2) for j in range(d))
        lines.append(f"{i}\t{feats}\t{labels[i]}")
    (cache / f"{name}_features_labels.txt").write_text("\n".join(lines) + "\n")
    edges = ["node_id\tnode_id", "0\t1", "1\t2", "2\t0", "3\t4", "4\t5",
             "1\t0"]  # duplicate of 0-1 in reverse, merged on conversion
    (cache / f"{name}_edges.txt").write_text("\n".join(edges) + "\n")
    train = np.array([1, 1, 0, 0, 0, 0], dtype=bool)
    val = np.array([0, 0, 1, 1, 0, 0], dtype=bool)
    test = np.array([0, 0, 0, 0, 1, 1], dtype=bool)
    np.savez(cache / f"{name}_split_0.npz", train_mask=train, val_mask=val,
             test_mask=test)
    return {"n": n, "d": d, "c": 3, "labels": np.asarray(labels)}


def write_npz(cache: Path, filename: str = "amazon_electronics_computers.npz",
              dense_attrs: bool = False) -> dict:
    """8-node co-purchase-style archive with CSR adjacency."""
    n, d, c = 8, 3, 2
    adj = np.zeros((n, n))
    for u, v in [(0, 1), (1, 2), (2, 3), (4, 5), (6, 7), (0, 7)]:
        adj[u, v] = 1.0
        adj[v, u] = 1.0
    adj_csr = sp.csr_matrix(adj)
    attrs = np.arange(n * d, dtype=float).reshape(n, d)
    labels = np.array([0, 0, 1, 1, 0, 1, 0, 1])
    payload = {
        "adj_data": adj_csr.data, "adj_indices": adj_csr.indices,
        "adj_indptr": adj_csr.indptr, "adj_shape": np.array(adj_csr.shape),
        "labels": labels,
    }
    if dense_attrs:
        payload["attr_matrix"] = attrs
    else:
        attr_csr = sp.csr_matrix(attrs)
        payload.update({
            "attr_data": attr_csr.data, "attr_indices": attr_csr.indices,
            "attr_indptr": attr_csr.indptr,
            "attr_shape": np.array(attr_csr.shape),
        })
    np.savez(cache / filename, **payload)
    return {"n": n, "d": d, "c": c, "labels": labels, "attrs": attrs,
            "undirected_edges": 6}


def _gz(rows: str) -> bytes:
    return gzip.compress(rows.encode())


def write_arxiv_zip(cache: Path, filename: str = "arxiv.zip") -> dict:
    """10-node citation-style zip; years 2010..2019 split into 5 buckets."""
    n, d = 10, 3
    feats = "\n".join(",".join(f"{i}.{j}" for j in range(d))
                      for i in range(n)) + "\n"
    edges = "\n".join(f"{i},{(i + 1) % n}" for i in range(n)) + "\n"
    years = "\n".join(str(2010 + i) for i in range(n)) + "\n"
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr("arxiv/raw/node-feat.csv.gz", _gz(feats))
        zf.writestr("arxiv/raw/edge.csv.gz", _gz(edges))
        zf.writestr("arxiv/raw/node_year.csv.gz", _gz(years))
    (cache / filename).write_bytes(buf.getvalue())
    return {"n": n, "d": d, "c": 5}
