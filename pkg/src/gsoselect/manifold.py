"""Input and label geometry for the alignment pencil.

The input side is a symmetrized k-nearest-neighbour graph on feature rows
(L2 distances, exhaustive O(m^2 d)): an edge joins i and j when either is
among the other's k nearest. Ties are broken by (distance, node index).
Binary mode weights every edge 1; rbf mode weights the same edge set with
exp(-||z_i - z_j||^2 / (2 sigma^2)), sigma defaulting to the median edge
distance.

The label side is the Laplacian of the disjoint union of per-class complete
graphs. It is only ever applied, never materialized by the operator itself:

    (L_Y v)_i = count(y_i) * v_i - sum_{j : y_j = y_i} v_j
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import GraphBundle
from .sparselin import LinearOperator, SparseMatrix, csr_from_coo

SUBSETS = ("all", "val", "test", "sample")


@dataclass(frozen=True)
class ManifoldConfig:
    k: int = 2
    mode: str = "binary"             # "binary" | "rbf"
    bandwidth: float | None = None   # rbf scale; None triggers median heuristic
    subset: str = "val"
    sample_size: int = 2000
    sample_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("binary", "rbf"):
            raise ValueError(f"unknown manifold mode {self.mode!r}")
        if self.subset not in SUBSETS:
            raise ValueError(f"unknown subset {self.subset!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass
class KnnGraph:
    laplacian: SparseMatrix
    edges: np.ndarray        # (E, 2) int64, u < v
    weights: np.ndarray      # (E,)
    degrees: np.ndarray      # (m,) weighted degrees
    k: int
    mode: str
    bandwidth: float | None  # the sigma actually used (None in binary mode)

    @property
    def m(self) -> int:
        return self.laplacian.n_rows

    def trace(self) -> float:
        return float(self.degrees.sum())


def _knn_directed(z: np.ndarray, k: int) -> np.ndarray:
    """Indices (m, k) of each row's k nearest others, ties by lower index.

    Distances come from the Gram expansion, symmetrized so d(i,j) and d(j,i)
    agree bitwise; chunked over rows to bound memory at large m.
    """
    m = z.shape[0]
    sq = np.einsum("ij,ij->i", z, z)
    out = np.empty((m, k), dtype=np.int64)
    chunk = max(1, min(m, int(2e7) // max(m, 1)))
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (z[start:stop] @ z.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        out[start:stop] = order[:, :k]
    return out


def build_knn_laplacian(z: np.ndarray, cfg: ManifoldConfig) -> KnnGraph:
    z = np.ascontiguousarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError("features must be 2-D")
    m = z.shape[0]
    if cfg.k >= m:
        raise ValueError(f"k={cfg.k} needs at least k+1={cfg.k + 1} rows, got {m}")

    nbr = _knn_directed(z, cfg.k)
    src = np.repeat(np.arange(m, dtype=np.int64), cfg.k)
    dst = nbr.reshape(-1)
    u = np.minimum(src, dst)
    v = np.maximum(src, dst)
    key = u * m + v
    order = np.argsort(key, kind="stable")
    keep = np.ones(key.size, dtype=bool)
    keep[1:] = key[order][1:] != key[order][:-1]
    u, v = u[order][keep], v[order][keep]

    if cfg.mode == "binary":
        w = np.ones(u.size)
        sigma = None
    else:
        diff = z[u] - z[v]
        d2 = np.einsum("ij,ij->i", diff, diff)
        sigma = cfg.bandwidth
        if sigma is None:
            sigma = float(np.median(np.sqrt(d2)))
        if sigma <= 0.0:
            sigma = 1.0          # degenerate cloud of identical points
        w = np.exp(-d2 / (2.0 * sigma * sigma))

    deg = np.zeros(m)
    np.add.at(deg, u, w)
    np.add.at(deg, v, w)
    nodes = np.arange(m, dtype=np.int64)
    lap = csr_from_coo(np.r_[u, v, nodes], np.r_[v, u, nodes],
                       np.r_[-w, -w, deg], (m, m))
    edges = np.stack([u, v], axis=1)
    return KnnGraph(lap, edges, w, deg, cfg.k, cfg.mode, sigma)


# ---------------------------------------------------------------------------
# label Laplacian
# ---------------------------------------------------------------------------

class LabelLaplacianOp(LinearOperator):
    """Matrix-free Laplacian of per-class complete graphs."""

    def __init__(self, labels: np.ndarray, n_classes: int | None = None):
        self.labels = np.asarray(labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ValueError("labels must be 1-D")
        self.n = int(self.labels.size)
        self.n_classes = int(n_classes if n_classes is not None
                             else self.labels.max() + 1 if self.n else 0)
        self.counts = np.bincount(self.labels, minlength=self.n_classes).astype(float)

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        class_sums = np.bincount(self.labels, weights=v,
                                 minlength=self.n_classes)
        return self.counts[self.labels] * v - class_sums[self.labels]


def dense_label_laplacian(labels: np.ndarray) -> np.ndarray:
    """Dense D_Y - W_Y; used only by the small-problem dense solve path."""
    labels = np.asarray(labels, dtype=np.int64)
    same = (labels[:, None] == labels[None, :]).astype(np.float64)
    return np.diag(same.sum(axis=1)) - same


# ---------------------------------------------------------------------------
# subset selection
# ---------------------------------------------------------------------------

def select_subset(b: GraphBundle, cfg: ManifoldConfig) -> np.ndarray:
    """Node indices the metric is evaluated on: ascending, deterministic."""
    if cfg.subset == "all":
        return np.arange(b.n, dtype=np.int64)
    if cfg.subset == "val":
        return np.flatnonzero(b.val_mask).astype(np.int64)
    if cfg.subset == "test":
        return np.flatnonzero(b.test_mask).astype(np.int64)
    rng = np.random.default_rng(cfg.sample_seed)
    size = min(cfg.sample_size, b.n)
    return np.sort(rng.choice(b.n, size=size, replace=False)).astype(np.int64)
