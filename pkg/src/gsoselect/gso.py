"""Classical graph shift operators built from a bundle's edge list.

Seven candidates are supported, all sharing the adjacency sparsity pattern
off the diagonal:

    A      adjacency
    L      combinatorial Laplacian D - A
    Q      signless Laplacian D + A
    L_rw   random-walk Laplacian I - D^{-1} A
    L_sym  symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}
    A_hat  self-loop renormalized adjacency (D+I)^{-1/2} (A+I) (D+I)^{-1/2}
    H      random-walk transition matrix D^{-1} A

Zero-degree convention everywhere: 1/d and 1/sqrt(d) are taken as 0 for
isolated nodes, so every operator stays finite.
"""

from __future__ import annotations

import threading

import numpy as np

from .bundle import GraphBundle
from .sparselin import SparseMatrix, csr_from_coo

GSO_KINDS = ("A", "L", "Q", "L_rw", "L_sym", "A_hat", "H")
SYMMETRIC_KINDS = frozenset({"A", "L", "Q", "L_sym", "A_hat"})
IDENTITY = "identity"


def degrees(b: GraphBundle) -> np.ndarray:
    deg = np.zeros(b.n, dtype=np.float64)
    if b.n_edges:
        np.add.at(deg, b.edges[:, 0], 1.0)
        np.add.at(deg, b.edges[:, 1], 1.0)
    return deg


def _safe_inv(d: np.ndarray, power: float) -> np.ndarray:
    out = np.zeros_like(d)
    nz = d > 0
    out[nz] = d[nz] ** (-power)
    return out


def build_gso(b: GraphBundle, kind: str, *,
              ahat_self_loops: bool = True) -> SparseMatrix:
    """Assemble one shift operator as CSR.

    ahat_self_loops=False switches A_hat to the plain normalized adjacency
    D^{-1/2} A D^{-1/2} (no added self-loops).
    """
    if kind not in GSO_KINDS:
        raise ValueError(f"unknown GSO kind {kind!r}; expected one of {GSO_KINDS}")
    n = b.n
    u, v = b.edges[:, 0], b.edges[:, 1]
    deg = degrees(b)
    nodes = np.arange(n, dtype=np.int64)
    ones = np.ones(u.size)

    if kind == "A":
        rows, cols, vals = np.r_[u, v], np.r_[v, u], np.r_[ones, ones]
    elif kind in ("L", "Q"):
        sign = -1.0 if kind == "L" else 1.0
        keep = deg > 0                      # zero diagonal entries are dropped
        rows = np.r_[u, v, nodes[keep]]
        cols = np.r_[v, u, nodes[keep]]
        vals = np.r_[sign * ones, sign * ones, deg[keep]]
    elif kind == "L_rw":
        dinv = _safe_inv(deg, 1.0)
        rows = np.r_[u, v, nodes]
        cols = np.r_[v, u, nodes]
        vals = np.r_[-dinv[u], -dinv[v], np.ones(n)]
    elif kind == "L_sym":
        s = _safe_inv(deg, 0.5)
        off = -s[u] * s[v]
        rows = np.r_[u, v, nodes]
        cols = np.r_[v, u, nodes]
        vals = np.r_[off, off, np.ones(n)]
    elif kind == "A_hat":
        if ahat_self_loops:
            s = (deg + 1.0) ** -0.5
            off = s[u] * s[v]
            rows = np.r_[u, v, nodes]
            cols = np.r_[v, u, nodes]
            vals = np.r_[off, off, s * s]
        else:
            s = _safe_inv(deg, 0.5)
            off = s[u] * s[v]
            rows, cols, vals = np.r_[u, v], np.r_[v, u], np.r_[off, off]
    else:  # H
        dinv = _safe_inv(deg, 1.0)
        rows, cols, vals = np.r_[u, v], np.r_[v, u], np.r_[dinv[u], dinv[v]]

    return csr_from_coo(rows, cols, vals, (n, n))


def diffuse(s: SparseMatrix | None, x: np.ndarray) -> np.ndarray:
    """One shift application S X; s=None is the identity passthrough."""
    if s is None:
        return np.array(x, dtype=np.float64, copy=True)
    return s.matmat(x)


class GsoLibrary:
    """Per-bundle operator cache: each kind is built once and shared.

    Reads are lock-free off the dict; builds take an exclusive lock so
    concurrent callers never construct the same kind twice.
    """

    def __init__(self, bundle: GraphBundle, *, ahat_self_loops: bool = True):
        self.bundle = bundle
        self.ahat_self_loops = ahat_self_loops
        self._cache: dict[str, SparseMatrix] = {}
        self._lock = threading.Lock()

    def get(self, kind: str) -> SparseMatrix | None:
        if kind == IDENTITY:
            return None
        got = self._cache.get(kind)
        if got is None:
            with self._lock:
                got = self._cache.get(kind)
                if got is None:
                    got = build_gso(self.bundle, kind,
                                    ahat_self_loops=self.ahat_self_loops)
                    self._cache[kind] = got
        return got
