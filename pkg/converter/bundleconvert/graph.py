"""In-memory graph representation shared by all format parsers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConvertError(RuntimeError):
    """User-facing conversion failure (download, parse, checksum, config)."""


@dataclass
class RawGraph:
    """Parser output before canonicalization and split assignment.

    edges may be directed, duplicated, or contain self-loops; x is kept in
    whatever float dtype the distribution ships.  Masks are present only
    when the distribution ships a public split.
    """

    x: np.ndarray                    # (n, d)
    y: np.ndarray                    # (n,) int64
    edges: np.ndarray                # (E, 2) int64, as distributed
    train_mask: np.ndarray | None = None
    val_mask: np.ndarray | None = None
    test_mask: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def c(self) -> int:
        return int(self.y.max()) + 1 if self.y.size else 0

    def has_public_split(self) -> bool:
        return self.train_mask is not None


def canonicalize_edges(edges: np.ndarray, n: int) -> np.ndarray:
    """Undirected canonical form: u < v, lexicographically sorted, unique.

    Self-loops are dropped.  This mirrors the bundle format contract, under
    which raw directed edge counts may shrink (symmetric pairs merge).
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size == 0:
        return edges
    if edges.min() < 0 or edges.max() >= n:
        raise ConvertError(
            f"edge endpoint out of range:, n={n}, "
            f"max index {edges.max()}, min index {edges.min()}")
    u = np.minimum(edges[:, 0], edges[:, 1])
    v = np.maximum(edges[:, 0], edges[:, 1])
    keep = u != v
    u, v = u[keep], v[keep]
    keys = np.unique(u * np.int64(n) + v)
    return np.stack([keys // n, keys % n], axis=1)


def random_split(n: int, train_frac: float, val_frac: float,
                 seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint train/val/test masks from a seeded permutation.

    Fractions must leave room for a non-empty test partition.
    """
    if not (0.0 < train_frac and 0.0 < val_frac
            and train_frac + val_frac < 1.0):
        raise ConvertError(
            f"split fractions must be positive and sum below 1, "
            f"got train={train_frac} val={val_frac}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_frac * n))
    n_val = int(round(val_frac * n))
    masks = []
    for part in (order[:n_train], order[n_train:n_train + n_val],
                 order[n_train + n_val:]):
        m = np.zeros(n, dtype=bool)
        m[part] = True
        masks.append(m)
    return tuple(masks)
