"""Graph bundle I/O and synthetic benchmark generation.

A bundle is a directory holding one node-classified graph:

    meta.json       {"n": ..., "d": ..., "c": ..., "name": ...}
    edges.tsv       one undirected edge per line, "u<TAB>v"
    features.tsv    n lines of d tab-separated floats, OR
    features.f32    raw row-major little-endian float32 (takes precedence)
    labels.tsv      one integer class per line
    split.tsv       one of train/val/test/none per line

Edges are stored canonically: u < v, sorted lexicographically, no self-loops,
no duplicates. Loaders accept sloppier input (self-loops are stripped with a
warning count, duplicates merged silently with a count); savers only ever
write canonical form, so save -> load round-trips exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPLIT_TOKENS = ("train", "val", "test", "none")


class BundleFormatError(ValueError):
    """Raised when a bundle directory violates the format contract."""


@dataclass
class GraphBundle:
    name: str
    x: np.ndarray            # (n, d) float64 node features
    y: np.ndarray            # (n,) int64 labels in [0, c)
    edges: np.ndarray        # (E, 2) int64, canonical u < v, lexicographic
    train_mask: np.ndarray   # (n,) bool, disjoint from val/test
    val_mask: np.ndarray
    test_mask: np.ndarray
    c: int
    notes: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]


def canonicalize_edges(edges: np.ndarray, n: int) -> tuple[np.ndarray, int, int]:
    """Sort endpoints, strip self-loops, merge duplicates.

    Returns (canonical (E,2) array, n_self_loops_stripped, n_duplicates_merged).
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise BundleFormatError(
            f"edge endpoint out of range [0, {n}): "
            f"min={edges.min()}, max={edges.max()}"
        )
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    keep = lo != hi
    n_self = int((~keep).sum())
    lo, hi = lo[keep], hi[keep]
    # lexicographic sort + dedup on the (u, v) pairs
    key = lo * n + hi
    order = np.argsort(key, kind="stable")
    key = key[order]
    uniq = np.ones(key.shape[0], dtype=bool)
    uniq[1:] = key[1:] != key[:-1]
    n_dup = int((~uniq).sum())
    out = np.stack([lo[order][uniq], hi[order][uniq]], axis=1)
    return out, n_self, n_dup


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise BundleFormatError(msg)


def _validate_arrays(name, x, y, edges, train, val, test, c):
    n = x.shape[0]
    _require(x.ndim == 2, f"features must be 2-D, got shape {x.shape}")
    _require(np.isfinite(x).all(), "features contain non-finite values")
    _require(y.shape == (n,), f"labels shape {y.shape} != ({n},)")
    _require(c >= 1, f"class count must be >= 1, got {c}")
    _require(y.size == 0 or (y.min() >= 0 and y.max() < c),
             f"labels must lie in [0, {c})")
    for nm, m in (("train", train), ("val", val), ("test", test)):
        _require(m.shape == (n,) and m.dtype == bool, f"{nm} mask malformed")
        _require(m.any(), f"{nm} split is empty")
    overlap = (train.astype(int) + val.astype(int) + test.astype(int)).max()
    _require(overlap <= 1, "split masks overlap")
    if edges.size:
        _require(bool((edges[:, 0] < edges[:, 1]).all()), "edges not canonical (u < v)")


def make_bundle(name, x, y, edges, train_mask, val_mask, test_mask, c,
                notes=None) -> GraphBundle:
    """Assemble and validate a bundle from in-memory arrays.

    Edges may be sloppy (unordered, self-loops, duplicates); they are
    canonicalized here.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    train_mask = np.asarray(train_mask, dtype=bool)
    val_mask = np.asarray(val_mask, dtype=bool)
    test_mask = np.asarray(test_mask, dtype=bool)
    edges, n_self, n_dup = canonicalize_edges(np.asarray(edges), x.shape[0])
    notes = dict(notes or {})
    if n_self:
        notes["self_loops_stripped"] = notes.get("self_loops_stripped", 0) + n_self
    if n_dup:
        notes["duplicate_edges_merged"] = notes.get("duplicate_edges_merged", 0) + n_dup
    _validate_arrays(name, x, y, edges, train_mask, val_mask, test_mask, c)
    return GraphBundle(name=name, x=x, y=y, edges=edges, train_mask=train_mask,
                       val_mask=val_mask, test_mask=test_mask, c=int(c), notes=notes)


# ---------------------------------------------------------------------------
# directory I/O
# ---------------------------------------------------------------------------

def load_bundle(path: str | Path) -> GraphBundle:
    path = Path(path)
    meta_file = path / "meta.json"
    _require(meta_file.is_file(), f"missing {meta_file}")
    try:
        meta = json.loads(meta_file.read_text())
    except json.JSONDecodeError as e:
        raise BundleFormatError(f"meta.json is not valid JSON: {e}") from e
    for key in ("n", "d", "c", "name"):
        _require(key in meta, f"meta.json missing key '{key}'")
    n, d, c = int(meta["n"]), int(meta["d"]), int(meta["c"])
    _require(n >= 1 and d >= 1 and c >= 1, "meta n/d/c must be positive")

    f32 = path / "features.f32"
    if f32.is_file():
        raw = np.fromfile(f32, dtype="<f4")
        _require(raw.size == n * d,
                 f"features.f32 holds {raw.size} floats, expected {n * d}")
        x = raw.astype(np.float64).reshape(n, d)
    else:
        tsv = path / "features.tsv"
        _require(tsv.is_file(), "missing features.f32 and features.tsv")
        x = np.loadtxt(tsv, delimiter="\t", dtype=np.float64, ndmin=2)
        _require(x.shape == (n, d),
                 f"features.tsv shape {x.shape} != ({n}, {d})")

    labels_file = path / "labels.tsv"
    _require(labels_file.is_file(), "missing labels.tsv")
    y = np.loadtxt(labels_file, dtype=np.int64, ndmin=1)
    _require(y.shape == (n,), f"labels.tsv has {y.shape[0]} rows, expected {n}")

    edges_file = path / "edges.tsv"
    _require(edges_file.is_file(), "missing edges.tsv")
    text = edges_file.read_text()
    if text.strip():
        edges = np.loadtxt(edges_file, delimiter="\t", dtype=np.int64, ndmin=2)
        _require(edges.shape[1] == 2, "edges.tsv rows must have two columns")
    else:
        edges = np.empty((0, 2), dtype=np.int64)

    split_file = path / "split.tsv"
    _require(split_file.is_file(), "missing split.tsv")
    tokens = split_file.read_text().split()
    _require(len(tokens) == n, f"split.tsv has {len(tokens)} rows, expected {n}")
    bad = sorted(set(tokens) - set(SPLIT_TOKENS))
    _require(not bad, f"split.tsv has unknown tokens {bad}")
    tok = np.array(tokens)

    return make_bundle(str(meta["name"]), x, y, edges,
                       tok == "train", tok == "val", tok == "test", c)


def save_bundle(b: GraphBundle, path: str | Path,
                features_format: str = "tsv") -> Path:
    """Write a bundle directory in canonical form.

    features_format "tsv" writes full-precision text (exact float64
    round-trip); "f32" writes the raw float32 blob (lossy for data that is
    not float32-representable).
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {"n": b.n, "d": b.d, "c": b.c, "name": b.name}
    (path / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")

    with open(path / "edges.tsv", "w") as fh:
        for u, v in b.edges:
            fh.write(f"{u}\t{v}\n")

    if features_format == "f32":
        b.x.astype("<f4").tofile(path / "features.f32")
        (path / "features.tsv").unlink(missing_ok=True)
    elif features_format == "tsv":
        np.savetxt(path / "features.tsv", b.x, fmt="%.17g", delimiter="\t")
        (path / "features.f32").unlink(missing_ok=True)
    else:
        raise ValueError(f"unknown features_format {features_format!r}")

    np.savetxt(path / "labels.tsv", b.y, fmt="%d")

    tokens = np.full(b.n, "none", dtype=object)
    tokens[b.train_mask] = "train"
    tokens[b.val_mask] = "val"
    tokens[b.test_mask] = "test"
    (path / "split.tsv").write_text("\n".join(tokens) + "\n")
    return path


def validate_bundle(b: GraphBundle) -> dict:
    """Structural diagnostics for reports and the ingest command."""
    deg = np.zeros(b.n, dtype=np.int64)
    if b.n_edges:
        np.add.at(deg, b.edges[:, 0], 1)
        np.add.at(deg, b.edges[:, 1], 1)
    return {
        "name": b.name,
        "n": b.n,
        "d": b.d,
        "c": b.c,
        "edges": b.n_edges,
        "degree_min": int(deg.min()) if b.n else 0,
        "degree_mean": float(deg.mean()) if b.n else 0.0,
        "degree_max": int(deg.max()) if b.n else 0,
        "isolated_nodes": int((deg == 0).sum()),
        "class_counts": np.bincount(b.y, minlength=b.c).tolist(),
        "split_sizes": {
            "train": int(b.train_mask.sum()),
            "val": int(b.val_mask.sum()),
            "test": int(b.test_mask.sum()),
            "none": int(b.n - b.train_mask.sum() - b.val_mask.sum()
                        - b.test_mask.sum()),
        },
        "notes": dict(b.notes),
    }


# ---------------------------------------------------------------------------
# stochastic block model generation
# ---------------------------------------------------------------------------

@dataclass
class SbmConfig:
    n: int
    c: int
    p_in: float
    p_out: float
    seed: int = 0
    d: int = 8
    feature_mode: str = "gaussian"   # "gaussian" | "one-hot"
    mu_sep: float = 1.0              # distance scale of class means (gaussian)
    sigma: float = 1.0               # per-coordinate noise stddev (gaussian)
    flip_prob: float = 0.1           # one-hot corruption probability
    train_frac: float = 0.6
    val_frac: float = 0.2
    name: str | None = None


def _bernoulli_indices(rng: np.random.Generator, count: int, p: float) -> np.ndarray:
    """Indices i in [0, count) kept independently with probability p.

    Uses geometric gap sampling so cost is O(hits) rather than O(count);
    the marginal law per index is exactly Bernoulli(p).
    """
    if count <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(count, dtype=np.int64)
    chunks = []
    pos = -1
    while pos < count:
        want = max(16, int((count - pos) * p * 1.2) + 16)
        gaps = rng.geometric(p, size=want)
        idx = pos + np.cumsum(gaps)
        inside = idx[idx < count]
        chunks.append(inside)
        if inside.size < idx.size:
            break
        pos = int(idx[-1])
    return np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)


def _triu_pair_from_index(t: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Invert row-major upper-triangle (i<j) linear indices for an s-block."""
    t = t.astype(np.float64)
    b = 2 * s - 1
    r = np.floor((b - np.sqrt(b * b - 8.0 * t)) / 2.0).astype(np.int64)
    ti = t.astype(np.int64)

    def before(r):
        return r * s - r * (r + 1) // 2

    # float sqrt can land one row off near boundaries; nudge exactly
    r = np.where(before(r + 1) <= ti, r + 1, r)
    r = np.where(before(r) > ti, r - 1, r)
    col = ti - before(r)
    return r, r + 1 + col


def generate_sbm(cfg: SbmConfig) -> GraphBundle:
    """Planted-partition graph with class-informative features.

    Blocks are contiguous index ranges of size n // c, remainder joining the
    last block. Every unordered node pair draws an edge independently:
    probability p_in inside a block, p_out across blocks. Deterministic for a
    fixed config (single seeded generator, fixed block-pair order).
    """
    if cfg.n < cfg.c:
        raise ValueError(f"n={cfg.n} smaller than c={cfg.c}")
    if cfg.feature_mode not in ("gaussian", "one-hot"):
        raise ValueError(f"unknown feature_mode {cfg.feature_mode!r}")
    rng = np.random.default_rng(cfg.seed)

    sizes = np.full(cfg.c, cfg.n // cfg.c, dtype=np.int64)
    sizes[-1] += cfg.n % cfg.c
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    y = np.repeat(np.arange(cfg.c, dtype=np.int64), sizes)

    edge_chunks = []
    for bi in range(cfg.c):
        si, oi = int(sizes[bi]), int(offsets[bi])
        hits = _bernoulli_indices(rng, si * (si - 1) // 2, cfg.p_in)
        if hits.size:
            u, v = _triu_pair_from_index(hits, si)
            edge_chunks.append(np.stack([u + oi, v + oi], axis=1))
        for bj in range(bi + 1, cfg.c):
            sj, oj = int(sizes[bj]), int(offsets[bj])
            hits = _bernoulli_indices(rng, si * sj, cfg.p_out)
            if hits.size:
                u = hits // sj + oi
                v = hits % sj + oj
                edge_chunks.append(np.stack([u, v], axis=1))
    edges = (np.concatenate(edge_chunks, axis=0) if edge_chunks
             else np.empty((0, 2), dtype=np.int64))

    if cfg.feature_mode == "gaussian":
        gauss = rng.standard_normal((cfg.d, max(cfg.c, 1)))
        if cfg.d >= cfg.c:
            q, _ = np.linalg.qr(gauss[:, :cfg.c])
            means = cfg.mu_sep * q.T                     # (c, d), orthonormal rows
        else:
            dirs = gauss.T[:cfg.c]
            means = cfg.mu_sep * dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        x = means[y] + cfg.sigma * rng.standard_normal((cfg.n, cfg.d))
    else:
        if cfg.d < cfg.c:
            raise ValueError(f"one-hot features need d >= c, got d={cfg.d} c={cfg.c}")
        shown = y.copy()
        flip = rng.random(cfg.n) < cfg.flip_prob
        shown[flip] = rng.integers(0, cfg.c, size=int(flip.sum()))
        x = np.zeros((cfg.n, cfg.d))
        x[np.arange(cfg.n), shown] = 1.0

    # stratified split keeps every class represented in every part
    part = np.full(cfg.n, "test", dtype=object)
    for cls in range(cfg.c):
        idx = np.flatnonzero(y == cls)
        idx = rng.permutation(idx)
        n_tr = int(round(cfg.train_frac * idx.size))
        n_va = int(round(cfg.val_frac * idx.size))
        part[idx[:n_tr]] = "train"
        part[idx[n_tr:n_tr + n_va]] = "val"
    for which in ("train", "val", "test"):     # guard degenerate fractions
        if not (part == which).any():
            donor = max(SPLIT_TOKENS[:3], key=lambda w: (part == w).sum())
            part[np.flatnonzero(part == donor)[-1]] = which

    name = cfg.name or (f"sbm-n{cfg.n}-c{cfg.c}-pin{cfg.p_in:g}"
                        f"-pout{cfg.p_out:g}-seed{cfg.seed}")
    return make_bundle(name, x, y, edges,
                       part == "train", part == "val", part == "test", cfg.c)


def expected_sbm_edges(cfg: SbmConfig) -> tuple[float, float]:
    """Mean and stddev of the SBM edge count (independent Bernoulli pairs)."""
    sizes = np.full(cfg.c, cfg.n // cfg.c, dtype=np.float64)
    sizes[-1] += cfg.n % cfg.c
    intra = float((sizes * (sizes - 1) / 2).sum())
    cross = float((cfg.n * cfg.n - (sizes ** 2).sum()) / 2)
    mean = intra * cfg.p_in + cross * cfg.p_out
    var = (intra * cfg.p_in * (1 - cfg.p_in)
           + cross * cfg.p_out * (1 - cfg.p_out))
    return mean, math.sqrt(var)
