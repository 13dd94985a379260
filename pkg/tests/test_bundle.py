import math

import numpy as np
import pytest

from gsoselect.bundle import (BundleFormatError, SbmConfig, canonicalize_edges,
                              generate_sbm, load_bundle, make_bundle,
                              save_bundle, validate_bundle)
from gsoselect.bundle import _bernoulli_indices, _triu_pair_from_index


def tiny_bundle(n=6, d=3, c=2, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    y = rng.integers(0, c, size=n)
    edges = [(i, (i + 1) % n) for i in range(n)]
    part = np.array(["train", "val", "test"] * (n // 3 + 1))[:n]
    return make_bundle("tiny", x, y, edges,
                       part == "train", part == "val", part == "test", c)


# ---------------------------------------------------------------------------
# canonical edge handling
# ---------------------------------------------------------------------------

def test_canonicalize_orders_and_sorts():
    edges, n_self, n_dup = canonicalize_edges([(3, 1), (0, 2), (2, 0)], n=5)
    assert n_self == 0 and n_dup == 1
    assert edges.tolist() == [[0, 2], [1, 3]]


def test_self_loops_stripped_with_count():
    edges, n_self, n_dup = canonicalize_edges([(1, 1), (0, 1), (2, 2)], n=3)
    assert n_self == 2 and n_dup == 0
    assert edges.tolist() == [[0, 1]]


def test_duplicate_after_reorientation_merged():
    # (1,0) and (0,1) are the same undirected edge
    edges, _, n_dup = canonicalize_edges([(1, 0), (0, 1)], n=2)
    assert n_dup == 1
    assert edges.tolist() == [[0, 1]]


def test_out_of_range_endpoint_rejected():
    with pytest.raises(BundleFormatError):
        canonicalize_edges([(0, 7)], n=4)


# ---------------------------------------------------------------------------
# directory round-trip
# ---------------------------------------------------------------------------

def test_save_load_round_trip_exact(tmp_path):
    b = tiny_bundle(seed=3)
    save_bundle(b, tmp_path / "b")
    b2 = load_bundle(tmp_path / "b")
    assert b2.name == b.name and b2.c == b.c
    assert np.array_equal(b2.x, b.x)          # %.17g text is float64-exact
    assert np.array_equal(b2.y, b.y)
    assert np.array_equal(b2.edges, b.edges)
    for m in ("train_mask", "val_mask", "test_mask"):
        assert np.array_equal(getattr(b2, m), getattr(b, m))


def test_f32_takes_precedence_over_tsv(tmp_path):
    b = tiny_bundle(seed=4)
    save_bundle(b, tmp_path / "b")                       # writes features.tsv
    other = np.arange(b.n * b.d, dtype="<f4")
    other.tofile(tmp_path / "b" / "features.f32")        # add conflicting blob
    b2 = load_bundle(tmp_path / "b")
    assert b2.x.dtype == np.float64                      # promoted at load
    assert np.array_equal(b2.x, other.astype(np.float64).reshape(b.n, b.d))


def test_f32_round_trip(tmp_path):
    b = tiny_bundle(seed=5)
    b.x[:] = b.x.astype(np.float32)                      # make values exact in f32
    save_bundle(b, tmp_path / "b", features_format="f32")
    assert not (tmp_path / "b" / "features.tsv").exists()
    b2 = load_bundle(tmp_path / "b")
    assert np.array_equal(b2.x, b.x)


def test_loader_reports_sloppy_edges(tmp_path):
    b = tiny_bundle()
    save_bundle(b, tmp_path / "b")
    with open(tmp_path / "b" / "edges.tsv", "a") as fh:
        fh.write("2\t2\n0\t1\n")                         # self-loop + duplicate
    b2 = load_bundle(tmp_path / "b")
    assert b2.notes["self_loops_stripped"] == 1
    assert b2.notes["duplicate_edges_merged"] == 1
    assert np.array_equal(b2.edges, b.edges)


def test_validation_errors(tmp_path):
    b = tiny_bundle()
    p = save_bundle(b, tmp_path / "b")

    (p / "labels.tsv").write_text("\n".join(["9"] * b.n) + "\n")
    with pytest.raises(BundleFormatError):
        load_bundle(p)
    np.savetxt(p / "labels.tsv", b.y, fmt="%d")

    bad = b.x.copy()
    bad[0, 0] = np.nan
    np.savetxt(p / "features.tsv", bad, fmt="%.17g", delimiter="\t")
    with pytest.raises(BundleFormatError):
        load_bundle(p)
    np.savetxt(p / "features.tsv", b.x, fmt="%.17g", delimiter="\t")

    (p / "split.tsv").write_text("\n".join(["train"] * b.n) + "\n")
    with pytest.raises(BundleFormatError):               # val/test empty
        load_bundle(p)
    (p / "split.tsv").write_text("\n".join(["banana"] * b.n) + "\n")
    with pytest.raises(BundleFormatError):
        load_bundle(p)


def test_overlapping_masks_rejected():
    b = tiny_bundle()
    with pytest.raises(BundleFormatError):
        make_bundle(b.name, b.x, b.y, b.edges, b.train_mask, b.train_mask,
                    b.test_mask, b.c)


def test_missing_files_rejected(tmp_path):
    with pytest.raises(BundleFormatError):
        load_bundle(tmp_path)


# ---------------------------------------------------------------------------
# SBM generation
# ---------------------------------------------------------------------------

def test_sbm_extreme_probs_exact():
    cfg = SbmConfig(n=4, c=2, p_in=1.0, p_out=0.0, seed=0, d=2)
    b = generate_sbm(cfg)
    assert b.edges.tolist() == [[0, 1], [2, 3]]
    assert b.y.tolist() == [0, 0, 1, 1]


def test_sbm_blocks_contiguous_remainder_last():
    b = generate_sbm(SbmConfig(n=10, c=3, p_in=0.5, p_out=0.1, seed=1, d=3))
    assert b.y.tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 2, 2]


def test_sbm_edge_count_matches_binomial_expectation():
    cfg = SbmConfig(n=200, c=2, p_in=0.1, p_out=0.01, seed=7)
    b = generate_sbm(cfg)
    # independent oracle: blocks of 100, C(100,2) intra pairs each, 100*100 cross
    intra_pairs = 2 * (100 * 99 // 2)
    cross_pairs = 100 * 100
    mean = intra_pairs * 0.1 + cross_pairs * 0.01
    sigma = math.sqrt(intra_pairs * 0.1 * 0.9 + cross_pairs * 0.01 * 0.99)
    assert abs(b.n_edges - mean) <= 4 * sigma


@pytest.mark.parametrize("p", [0.02, 0.3, 0.97])
def test_bernoulli_indices_marginal_rate(p):
    rng = np.random.default_rng(11)
    count = 5000
    hits = _bernoulli_indices(rng, count, p)
    assert np.all(np.diff(hits) > 0) and (hits >= 0).all() and (hits < count).all()
    sigma = math.sqrt(count * p * (1 - p))
    assert abs(hits.size - count * p) <= 4 * sigma


@pytest.mark.parametrize("s", [2, 3, 7, 41])
def test_triangle_index_inversion_matches_triu(s):
    t = np.arange(s * (s - 1) // 2)
    u, v = _triu_pair_from_index(t, s)
    eu, ev = np.triu_indices(s, k=1)
    assert np.array_equal(u, eu) and np.array_equal(v, ev)


def test_sbm_deterministic_per_seed():
    cfg = SbmConfig(n=60, c=3, p_in=0.2, p_out=0.05, seed=42)
    a, b = generate_sbm(cfg), generate_sbm(cfg)
    assert np.array_equal(a.edges, b.edges)
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.train_mask, b.train_mask)
    c = generate_sbm(SbmConfig(n=60, c=3, p_in=0.2, p_out=0.05, seed=43))
    assert not np.array_equal(a.x, c.x)


def test_sbm_splits_stratified_and_disjoint():
    b = generate_sbm(SbmConfig(n=90, c=3, p_in=0.2, p_out=0.02, seed=5))
    total = b.train_mask.astype(int) + b.val_mask.astype(int) + b.test_mask.astype(int)
    assert total.max() == 1 and total.min() == 1      # SBM assigns every node
    for mask in (b.train_mask, b.val_mask, b.test_mask):
        assert all(mask[b.y == cls].any() for cls in range(b.c))


def test_sbm_one_hot_features():
    b = generate_sbm(SbmConfig(n=40, c=4, p_in=0.3, p_out=0.05, seed=2, d=4,
                               feature_mode="one-hot", flip_prob=0.0))
    assert np.array_equal(b.x, np.eye(4)[b.y])
    noisy = generate_sbm(SbmConfig(n=400, c=4, p_in=0.3, p_out=0.05, seed=2, d=4,
                                   feature_mode="one-hot", flip_prob=0.5))
    mismatch = (noisy.x.argmax(axis=1) != noisy.y).mean()
    assert 0.2 < mismatch < 0.55                      # flip 0.5, uniform reassign


def test_validate_bundle_diagnostics():
    b = generate_sbm(SbmConfig(n=30, c=2, p_in=0.4, p_out=0.1, seed=9))
    diag = validate_bundle(b)
    assert diag["n"] == 30 and diag["c"] == 2
    assert sum(diag["class_counts"]) == 30
    assert diag["split_sizes"]["train"] == int(b.train_mask.sum())
    assert diag["edges"] == b.n_edges
