import numpy as np
import pytest

from gsoselect.bundle import SbmConfig, generate_sbm
from gsoselect.manifold import (LabelLaplacianOp, ManifoldConfig,
                                build_knn_laplacian, dense_label_laplacian,
                                select_subset)


def brute_force_knn_edges(z, k):
    """Independent oracle: python loops, explicit (distance, index) sort."""
    m = len(z)
    edges = set()
    for i in range(m):
        cand = sorted((float(np.sum((z[i] - z[j]) ** 2)), j)
                      for j in range(m) if j != i)
        for _, j in cand[:k]:
            edges.add((min(i, j), max(i, j)))
    return edges


# ---------------------------------------------------------------------------
# k-NN graph construction
# ---------------------------------------------------------------------------

def test_clustered_line_edges():
    z = np.array([[0.0], [0.1], [5.0], [5.1]])
    g = build_knn_laplacian(z, ManifoldConfig(k=1))
    assert g.edges.tolist() == [[0, 1], [2, 3]]
    expected = [[1, -1, 0, 0], [-1, 1, 0, 0], [0, 0, 1, -1], [0, 0, -1, 1]]
    assert np.array_equal(g.laplacian.to_dense(), expected)


def test_identical_rows_mutually_nearest():
    z = np.array([[2.0, 2.0], [9.0, 9.0], [2.0, 2.0]])
    g = build_knn_laplacian(z, ManifoldConfig(k=1))
    assert [0, 2] in g.edges.tolist()


def test_tie_breaks_by_lower_index():
    # node 0 sits exactly between nodes 1 and 2
    z = np.array([[0.0], [1.0], [-1.0]])
    g = build_knn_laplacian(z, ManifoldConfig(k=1))
    # 0 ties (1,2) -> picks 1; 1 picks 0; 2 picks 0
    assert g.edges.tolist() == [[0, 1], [0, 2]]


@pytest.mark.parametrize("seed,k", [(0, 1), (1, 2), (2, 3), (3, 5)])
def test_matches_brute_force_oracle(seed, k):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((40, 4))
    g = build_knn_laplacian(z, ManifoldConfig(k=k))
    assert {tuple(e) for e in g.edges.tolist()} == brute_force_knn_edges(z, k)


def test_union_symmetrization_and_degree_floor():
    rng = np.random.default_rng(7)
    z = rng.standard_normal((60, 3))
    k = 4
    g = build_knn_laplacian(z, ManifoldConfig(k=k))
    deg = np.zeros(60, dtype=int)
    np.add.at(deg, g.edges[:, 0], 1)
    np.add.at(deg, g.edges[:, 1], 1)
    assert deg.min() >= k


def test_laplacian_structure():
    rng = np.random.default_rng(11)
    z = rng.standard_normal((30, 5))
    for mode in ("binary", "rbf"):
        g = build_knn_laplacian(z, ManifoldConfig(k=3, mode=mode))
        dense = g.laplacian.to_dense()
        assert np.array_equal(dense, dense.T)
        assert np.abs(dense.sum(axis=1)).max() <= 1e-12
        assert np.linalg.eigvalsh(dense).min() >= -1e-12
        assert g.trace() == pytest.approx(np.trace(dense), rel=1e-12)


def test_rbf_weights_median_bandwidth():
    rng = np.random.default_rng(5)
    z = rng.standard_normal((25, 3))
    g = build_knn_laplacian(z, ManifoldConfig(k=2, mode="rbf"))
    d2 = np.sum((z[g.edges[:, 0]] - z[g.edges[:, 1]]) ** 2, axis=1)
    sigma = np.median(np.sqrt(d2))
    assert g.bandwidth == pytest.approx(sigma)
    assert np.allclose(g.weights, np.exp(-d2 / (2 * sigma ** 2)))
    assert (g.weights > 0).all() and (g.weights <= 1).all()

    fixed = build_knn_laplacian(z, ManifoldConfig(k=2, mode="rbf", bandwidth=0.5))
    assert fixed.bandwidth == 0.5
    assert np.allclose(fixed.weights, np.exp(-d2 / (2 * 0.25)))
    # same edge set either way
    assert np.array_equal(fixed.edges, g.edges)


def test_binary_mode_has_unit_weights_no_bandwidth():
    rng = np.random.default_rng(9)
    g = build_knn_laplacian(rng.standard_normal((10, 2)), ManifoldConfig(k=2))
    assert g.bandwidth is None and set(g.weights) == {1.0}


def test_k_must_be_smaller_than_m():
    with pytest.raises(ValueError):
        build_knn_laplacian(np.zeros((3, 2)), ManifoldConfig(k=3))
    with pytest.raises(ValueError):
        ManifoldConfig(k=0)
    with pytest.raises(ValueError):
        ManifoldConfig(mode="gaussian")
    with pytest.raises(ValueError):
        ManifoldConfig(subset="train")


# ---------------------------------------------------------------------------
# label Laplacian
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_implicit_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 50))
    c = int(rng.integers(1, 6))
    labels = rng.integers(0, c, size=m)
    op = LabelLaplacianOp(labels, c)
    # independent dense oracle assembled inline
    same = (labels[:, None] == labels[None, :]).astype(float)
    dense = np.diag(same.sum(axis=1)) - same
    for _ in range(5):
        v = rng.standard_normal(m)
        assert np.abs(op.apply(v) - dense @ v).max() <= 1e-12


def test_dirichlet_energy_identity():
    rng = np.random.default_rng(42)
    labels = rng.integers(0, 3, size=25)
    v = rng.standard_normal(25)
    op = LabelLaplacianOp(labels, 3)
    energy = float(v @ op.apply(v))
    brute = sum((v[i] - v[j]) ** 2
                for i in range(25) for j in range(i + 1, 25)
                if labels[i] == labels[j])
    assert energy == pytest.approx(brute, rel=1e-10)


def test_constant_vector_in_kernel():
    labels = np.array([0, 1, 0, 2, 1, 0])
    op = LabelLaplacianOp(labels, 3)
    assert not op.apply(np.ones(6)).any()          # exactly zero


def test_production_dense_builder_agrees():
    labels = np.array([0, 1, 1, 0, 2])
    op = LabelLaplacianOp(labels, 3)
    dense = dense_label_laplacian(labels)
    v = np.linspace(-1, 1, 5)
    assert np.allclose(op.apply(v), dense @ v, atol=1e-13)


# ---------------------------------------------------------------------------
# subset selection
# ---------------------------------------------------------------------------

def test_select_subset_modes():
    b = generate_sbm(SbmConfig(n=50, c=2, p_in=0.3, p_out=0.05, seed=1))
    assert np.array_equal(select_subset(b, ManifoldConfig(subset="all")),
                          np.arange(50))
    val = select_subset(b, ManifoldConfig(subset="val"))
    assert np.array_equal(val, np.flatnonzero(b.val_mask))
    test = select_subset(b, ManifoldConfig(subset="test"))
    assert np.array_equal(test, np.flatnonzero(b.test_mask))

    cfg = ManifoldConfig(subset="sample", sample_size=10, sample_seed=3)
    s1, s2 = select_subset(b, cfg), select_subset(b, cfg)
    assert np.array_equal(s1, s2) and s1.size == 10
    assert np.all(np.diff(s1) > 0)                 # sorted, no repeats
    s3 = select_subset(b, ManifoldConfig(subset="sample", sample_size=10,
                                         sample_seed=4))
    assert not np.array_equal(s1, s3)
    big = select_subset(b, ManifoldConfig(subset="sample", sample_size=500))
    assert big.size == 50                          # capped at n
