"""Spectral alignment metric between diffused features and labels.

The score of a feature matrix Z against labels y is the largest generalized
eigenvalue of the pencil (L_Y, L_Z + eps I): L_Y is the label Laplacian, L_Z
the k-NN Laplacian on the rows of Z, and eps a relative ridge making the
denominator positive definite. Small lambda_max means no direction exists
that labels separate but the feature geometry fails to separate - the
operator whose diffusion minimizes it is the preferred shift operator.

Problems at or below the dense cap are solved by Cholesky whitening + a dense
symmetric eigendecomposition; larger ones by power iteration with conjugate
gradient inner solves, touching only matrix-free operator applications.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .bundle import GraphBundle
from .gso import GsoLibrary, diffuse
from .manifold import (LabelLaplacianOp, ManifoldConfig, build_knn_laplacian,
                       dense_label_laplacian, select_subset)
from .sparselin import (LinearOperator, ShiftedOperator, csr_add, csr_from_coo,
                        dense_generalized_eig_max, est_spectral_norm,
                        power_iteration_pencil)

INVERSE_GUARD = 1e-15


@dataclass(frozen=True)
class MsdConfig:
    manifold: ManifoldConfig = field(default_factory=ManifoldConfig)
    epsilon_rel: float = 1e-3
    solver: str = "dense-auto"      # "dense-auto" | "iterative"
    dense_cap: int = 2000
    tol: float = 1e-6               # relative pencil residual, iterative path
    max_iter: int = 1000
    seed: int = 0
    cg_tol: float = 1e-10

    def __post_init__(self):
        if self.solver not in ("dense-auto", "iterative"):
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass
class MsdReport:
    gso: str
    lambda_max: float
    inverse_msd: float | None       # None when lambda is numerically zero
    degenerate: bool
    alignment_gain: float
    complexity_term: float
    m: int
    epsilon: float
    solver: str                     # "dense" | "iterative"
    iters: int
    converged: bool
    elapsed_ms: float

    def to_dict(self) -> dict:
        return {
            "gso": self.gso,
            "lambda_max": self.lambda_max,
            "inverse_msd": self.inverse_msd,
            "degenerate": self.degenerate,
            "alignment_gain": self.alignment_gain,
            "complexity_term": self.complexity_term,
            "m": self.m,
            "epsilon": self.epsilon,
            "solver": self.solver,
            "iters": self.iters,
            "converged": self.converged,
            "elapsed_ms": self.elapsed_ms,
        }


def complexity_term(lambda_max: float, n_samples: int) -> float:
    """Alignment contribution to the generalization bound: 2 sqrt(lambda)/sqrt(N)."""
    if lambda_max < 0 or n_samples <= 0:
        raise ValueError("need lambda_max >= 0 and n_samples >= 1")
    return 2.0 * math.sqrt(lambda_max) / math.sqrt(n_samples)


def minmax_normalize(values) -> np.ndarray:
    """Map to [0, 1]; a constant series maps to all 0.5."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return values.copy()
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.full(values.shape, 0.5)
    return (values - lo) / (hi - lo)


def spearman(x, y) -> float | None:
    """Spearman rank correlation; None when undefined (constant input)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", stats.ConstantInputWarning)
        rho = stats.spearmanr(x, y).statistic
    return None if np.isnan(rho) else float(rho)


def _materialize(op: LinearOperator) -> np.ndarray:
    eye = np.eye(op.n)
    return np.column_stack([op.apply(eye[:, j]) for j in range(op.n)])


def compute_msd(z: np.ndarray, labels: np.ndarray | None, cfg: MsdConfig,
                gso_name: str = "identity",
                label_op: LinearOperator | None = None) -> MsdReport:
    """Score one feature matrix against labels.

    Rows of z are the evaluation subset; pass label_op to substitute an
    arbitrary numerator operator (testing hook), otherwise labels are
    required.
    """
    t0 = time.perf_counter()
    z = np.asarray(z, dtype=np.float64)
    m = z.shape[0]
    if label_op is None:
        if labels is None:
            raise ValueError("need labels or an explicit label_op")
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size != m:
            raise ValueError(f"{labels.size} labels for {m} feature rows")
        label_op = LabelLaplacianOp(labels)

    knn = build_knn_laplacian(z, cfg.manifold)
    trace = knn.trace()
    epsilon = cfg.epsilon_rel * trace / m if trace > 0 else cfg.epsilon_rel

    if cfg.solver == "dense-auto" and m <= cfg.dense_cap:
        if isinstance(label_op, LabelLaplacianOp):
            ay = dense_label_laplacian(label_op.labels)
        else:
            ay = _materialize(label_op)
        az = knn.laplacian.to_dense()
        az[np.diag_indices(m)] += epsilon
        res = dense_generalized_eig_max(ay, az)
        solver_used = "dense"
    else:
        az_op = ShiftedOperator(knn.laplacian, epsilon)
        res = power_iteration_pencil(label_op, az_op, tol=cfg.tol,
                                     max_iter=cfg.max_iter, seed=cfg.seed,
                                     cg_tol=cfg.cg_tol,
                                     jacobi_diag=az_op.diagonal())
        solver_used = "iterative"

    lam = max(res.lambda_max, 0.0)       # pencil of PSD over SPD
    degenerate = lam < INVERSE_GUARD
    return MsdReport(
        gso=gso_name,
        lambda_max=lam,
        inverse_msd=None if degenerate else 1.0 / lam,
        degenerate=degenerate,
        alignment_gain=0.0,
        complexity_term=complexity_term(lam, m),
        m=m,
        epsilon=epsilon,
        solver=solver_used,
        iters=res.iters,
        converged=res.converged,
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
    )


# ---------------------------------------------------------------------------
# bundle-level scoring
# ---------------------------------------------------------------------------

def msd_on_bundle(b: GraphBundle, kind: str, cfg: MsdConfig,
                  lib: GsoLibrary | None = None,
                  z_override: np.ndarray | None = None) -> MsdReport:
    """Diffuse the full feature matrix by one operator, score on the subset.

    z_override substitutes evolved features for b.x (layer-wise selection);
    kind "identity" scores the undiffused features.
    """
    lib = lib or GsoLibrary(b)
    z = b.x if z_override is None else np.asarray(z_override, dtype=np.float64)
    if z.shape[0] != b.n:
        raise ValueError("feature override must cover every node")
    idx = select_subset(b, cfg.manifold)
    sz = diffuse(lib.get(kind), z)
    return compute_msd(sz[idx], b.y[idx], cfg, gso_name=kind)


def alignment_gain(b: GraphBundle, kind: str, cfg: MsdConfig,
                   lib: GsoLibrary | None = None,
                   z_override: np.ndarray | None = None) -> MsdReport:
    """Score one operator and fill in its gain over the identity baseline."""
    lib = lib or GsoLibrary(b)
    report = msd_on_bundle(b, kind, cfg, lib=lib, z_override=z_override)
    if kind != "identity":
        base = msd_on_bundle(b, "identity", cfg, lib=lib, z_override=z_override)
        report.alignment_gain = report.lambda_max - base.lambda_max
    return report


def rank_gsos(b: GraphBundle, kinds, cfg: MsdConfig,
              lib: GsoLibrary | None = None,
              z_override: np.ndarray | None = None) -> list[MsdReport]:
    """Score every candidate, best (smallest lambda_max) first.

    Ties break on the kind name so the ordering is total and reproducible.
    """
    lib = lib or GsoLibrary(b)
    base = msd_on_bundle(b, "identity", cfg, lib=lib, z_override=z_override)
    reports = []
    for kind in kinds:
        rep = msd_on_bundle(b, kind, cfg, lib=lib, z_override=z_override)
        rep.alignment_gain = rep.lambda_max - base.lambda_max
        reports.append(rep)
    reports.sort(key=lambda r: (r.lambda_max, r.gso))
    return reports


# ---------------------------------------------------------------------------
# perturbation stability
# ---------------------------------------------------------------------------

@dataclass
class StabilityReport:
    gso: str
    base_lambda: float
    deltas: list[float]
    mean_abs_change: list[float]
    std_abs_change: list[float]
    trials: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "gso": self.gso,
            "base_lambda": self.base_lambda,
            "rows": [
                {"delta": d, "mean_abs_change": m, "std_abs_change": s}
                for d, m, s in zip(self.deltas, self.mean_abs_change,
                                   self.std_abs_change)
            ],
            "trials": self.trials,
            "seed": self.seed,
        }


def _sample_non_edges(rng: np.random.Generator, n: int, edge_keys: np.ndarray,
                      count: int) -> tuple[np.ndarray, np.ndarray]:
    """count distinct non-edges (u < v) drawn uniformly by rejection."""
    total_pairs = n * (n - 1) // 2
    count = min(count, total_pairs - edge_keys.size)
    taken = set(edge_keys.tolist())
    out_u, out_v = [], []
    while len(out_u) < count:
        need = count - len(out_u)
        u = rng.integers(0, n, size=2 * need + 8)
        v = rng.integers(0, n, size=2 * need + 8)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        for a, b_ in zip(lo, hi):
            if a == b_:
                continue
            key = int(a) * n + int(b_)
            if key in taken:
                continue
            taken.add(key)
            out_u.append(int(a))
            out_v.append(int(b_))
            if len(out_u) == count:
                break
    return np.array(out_u, dtype=np.int64), np.array(out_v, dtype=np.int64)


def stability_experiment(b: GraphBundle, kind: str, deltas, trials: int,
                         cfg: MsdConfig, seed: int = 0,
                         lib: GsoLibrary | None = None) -> StabilityReport:
    """Mean |score change| under random symmetric edge-weight perturbations.

    Each trial draws Gaussian weights on the existing edges plus an equal
    number of uniformly random non-edges, scales the symmetric perturbation
    to spectral norm ~ delta (power-iteration estimate), adds it to the
    operator, and rescores. Requires the rbf manifold: the binary k-NN graph
    is discontinuous in the inputs, so only the weighted variant admits a
    meaningful perturbation response. delta = 0 leaves the operator object
    untouched and therefore reports exactly zero.
    """
    if cfg.manifold.mode != "rbf":
        raise ValueError("stability experiments require manifold mode 'rbf'")
    if trials < 1:
        raise ValueError("need at least one trial")
    lib = lib or GsoLibrary(b)
    s = lib.get(kind)
    if s is None:
        raise ValueError("stability experiment needs a concrete GSO kind")
    idx = select_subset(b, cfg.manifold)
    y_sub = b.y[idx]
    base = compute_msd(s.matmat(b.x)[idx], y_sub, cfg, gso_name=kind)

    edge_u, edge_v = b.edges[:, 0], b.edges[:, 1]
    edge_keys = edge_u * b.n + edge_v
    means, stds = [], []
    for di, delta in enumerate(deltas):
        diffs = np.empty(trials)
        for t in range(trials):
            if delta == 0.0:
                s_pert = s
            else:
                rng = np.random.default_rng(
                    np.random.SeedSequence([seed, di, t]))
                nu, nv = _sample_non_edges(rng, b.n, edge_keys, edge_u.size)
                u = np.r_[edge_u, nu]
                v = np.r_[edge_v, nv]
                g = rng.standard_normal(u.size)
                pert = csr_from_coo(np.r_[u, v], np.r_[v, u], np.r_[g, g],
                                    (b.n, b.n))
                norm = est_spectral_norm(pert, iters=100,
                                         seed=int(rng.integers(2 ** 31)))
                s_pert = csr_add(s, pert, beta=delta / norm) if norm > 0 else s
            rep = compute_msd(s_pert.matmat(b.x)[idx], y_sub, cfg,
                              gso_name=kind)
            diffs[t] = abs(rep.lambda_max - base.lambda_max)
        means.append(float(diffs.mean()))
        stds.append(float(diffs.std()))
    return StabilityReport(kind, base.lambda_max, [float(d) for d in deltas],
                           means, stds, trials, seed)
