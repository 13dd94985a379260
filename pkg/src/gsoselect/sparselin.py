"""Self-contained sparse linear algebra kernel.

Everything the alignment metric needs: a CSR container, sparse mat-vec /
mat-mat products, Jacobi-preconditioned conjugate gradients, a dense
generalized eigensolver used as the small-problem oracle, and power iteration
on the pencil (Ay, Az) for the large-problem path. Dense LAPACK routines are
used only inside the dense oracle; the iterative path touches nothing but the
operators' apply methods.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular


class NumericalError(RuntimeError):
    """A solver could not complete (breakdown, indefiniteness, bad residual)."""


class NotSpdError(NumericalError):
    """Matrix required to be symmetric positive definite is not."""


# ---------------------------------------------------------------------------
# CSR container
# ---------------------------------------------------------------------------

@dataclass
class SparseMatrix:
    """CSR matrix. Column indices are strictly increasing within each row."""

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray   # int64, length n_rows + 1
    col_idx: np.ndarray   # int64, length nnz
    values: np.ndarray    # float64, length nnz
    _row_of_entry: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.row_ptr = np.asarray(self.row_ptr, dtype=np.int64)
        self.col_idx = np.asarray(self.col_idx, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.row_ptr.shape != (self.n_rows + 1,):
            raise ValueError("row_ptr length must be n_rows + 1")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != self.col_idx.size:
            raise ValueError("row_ptr endpoints inconsistent with nnz")
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if self.col_idx.size != self.values.size:
            raise ValueError("col_idx and values length mismatch")
        if self.col_idx.size:
            if self.col_idx.min() < 0 or self.col_idx.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing inside each row <=> sorted and no duplicates
            bad = np.diff(self.col_idx) <= 0
            cut = self.row_ptr[1:-1] - 1          # positions spanning two rows
            cut = cut[(cut >= 0) & (cut < bad.size)]
            bad[cut] = False
            if bad.any():
                raise ValueError("column indices must strictly increase per row")

    # -- basic properties ---------------------------------------------------

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def n(self) -> int:
        if self.n_rows != self.n_cols:
            raise ValueError("operator view requires a square matrix")
        return self.n_rows

    def _rows(self) -> np.ndarray:
        if self._row_of_entry is None:
            self._row_of_entry = np.repeat(
                np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_ptr))
        return self._row_of_entry

    # -- products -------------------------------------------------------------

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        return np.bincount(self._rows(), weights=self.values * v[self.col_idx],
                           minlength=self.n_rows)

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        """Transpose product A^T v without materializing the transpose."""
        v = np.asarray(v, dtype=np.float64)
        return np.bincount(self.col_idx, weights=self.values * v[self._rows()],
                           minlength=self.n_cols)

    def matmat(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=np.float64)
        rows = self._rows()
        gathered = h[self.col_idx]
        out = np.empty((self.n_rows, h.shape[1]))
        for j in range(h.shape[1]):
            out[:, j] = np.bincount(rows, weights=self.values * gathered[:, j],
                                    minlength=self.n_rows)
        return out

    def rmatmat(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=np.float64)
        rows = self._rows()
        gathered = g[rows]
        out = np.empty((self.n_cols, g.shape[1]))
        for j in range(g.shape[1]):
            out[:, j] = np.bincount(self.col_idx,
                                    weights=self.values * gathered[:, j],
                                    minlength=self.n_cols)
        return out

    apply = matvec

    # -- conversions ----------------------------------------------------------

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self._rows(), self.col_idx] = self.values
        return out

    def diagonal(self) -> np.ndarray:
        n = min(self.n_rows, self.n_cols)
        on_diag = self._rows() == self.col_idx
        return np.bincount(self._rows()[on_diag],
                           weights=self.values[on_diag], minlength=n)[:n]

    def scaled(self, alpha: float) -> "SparseMatrix":
        return SparseMatrix(self.n_rows, self.n_cols, self.row_ptr.copy(),
                            self.col_idx.copy(), alpha * self.values)


def csr_from_coo(rows, cols, vals, shape: tuple[int, int],
                 sum_duplicates: bool = True) -> SparseMatrix:
    n_rows, n_cols = shape
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows
                      or cols.min() < 0 or cols.max() >= n_cols):
        raise ValueError("COO index out of range")
    key = rows * n_cols + cols
    order = np.argsort(key, kind="stable")
    rows, cols, vals, key = rows[order], cols[order], vals[order], key[order]
    if rows.size:
        first = np.ones(rows.size, dtype=bool)
        first[1:] = key[1:] != key[:-1]
        if not first.all():
            if not sum_duplicates:
                raise ValueError("duplicate COO entries")
            group = np.cumsum(first) - 1
            vals = np.bincount(group, weights=vals)
            rows, cols = rows[first], cols[first]
    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=row_ptr[1:])
    return SparseMatrix(n_rows, n_cols, row_ptr, cols, vals)


def csr_from_dense(a: np.ndarray, tol: float = 0.0) -> SparseMatrix:
    a = np.asarray(a, dtype=np.float64)
    rows, cols = np.nonzero(np.abs(a) > tol)
    return csr_from_coo(rows, cols, a[rows, cols], a.shape)


def csr_add(a: SparseMatrix, b: SparseMatrix, beta: float = 1.0) -> SparseMatrix:
    """a + beta * b over the union pattern."""
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    rows = np.concatenate([a._rows(), b._rows()])
    cols = np.concatenate([a.col_idx, b.col_idx])
    vals = np.concatenate([a.values, beta * b.values])
    return csr_from_coo(rows, cols, vals, a.shape)


def identity_csr(n: int, scale: float = 1.0) -> SparseMatrix:
    idx = np.arange(n, dtype=np.int64)
    return SparseMatrix(n, n, np.arange(n + 1, dtype=np.int64), idx,
                        np.full(n, float(scale)))


# ---------------------------------------------------------------------------
# matrix-free operators
# ---------------------------------------------------------------------------

class LinearOperator:
    """Minimal protocol: square action v -> A v on float64 vectors."""

    n: int

    def apply(self, v: np.ndarray) -> np.ndarray:   # pragma: no cover
        raise NotImplementedError


class DenseOperator(LinearOperator):
    def __init__(self, a: np.ndarray):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("DenseOperator needs a square 2-D array")
        self.a = a
        self.n = a.shape[0]

    def apply(self, v):
        return self.a @ v


class ZeroOperator(LinearOperator):
    def __init__(self, n: int):
        self.n = n

    def apply(self, v):
        return np.zeros(self.n)


class ShiftedOperator(LinearOperator):
    """base + shift * I, with a diagonal view for Jacobi preconditioning."""

    def __init__(self, base, shift: float, diag: np.ndarray | None = None):
        self.base = base
        self.shift = float(shift)
        self.n = base.n
        self._diag = diag

    def apply(self, v):
        return self.base.apply(v) + self.shift * v

    def diagonal(self) -> np.ndarray | None:
        base_diag = (self._diag if self._diag is not None
                     else self.base.diagonal() if hasattr(self.base, "diagonal")
                     else None)
        return None if base_diag is None else base_diag + self.shift


# ---------------------------------------------------------------------------
# conjugate gradients
# ---------------------------------------------------------------------------

@dataclass
class CgResult:
    x: np.ndarray
    iters: int
    converged: bool
    rel_residual: float


def conjugate_gradient(op: LinearOperator, b: np.ndarray, *,
                       tol: float = 1e-10, max_iter: int | None = None,
                       jacobi_diag: np.ndarray | None = None) -> CgResult:
    """Solve op x = b for SPD op; stops when ||r|| <= tol * ||b||.

    jacobi_diag, if given, enables diagonal preconditioning (entries must be
    positive). Raises NotSpdError on an indefinite search direction.
    """
    b = np.asarray(b, dtype=np.float64)
    n = b.size
    if max_iter is None:
        max_iter = 10 * n
    norm_b = np.linalg.norm(b)
    x = np.zeros(n)
    if norm_b == 0.0:
        return CgResult(x, 0, True, 0.0)
    if jacobi_diag is not None and np.any(jacobi_diag <= 0):
        raise NotSpdError("Jacobi preconditioner has non-positive diagonal")

    r = b.copy()
    z = r / jacobi_diag if jacobi_diag is not None else r
    p = z.copy()
    rz = float(r @ z)
    for k in range(1, max_iter + 1):
        ap = op.apply(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            raise NotSpdError(
                f"indefinite direction at CG iteration {k} (p'Ap = {pap:.3e})")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        rn = np.linalg.norm(r)
        if rn <= tol * norm_b:
            return CgResult(x, k, True, rn / norm_b)
        z = r / jacobi_diag if jacobi_diag is not None else r
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    return CgResult(x, max_iter, False, float(np.linalg.norm(r) / norm_b))


# ---------------------------------------------------------------------------
# pencil solvers: largest lambda with Ay v = lambda Az v
# ---------------------------------------------------------------------------

@dataclass
class PencilResult:
    lambda_max: float
    vector: np.ndarray
    iters: int
    converged: bool
    cg_iters: int = 0


def dense_generalized_eig_max(ay: np.ndarray, az: np.ndarray,
                              residual_bound: float = 1e-8) -> PencilResult:
    """Largest generalized eigenpair via Cholesky whitening.

    Factors Az = L L^T, solves the ordinary symmetric problem for
    L^{-1} Ay L^{-T}, and maps the eigenvector back. Postcondition enforced:
    ||Ay v - lambda Az v|| <= residual_bound * ||Ay||_F for the unit v.
    """
    ay = np.asarray(ay, dtype=np.float64)
    az = np.asarray(az, dtype=np.float64)
    try:
        chol = np.linalg.cholesky(az)
    except np.linalg.LinAlgError as e:
        raise NotSpdError(f"Az is not positive definite: {e}") from e
    c = solve_triangular(chol, ay, lower=True)
    c = solve_triangular(chol, c.T, lower=True).T
    c = 0.5 * (c + c.T)
    eigvals, eigvecs = np.linalg.eigh(c)
    lam = float(eigvals[-1])
    v = solve_triangular(chol.T, eigvecs[:, -1], lower=False)
    v /= np.linalg.norm(v)
    residual = np.linalg.norm(ay @ v - lam * (az @ v))
    bound = residual_bound * np.linalg.norm(ay, "fro")
    if residual > max(bound, 1e-300):
        raise NumericalError(
            f"dense pencil residual {residual:.3e} exceeds bound {bound:.3e}")
    return PencilResult(lam, v, 0, True)


def power_iteration_pencil(ay: LinearOperator, az: LinearOperator, *,
                           tol: float = 1e-6, max_iter: int = 1000,
                           seed: int = 0, cg_tol: float = 1e-10,
                           cg_max_iter: int | None = None,
                           jacobi_diag: np.ndarray | None = None) -> PencilResult:
    """Power iteration on Az^{-1} Ay with CG inner solves.

    Iterates v <- normalize(Az^{-1} Ay v); the eigenvalue estimate is the
    generalized Rayleigh quotient (v' Ay v) / (v' Az v). Stops when the
    pencil residual ||Ay v - lambda Az v|| drops to tol * ||Ay v||, or at
    max_iter (converged flag False). Residual-based stopping certifies the
    eigenpair itself; a relative-change rule can report convergence while
    the estimate is still drifting geometrically. A numerically zero Ay v
    short-circuits to lambda = 0.
    """
    n = az.n
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    ayv = ay.apply(v)
    lam = 0.0
    cg_total = 0
    for it in range(1, max_iter + 1):
        norm_ayv = np.linalg.norm(ayv)
        if norm_ayv == 0.0:
            return PencilResult(0.0, v, it, True, cg_total)
        res = conjugate_gradient(az, ayv, tol=cg_tol, max_iter=cg_max_iter,
                                 jacobi_diag=jacobi_diag)
        cg_total += res.iters
        norm_x = np.linalg.norm(res.x)
        if norm_x == 0.0:
            return PencilResult(0.0, v, it, True, cg_total)
        v = res.x / norm_x
        ayv = ay.apply(v)
        azv = az.apply(v)
        lam = float(v @ ayv) / float(v @ azv)
        residual = np.linalg.norm(ayv - lam * azv)
        if residual <= tol * max(np.linalg.norm(ayv), 1e-300):
            return PencilResult(lam, v, it, True, cg_total)
    return PencilResult(lam, v, max_iter, False, cg_total)


def est_spectral_norm(op: LinearOperator, *, iters: int = 100,
                      seed: int = 0) -> float:
    """Power-iteration estimate of ||op||_2 for a symmetric operator."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.n)
    norm_v = np.linalg.norm(v)
    if norm_v == 0.0 or op.n == 0:
        return 0.0
    v /= norm_v
    est = 0.0
    for _ in range(iters):
        w = op.apply(v)
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        v = w / est
    return est
