"""Compressed sparse row matrices and conjugate-gradient solvers.

The CSR container is deliberately small: deterministic assembly from
coordinate triplets, validated structure, and matrix-vector products.
Dense helpers (`dense_solve`, `min_eigenvalue_sym`) exist as reference
oracles for the iterative solvers and are only meant for small systems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse


class CgBreakdownError(ValueError):
    """Raised when CG meets non-finite arithmetic (input likely not SPD)."""


def _as_float_vector(x, n, name):
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != n:
        raise ValueError(f"{name} must be a vector of length {n}, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class CsrMatrix:
    """Validated CSR matrix with float64 values.

    Attributes
    ----------
    n_rows, n_cols : int
        Matrix dimensions.
    row_ptr : ndarray of int
        Length ``n_rows + 1``, non-decreasing, ``row_ptr[0] == 0`` and
        ``row_ptr[-1] == nnz``.
    col_idx : ndarray of int
        Column index per stored entry, strictly increasing within a row.
    values : ndarray of float64
        Stored entry values; explicit zeros are kept.
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", np.asarray(self.row_ptr, dtype=np.int64))
        object.__setattr__(self, "col_idx", np.asarray(self.col_idx, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        rp, ci, vals = self.row_ptr, self.col_idx, self.values
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if rp.ndim != 1 or rp.shape[0] != self.n_rows + 1:
            raise ValueError("row_ptr must have length n_rows + 1")
        if rp[0] != 0 or rp[-1] != ci.shape[0] or ci.shape[0] != vals.shape[0]:
            raise ValueError("row_ptr endpoints must match the number of stored entries")
        if np.any(np.diff(rp) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if ci.shape[0] > 0 and (ci.min() < 0 or ci.max() >= self.n_cols):
            raise ValueError("column index out of range")
        if ci.shape[0] > 1:
            # adjacent entries belong to the same row unless a row boundary
            # sits between them
            d = np.diff(ci)
            same_row = np.ones(d.shape[0], dtype=bool)
            starts = rp[1:-1]
            starts = starts[(starts > 0) & (starts < ci.shape[0])]
            same_row[starts - 1] = False
            if np.any(d[same_row] <= 0):
                raise ValueError("col_idx must be strictly increasing within each row")
        if not np.all(np.isfinite(vals)):
            raise ValueError("matrix values must be finite")

    @cached_property
    def _sp(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.csr_matrix(
            (self.values, self.col_idx, self.row_ptr), shape=(self.n_rows, self.n_cols)
        )

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def from_scipy(cls, a) -> "CsrMatrix":
        a = scipy.sparse.csr_matrix(a)
        a.sort_indices()
        return cls(a.shape[0], a.shape[1], a.indptr, a.indices, a.data)

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, values) -> "CsrMatrix":
        """Assemble from coordinate triplets; duplicate coordinates are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("rows, cols and values must have identical length")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("column index out of range")
        a = scipy.sparse.coo_matrix((values, (rows, cols)), shape=(n_rows, n_cols))
        a = a.tocsr()
        a.sum_duplicates()
        a.sort_indices()
        return cls(n_rows, n_cols, a.indptr, a.indices, a.data)

    @classmethod
    def from_dense(cls, a) -> "CsrMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        return cls.from_scipy(scipy.sparse.csr_matrix(a))

    @classmethod
    def identity(cls, n) -> "CsrMatrix":
        return cls.from_scipy(scipy.sparse.identity(n, format="csr"))

    def to_dense(self) -> np.ndarray:
        return self._sp.toarray()

    def to_scipy(self) -> scipy.sparse.csr_matrix:
        """Shared read-only view in scipy CSR form."""
        return self._sp

    def transpose(self) -> "CsrMatrix":
        return CsrMatrix.from_scipy(self._sp.T.tocsr())

    def matvec(self, x) -> np.ndarray:
        x = _as_float_vector(x, self.n_cols, "x")
        return self._sp @ x

    def __matmul__(self, x):
        return self.matvec(x)


def spmv(a: CsrMatrix, x) -> np.ndarray:
    """Sparse matrix-vector product ``a @ x``."""
    return a.matvec(x)


@dataclass(frozen=True)
class CgParams:
    """Conjugate-gradient settings.

    ``schedule``, when given, switches the solver to the fixed-coefficient
    recursion of :func:`cg_parametrized` with ``max_iter`` steps; ``tol`` is
    then ignored.
    """

    tol: float = 1e-8
    max_iter: int = 100
    schedule: tuple | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if self.schedule is not None:
            sched = tuple((float(a), float(b)) for a, b in self.schedule)
            object.__setattr__(self, "schedule", sched)


@dataclass
class CgResult:
    x: np.ndarray
    n_iter: int
    residual: float
    converged: bool
    breakdown: bool = False
    steps: list = field(default_factory=list)


def cg_solve(a: CsrMatrix, b, x0=None, params: CgParams | None = None) -> CgResult:
    """Solve ``a x = b`` for symmetric positive definite ``a``.

    Standard conjugate gradients with the short recurrence for the residual.
    Convergence is declared on the relative residual
    ``||b - a x|| <= tol * ||b||``; the true residual is recomputed every
    10 iterations and at the end so recurrence drift cannot fake success.

    Parameters
    ----------
    a : CsrMatrix
        Symmetric positive definite system matrix (symmetry is trusted).
    b : array_like
        Right-hand side.
    x0 : array_like, optional
        Initial iterate, defaults to zeros.
    params : CgParams, optional

    Returns
    -------
    CgResult
        Final iterate, iteration count, true residual norm, convergence
        flag, breakdown flag, and the per-iteration ``(alpha, beta)`` steps.
        On breakdown (non-positive curvature from round-off or an indefinite
        matrix) the best iterate seen so far is returned with
        ``breakdown=True``.

    Raises
    ------
    ValueError
        Dimension mismatch between ``a``, ``b`` and ``x0``.
    CgBreakdownError
        Non-finite values encountered during iteration.
    """
    if params is None:
        params = CgParams()
    if a.n_rows != a.n_cols:
        raise ValueError("cg_solve requires a square matrix")
    n = a.n_rows
    b = _as_float_vector(b, n, "b")
    x = np.zeros(n) if x0 is None else _as_float_vector(x0, n, "x0").copy()

    if params.schedule is not None:
        xs = cg_parametrized(a, b, x, params.schedule, params.max_iter)
        res = float(np.linalg.norm(b - a @ xs))
        return CgResult(xs, params.max_iter, res, False, steps=list(params.schedule))

    bnorm = float(np.linalg.norm(b))
    denom = max(bnorm, np.finfo(np.float64).tiny)
    r = b - a @ x
    rnorm = float(np.linalg.norm(r))
    if not (np.isfinite(bnorm) and np.isfinite(rnorm)):
        raise CgBreakdownError("non-finite residual norm in cg_solve")
    best_x, best_res = x.copy(), rnorm
    result = CgResult(x, 0, rnorm, rnorm <= params.tol * denom)
    if result.converged or params.max_iter == 0:
        return result

    p = r.copy()
    rs = float(r @ r)
    for k in range(1, params.max_iter + 1):
        ap = a @ p
        pap = float(p @ ap)
        if not np.isfinite(pap):
            raise CgBreakdownError("non-finite curvature in cg_solve")
        if pap <= 0.0:
            result.x, result.residual = best_x, best_res
            result.n_iter, result.breakdown = k - 1, True
            return result
        alpha = rs / pap
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r @ r)
        if not np.isfinite(rs_new):
            raise CgBreakdownError("non-finite residual in cg_solve")
        beta = rs_new / rs
        result.steps.append((alpha, beta))
        check = k % 10 == 0 or np.sqrt(rs_new) <= params.tol * denom
        if check:
            true_r = float(np.linalg.norm(b - a @ x))
            if true_r < best_res:
                best_x, best_res = x.copy(), true_r
            if true_r <= params.tol * denom:
                result.x, result.n_iter = x, k
                result.residual, result.converged = true_r, True
                return result
        p = r + beta * p
        rs = rs_new

    true_r = float(np.linalg.norm(b - a @ x))
    if true_r < best_res:
        best_x, best_res = x, true_r
    result.x, result.residual = best_x, best_res
    result.n_iter = params.max_iter
    result.converged = best_res <= params.tol * denom
    return result


def cg_parametrized(a: CsrMatrix, b, x0, schedule: Sequence, n_iter: int | None = None) -> np.ndarray:
    """Run the fixed-coefficient gradient/direction recursion.

    Each step ``t`` applies, with coefficients ``(alpha_t, beta_t)``::

        x <- x - alpha_t * v
        g <- g - alpha_t * (a @ v)
        v <- g + beta_t * v

    starting from ``g = v = a @ x0 - b``.  With the exact line-search alpha
    and ratio beta this reproduces :func:`cg_solve` iterates; any other
    coefficient table gives a fixed-depth accelerated descent with
    data-independent behaviour, which is what the block pipeline wants.

    ``schedule`` is a sequence of ``(alpha, beta)`` pairs; if ``n_iter``
    exceeds its length the last pair repeats.
    """
    if a.n_rows != a.n_cols:
        raise ValueError("cg_parametrized requires a square matrix")
    n = a.n_rows
    b = _as_float_vector(b, n, "b")
    x = _as_float_vector(x0, n, "x0").copy()
    steps = [(float(al), float(be)) for al, be in schedule]
    if n_iter is None:
        n_iter = len(steps)
    if n_iter < 0:
        raise ValueError("n_iter must be non-negative")
    if n_iter == 0:
        return x
    if not steps:
        raise ValueError("empty schedule with n_iter > 0")

    g = a @ x - b
    v = g.copy()
    for t in range(n_iter):
        alpha, beta = steps[min(t, len(steps) - 1)]
        x = x - alpha * v
        g = g - alpha * (a @ v)
        v = g + beta * v
        if not np.isfinite(g).all():
            raise CgBreakdownError("non-finite gradient in cg_parametrized")
    return x


def dense_solve(a, b) -> np.ndarray:
    """Solve a small dense system by LU with partial pivoting.

    Reference oracle for the iterative solvers.  Raises
    ``numpy.linalg.LinAlgError`` when a pivot is singular to working
    precision.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("a must be square")
    if b.shape[0] != a.shape[0]:
        raise ValueError("b length must match a")
    if a.shape[0] == 0:
        return np.zeros_like(b)
    lu, piv = scipy.linalg.lu_factor(a)
    pivots = np.abs(np.diag(lu))
    scale = max(np.abs(a).max(), 1.0)
    if pivots.min() <= a.shape[0] * np.finfo(np.float64).eps * scale:
        raise np.linalg.LinAlgError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), b)


def min_eigenvalue_sym(a) -> float:
    """Smallest eigenvalue of a symmetric dense matrix.

    Raises
    ------
    ValueError
        If ``max|a - a.T| > 1e-12``.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("a must be square")
    if a.size and np.abs(a - a.T).max() > 1e-12:
        raise ValueError("matrix is not symmetric")
    if a.shape[0] == 0:
        raise ValueError("empty matrix has no eigenvalues")
    return float(np.linalg.eigvalsh(a)[0])
