"""Laplacian-regularized interpolation with a hard sampling constraint.

The observed entries are copied into the output verbatim; the free entries
solve the partitioned linear system (complement block times unknowns equals
minus the coupling block times the observations) by conjugate gradients.
A dense closed-form filter is provided as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from .sparse import CgParams, CgResult, CsrMatrix, cg_parametrized, cg_solve


@dataclass(frozen=True)
class SamplingSet:
    """K observed node indices out of n_total, strictly increasing."""

    n_total: int
    indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        idx = self.indices
        if idx.ndim != 1 or idx.shape[0] < 1:
            raise ValueError("sampling set must contain at least one index")
        if idx.shape[0] > self.n_total:
            raise ValueError("more samples than nodes")
        if idx[0] < 0 or idx[-1] >= self.n_total:
            raise ValueError("sample index out of range")
        if idx.shape[0] > 1 and np.any(np.diff(idx) <= 0):
            raise ValueError("sample indices must be strictly increasing")

    @property
    def k(self) -> int:
        return int(self.indices.shape[0])

    def complement(self) -> np.ndarray:
        mask = np.ones(self.n_total, dtype=bool)
        mask[self.indices] = False
        return np.nonzero(mask)[0]

    def mask(self) -> np.ndarray:
        """Diagonal of H'H: one at sampled nodes, zero elsewhere."""
        m = np.zeros(self.n_total)
        m[self.indices] = 1.0
        return m


def h_apply(s: SamplingSet, x) -> np.ndarray:
    """Restrict a full-length vector to the sampled entries (H x)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (s.n_total,):
        raise ValueError(f"expected length {s.n_total}, got {x.shape}")
    return x[s.indices]


def h_transpose(s: SamplingSet, y) -> np.ndarray:
    """Upsample K observations to the full grid with zeros elsewhere (H' y)."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (s.k,):
        raise ValueError(f"expected length {s.k}, got {y.shape}")
    out = np.zeros(s.n_total)
    out[s.indices] = y
    return out


@dataclass(frozen=True)
class GlrProblem:
    """Laplacian, sampling set and observations for one interpolation."""

    lap: CsrMatrix
    sampling: SamplingSet
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.float64))
        if self.lap.n_rows != self.lap.n_cols:
            raise ValueError("Laplacian must be square")
        if self.sampling.n_total != self.lap.n_rows:
            raise ValueError("sampling set size does not match the Laplacian")
        if self.y.shape != (self.sampling.k,):
            raise ValueError("observation length does not match the sampling set")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("observations must be finite")


def partition_laplacian(lap: CsrMatrix, s: SamplingSet):
    """Split L into the complement block and the complement-to-sample block.

    Returns ``(l_cc, l_cs)`` where ``l_cc`` is (N-K)x(N-K) over the free
    nodes and ``l_cs`` couples free rows to sampled columns.
    """
    if s.n_total != lap.n_rows:
        raise ValueError("sampling set does not match the matrix")
    comp = s.complement()
    if comp.size == 0:
        raise ValueError("empty complement: every node is sampled")
    sp = lap.to_scipy()
    l_cc = CsrMatrix.from_scipy(sp[comp][:, comp])
    l_cs = CsrMatrix.from_scipy(sp[comp][:, s.indices])
    return l_cc, l_cs


def _connected(lap: CsrMatrix) -> bool:
    n_comp = scipy.sparse.csgraph.connected_components(lap.to_scipy(), directed=False)[0]
    return n_comp == 1


def glr_interpolate(p: GlrProblem, cg: CgParams | None = None, x0=None) -> np.ndarray:
    """Interpolate by minimizing the Laplacian quadratic form.

    Sampled entries are copied from the observations; the free entries
    solve the complement system via :func:`cg_solve`, or via the
    fixed-coefficient recursion when ``cg.schedule`` is set.  ``x0``
    optionally warm-starts the free entries (ignored at sampled nodes).

    Raises ``ValueError`` on a disconnected graph: the complement block is
    only guaranteed positive definite on connected graphs.
    """
    if cg is None:
        cg = CgParams()
    s, y = p.sampling, p.y
    if not _connected(p.lap):
        raise ValueError("graph is disconnected: interpolation is not well-posed")
    x = np.zeros(s.n_total)
    x[s.indices] = y
    if s.k == s.n_total:
        return x
    comp = s.complement()
    l_cc, l_cs = partition_laplacian(p.lap, s)
    b = -(l_cs @ y)
    start = np.zeros(comp.shape[0]) if x0 is None else np.asarray(x0, dtype=np.float64)[comp]
    if cg.schedule is not None:
        x[comp] = cg_parametrized(l_cc, b, start, cg.schedule, cg.max_iter)
    else:
        res: CgResult = cg_solve(l_cc, b, x0=start, params=cg)
        if res.breakdown and res.residual > 1e-6 * (1.0 + float(np.linalg.norm(b))):
            raise ValueError("CG breakdown: complement block is not positive definite")
        x[comp] = res.x
    return x


def glr_dense_oracle(l_pd, s: SamplingSet, y) -> np.ndarray:
    """Closed-form interpolation filter for a positive definite matrix.

    Computes ``x = L^{-1} H' (H L^{-1} H')^{-1} y`` densely.  Only suitable
    for small systems; pass a Laplacian made PD, e.g. by adding small
    self-loops to the diagonal.
    """
    l_pd = np.asarray(l_pd, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = l_pd.shape[0]
    if l_pd.shape != (n, n) or s.n_total != n or y.shape != (s.k,):
        raise ValueError("inconsistent oracle inputs")
    ht = np.zeros((n, s.k))
    ht[s.indices, np.arange(s.k)] = 1.0
    linv_ht = np.linalg.solve(l_pd, ht)
    gram = linv_ht[s.indices]
    mu = np.linalg.solve(gram, y)
    return linv_ht @ mu
