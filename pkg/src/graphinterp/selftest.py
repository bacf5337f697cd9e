"""Runtime self-checks: golden matrices, spectral guarantees, solver
cross-validation against dense oracles, and small LP comparisons.

Two effort levels: "fast" keeps instance counts small enough for seconds,
"full" raises them to the review thresholds (hundreds of random graphs).
The checks build their own dense references here rather than importing the
package solvers' internals, so a regression in the sparse path cannot hide
itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .glr import GlrProblem, SamplingSet, glr_dense_oracle, glr_interpolate, partition_laplacian
from .graphs import (
    GraphTopology,
    gtv_laplacian,
    incidence,
    laplacian,
    normalize_rw,
    normalized_laplacian,
)
from .gtv import AdmmParams, admm_init, gtv_interpolate, gtv_objective, update_q, update_x, update_z
from .sparse import CgParams, CsrMatrix, cg_parametrized, cg_solve, min_eigenvalue_sym


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _random_connected(rng, n, extra=2, wmin=0.2, wmax=2.0) -> GraphTopology:
    # spanning tree plus a few chords; weights bounded away from zero
    edges = set()
    order = rng.permutation(n)
    for a, b in zip(order[:-1], order[1:]):
        edges.add((min(a, b), max(a, b)))
    while len(edges) < min(n - 1 + extra, n * (n - 1) // 2):
        a, b = rng.integers(0, n, 2)
        if a != b:
            edges.add((min(a, b), max(a, b)))
    triplets = [(i, j, rng.uniform(wmin, wmax)) for i, j in sorted(edges)]
    return GraphTopology.from_edge_list(n, triplets)


def _random_sampling(rng, n, k=None) -> SamplingSet:
    if k is None:
        k = int(rng.integers(1, n))
    return SamplingSet(n, np.sort(rng.choice(n, size=k, replace=False)))


def check_golden_matrices() -> CheckResult:
    """Three-node reference: normalized incidence rows and its Gram matrix."""
    g = GraphTopology.from_edge_list(3, [(0, 1, 0.5), (0, 2, 0.5), (1, 2, 1.0 / 3.0)])
    cbar = normalize_rw(g).to_dense()
    want_rows = np.array(
        [
            [0.5, -0.5, 0.0],
            [-0.6, 0.6, 0.0],
            [0.0, 0.4, -0.4],
            [0.0, -0.4, 0.4],
            [0.5, 0.0, -0.5],
            [-0.6, 0.0, 0.6],
        ]
    )
    def keyed(a):
        return a[np.lexsort(a.T[::-1])]
    dev_rows = np.abs(keyed(cbar) - keyed(want_rows)).max()
    s = 6.0 / 5.0
    gram = np.array(
        [
            [0.5 + s * s / 2.0, -(1 + s * s) / 4.0, -(1 + s * s) / 4.0],
            [-(1 + s * s) / 4.0, (1 + s * s) / 4.0 + 2 * s * s / 9.0, -2 * s * s / 9.0],
            [-(1 + s * s) / 4.0, -2 * s * s / 9.0, (1 + s * s) / 4.0 + 2 * s * s / 9.0],
        ]
    )
    dev_gram = np.abs(gtv_laplacian(normalize_rw(g)).to_dense() - gram).max()
    dev_ones = np.abs(cbar @ np.ones(3)).sum()
    dev = max(dev_rows, dev_gram, dev_ones)
    return CheckResult("golden-matrices", dev <= 1e-12, f"max deviation {dev:.3e}")


def check_laplacian_spectrum(rng, count) -> CheckResult:
    worst_eig, worst_null = 0.0, 0.0
    for _ in range(count):
        g = _random_connected(rng, int(rng.integers(3, 17)), extra=int(rng.integers(0, 5)))
        dense = laplacian(g).to_dense()
        worst_eig = max(worst_eig, -float(np.linalg.eigvalsh(dense)[0]))
        worst_null = max(worst_null, float(np.abs(dense @ np.ones(g.n_nodes)).max()))
    ok = worst_eig <= 1e-10 and worst_null <= 1e-10
    return CheckResult(
        "laplacian-psd-nullvector", ok,
        f"min-eig floor {worst_eig:.3e}, ones-residual {worst_null:.3e} over {count} graphs",
    )


def check_submatrix_pd(rng, count) -> CheckResult:
    """Unsampled-block positive definiteness, plain and degree-normalized."""
    worst = np.inf
    for i in range(count):
        g = _random_connected(rng, int(rng.integers(3, 17)), extra=int(rng.integers(0, 5)))
        lap = laplacian(g)
        if i % 2:
            lap = normalized_laplacian(lap, g.degrees())
        s = _random_sampling(rng, g.n_nodes)
        if s.k == g.n_nodes:
            continue
        l_cc, _ = partition_laplacian(lap, s)
        worst = min(worst, min_eigenvalue_sym(l_cc.to_dense()))
    return CheckResult(
        "submatrix-pd", worst > 1e-8, f"min eigenvalue {worst:.3e} over {count} graphs"
    )


def check_generalized_pd(rng, count) -> CheckResult:
    worst = np.inf
    for i in range(count):
        g = _random_connected(rng, int(rng.integers(3, 15)), extra=int(rng.integers(0, 4)))
        c = normalize_rw(g) if i % 2 else incidence(g)
        s = _random_sampling(rng, g.n_nodes)
        cd = c.to_dense()
        system = cd.T @ cd + np.diag(s.mask())
        worst = min(worst, min_eigenvalue_sym(system))
    return CheckResult(
        "generalized-system-pd", worst > 1e-8, f"min eigenvalue {worst:.3e} over {count} graphs"
    )


def check_block_system(rng, count) -> CheckResult:
    """Saddle-point matrix [[2L, H'],[H, 0]] stays nonsingular."""
    worst = np.inf
    for _ in range(count):
        n = int(rng.integers(3, 13))
        g = _random_connected(rng, n, extra=int(rng.integers(0, 4)))
        s = _random_sampling(rng, n)
        dense = laplacian(g).to_dense()
        h = np.zeros((s.k, n))
        h[np.arange(s.k), s.indices] = 1.0
        block = np.block([[2.0 * dense, h.T], [h, np.zeros((s.k, s.k))]])
        lu, _ = scipy.linalg.lu_factor(block)
        pivot = float(np.abs(np.diag(lu)).min())
        worst = min(worst, pivot / max(np.abs(block).max(), 1.0))
    return CheckResult(
        "block-system-invertible", worst > 1e-10,
        f"min scaled pivot {worst:.3e} over {count} systems",
    )


def check_glr_oracle(rng, count) -> CheckResult:
    """Sparse solve vs dense partitioned solve vs closed-form inverse."""
    tight = CgParams(tol=1e-12, max_iter=2000)
    worst_part, worst_closed = 0.0, 0.0
    for i in range(count):
        n = int(rng.integers(3, 17))
        g = _random_connected(rng, n, extra=int(rng.integers(0, 5)))
        lap = laplacian(g)
        if i % 2:
            lap = normalized_laplacian(lap, g.degrees())
        s = _random_sampling(rng, n, k=int(rng.integers(1, n)))
        y = rng.uniform(-1.0, 1.0, s.k)
        x = glr_interpolate(GlrProblem(lap, s, y), cg=tight)
        dense = lap.to_dense()
        if s.k < n:
            comp = s.complement()
            x_ref = np.zeros(n)
            x_ref[s.indices] = y
            x_ref[comp] = np.linalg.solve(
                dense[np.ix_(comp, comp)], -dense[np.ix_(comp, s.indices)] @ y
            )
        else:
            x_ref = y.copy()
        scale = 1.0 + float(np.abs(x_ref).max())
        worst_part = max(worst_part, float(np.abs(x - x_ref).max()) / scale)
        # the closed form needs an invertible matrix: tiny self-loops shift
        # the problem, and both routes must solve the shifted version
        shifted = dense + 1e-6 * np.eye(n)
        x_shift = glr_interpolate(GlrProblem(CsrMatrix.from_dense(shifted), s, y), cg=tight)
        closed = glr_dense_oracle(shifted, s, y)
        worst_closed = max(worst_closed, float(np.abs(x_shift - closed).max()) / scale)
    ok = worst_part <= 1e-8 and worst_closed <= 1e-6
    return CheckResult(
        "glr-dense-oracles", ok,
        f"partitioned dev {worst_part:.3e}, closed-form dev {worst_closed:.3e} over {count} instances",
    )


def check_parametrized_cg(rng, count) -> CheckResult:
    """Fixed-step recursion replays the adaptive solver's recorded steps."""
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(2, 9))
        m = rng.normal(size=(n, n))
        a = CsrMatrix.from_dense(m @ m.T + n * np.eye(n))
        b = rng.normal(size=n)
        res = cg_solve(a, b, params=CgParams(tol=1e-300, max_iter=6))
        replay = cg_parametrized(a, b, np.zeros(n), tuple(res.steps))
        worst = max(worst, float(np.abs(replay - res.x).max()))
    return CheckResult(
        "parametrized-cg-replay", worst <= 1e-10, f"max replay deviation {worst:.3e}"
    )


def _lagrangian_gradients(cd, s, y, st, gamma):
    # dense re-derivation of the smooth-part gradients at the current state
    n = cd.shape[1]
    h = np.zeros((s.k, n))
    h[np.arange(s.k), s.indices] = 1.0
    r = cd.shape[0]
    qt1, qt2 = st.qt[:r], st.qt[r:]
    ra = st.z - cd @ st.x - st.q1
    rb = st.z + cd @ st.x - st.q2
    rc = h @ st.x - y
    rd = st.q1 - qt1
    re = st.q2 - qt2
    gz = 1.0 + st.mu_a + st.mu_b + gamma * (ra + rb)
    gx = cd.T @ (st.mu_b - st.mu_a) + h.T @ st.mu_c + gamma * (
        cd.T @ (rb - ra) + h.T @ rc
    )
    gq1 = -st.mu_a + st.mu_d + gamma * (rd - ra)
    gq2 = -st.mu_b + st.mu_e + gamma * (re - rb)
    return gz, gx, gq1, gq2


def check_gtv_stationarity(rng, count) -> CheckResult:
    """The (bound, signal, slack) triple jointly zeroes the smooth gradients."""
    tight = CgParams(tol=1e-13, max_iter=5000)
    worst = 0.0
    for i in range(count):
        n = int(rng.integers(3, 11))
        g = _random_connected(rng, n, extra=int(rng.integers(0, 4)))
        c = normalize_rw(g) if i % 2 else incidence(g)
        s = _random_sampling(rng, n)
        y = rng.uniform(-1.0, 1.0, s.k)
        gamma = float(rng.uniform(0.5, 20.0))
        p = AdmmParams(gamma=gamma, admm_iters=1, cg=tight)
        st = admm_init(c, s, y, rng.uniform(-1.0, 1.0, n), p)
        r = c.n_rows
        st.qt = np.abs(rng.normal(size=2 * r))
        for name in ("mu_a", "mu_b", "mu_d", "mu_e"):
            setattr(st, name, rng.normal(size=r))
        st.mu_c = rng.normal(size=s.k)
        st.z = update_z(st, p)
        st.x = update_x(st, c, s, y, p)
        st.q1, st.q2 = update_q(st, c, p)
        gz, gx, gq1, gq2 = _lagrangian_gradients(c.to_dense(), s, y, st, gamma)
        scale = 1.0 + max(float(np.abs(v).max()) for v in (st.z, st.x, st.q1, st.q2))
        dev = max(float(np.abs(v).max()) for v in (gz, gx, gq1, gq2))
        worst = max(worst, dev / scale)
    return CheckResult(
        "gtv-joint-stationarity", worst <= 1e-6,
        f"max scaled gradient {worst:.3e} over {count} states",
    )


def _grid_oracle(cd, s, y, base_points=11, refinements=3):
    # exhaustive search over the free variables; minimizers of a sum of
    # absolute values of affine terms lie within the observed value range
    n = cd.shape[1]
    free = np.setdiff1d(np.arange(n), s.indices)
    x = np.zeros(n)
    x[s.indices] = y
    fixed = cd @ x
    cf = cd[:, free]
    lo, hi = float(y.min()), float(y.max())
    if free.size == 0:
        return float(np.abs(fixed).sum())
    grids = [np.linspace(lo, hi, base_points)] * free.size
    best = None
    for _ in range(refinements + 1):
        mesh = np.meshgrid(*grids, indexing="ij")
        cand = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.abs(cand @ cf.T + fixed).sum(axis=1)
        j = int(np.argmin(vals))
        best = cand[j]
        step = [(g[1] - g[0]) if g.size > 1 else (hi - lo) for g in grids]
        grids = [
            np.linspace(b - st_, b + st_, 21) for b, st_ in zip(best, step)
        ]
    return float(np.abs(cf @ best + fixed).sum())


def check_gtv_lp_oracle(rng, count, iters=600) -> CheckResult:
    """ADMM objective and feasibility against an exhaustive grid search."""
    worst_gap, worst_feas = -np.inf, 0.0
    for i in range(count):
        n = int(rng.integers(3, 9))
        g = _random_connected(rng, n, extra=int(rng.integers(0, 3)))
        c = normalize_rw(g) if i % 2 else incidence(g)
        n_free = int(rng.integers(1, min(3, n - 1) + 1))
        s = _random_sampling(rng, n, k=n - n_free)
        y = rng.uniform(0.0, 1.0, s.k)
        p = AdmmParams(gamma=10.0, admm_iters=iters, cg=CgParams(tol=1e-12, max_iter=200))
        x, _ = gtv_interpolate(c, s, y, np.zeros(n), p=p)
        obj = gtv_objective(c, x)
        oracle = _grid_oracle(c.to_dense(), s, y)
        worst_gap = max(worst_gap, obj - oracle)
        free = np.setdiff1d(np.arange(n), s.indices)
        x_proj = x.copy()
        x_proj[s.indices] = y
        worst_feas = max(worst_feas, float(np.abs(x - x_proj).max()))
    ok = worst_gap <= 1e-2 and worst_feas <= 1e-3
    return CheckResult(
        "gtv-lp-oracle", ok,
        f"objective gap {worst_gap:.3e}, constraint violation {worst_feas:.3e} over {count} instances",
    )


_LEVELS = {
    "fast": dict(spectrum=25, pd=25, generalized=25, block=10, glr=25, cg=25,
                 stationarity=10, lp=4),
    "full": dict(spectrum=200, pd=200, generalized=200, block=50, glr=200, cg=100,
                 stationarity=50, lp=100),
}


def run(level="fast", seed=0):
    """Execute the suite; returns (results, all_ok)."""
    if level not in _LEVELS:
        raise ValueError(f"level must be one of {sorted(_LEVELS)}, got {level!r}")
    counts = _LEVELS[level]
    rng = np.random.default_rng(seed)
    results = [
        check_golden_matrices(),
        check_laplacian_spectrum(rng, counts["spectrum"]),
        check_submatrix_pd(rng, counts["pd"]),
        check_generalized_pd(rng, counts["generalized"]),
        check_block_system(rng, counts["block"]),
        check_glr_oracle(rng, counts["glr"]),
        check_parametrized_cg(rng, counts["cg"]),
        check_gtv_stationarity(rng, counts["stationarity"]),
        check_gtv_lp_oracle(rng, counts["lp"]),
    ]
    # comparisons above may carry numpy bools; normalize for serialization
    results = [CheckResult(r.name, bool(r.ok), r.detail) for r in results]
    return results, all(r.ok for r in results)
