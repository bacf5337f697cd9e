"""Shared fixtures: random connected graphs and the 3-node reference values."""

import numpy as np

from graphinterp.glr import SamplingSet
from graphinterp.graphs import GraphTopology


def random_connected_topology(rng, n, extra=None, wmin=0.2, wmax=2.0):
    """Random spanning tree plus extra edges; weights uniform in [wmin, wmax]."""
    seen = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        seen.add((u, v))
    if extra is None:
        extra = int(rng.integers(0, n + 1))
    for _ in range(extra):
        u, v = (int(a) for a in rng.integers(0, n, size=2))
        if u != v:
            seen.add((min(u, v), max(u, v)))
    edges = [(i, j, float(rng.uniform(wmin, wmax))) for i, j in sorted(seen)]
    return GraphTopology.from_edge_list(n, edges)


def random_sampling(rng, n, k=None):
    if k is None:
        k = int(rng.integers(1, n))
    idx = np.sort(rng.choice(n, size=k, replace=False))
    return SamplingSet(n, idx)


def reference_triangle():
    """Three nodes with weights w01 = w02 = 1/2 and w12 = 1/3."""
    return GraphTopology.from_edge_list(
        3, [(0, 1, 0.5), (0, 2, 0.5), (1, 2, 1.0 / 3.0)]
    )


def reference_normalized_rows():
    """Expected rows of the normalized incidence of the reference triangle."""
    return np.array(
        [
            [0.5, -0.5, 0.0],
            [-0.6, 0.6, 0.0],
            [0.0, 0.4, -0.4],
            [0.0, -0.4, 0.4],
            [0.5, 0.0, -0.5],
            [-0.6, 0.0, 0.6],
        ]
    )


def reference_gram(s=1.2):
    """Gram matrix of the reference normalized incidence, in terms of the
    normalized weight ratio s = 6/5 (so s/2 = 3/5 and s/3 = 2/5)."""
    s2 = s * s
    off01 = -(1.0 + s2) / 4.0
    off12 = -2.0 * s2 / 9.0
    return np.array(
        [
            [0.5 + s2 / 2.0, off01, off01],
            [off01, (1.0 + s2) / 4.0 + 2.0 * s2 / 9.0, off12],
            [off01, off12, (1.0 + s2) / 4.0 + 2.0 * s2 / 9.0],
        ]
    )


def sorted_rows(a):
    """Rows of a 2-d array sorted lexicographically, for multiset comparison."""
    a = np.asarray(a)
    return a[np.lexsort(a.T[::-1])]


def gtv_grid_oracle(c_dense, s, y, refinements=3):
    """Globally minimize ||C x||_1 subject to x_S = y by refining grid search.

    Only meant for up to three free variables.  A minimizer always exists
    with every free value inside [min y, max y] (clipping toward that
    interval never increases any |x_i - x_j| term), so the search starts on
    an 11-point grid over that range and refines around the incumbent three
    times, shrinking the step tenfold each level.
    """
    c_dense = np.asarray(c_dense, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    free = np.setdiff1d(np.arange(c_dense.shape[1]), s.indices)
    fixed_part = c_dense[:, s.indices] @ y
    if free.size == 0:
        return float(np.abs(fixed_part).sum())
    if free.size > 3:
        raise ValueError("grid oracle supports at most 3 free variables")
    cf = c_dense[:, free]

    def best_on_grid(center, half, pts):
        axes = [np.linspace(c - half, c + half, pts) for c in center]
        mesh = np.meshgrid(*axes, indexing="ij")
        cand = np.stack([m.ravel() for m in mesh])
        obj = np.abs(cf @ cand + fixed_part[:, None]).sum(axis=0)
        k = int(np.argmin(obj))
        return cand[:, k], float(obj[k])

    half = max(0.5 * (y.max() - y.min()), 1e-12)
    center = np.full(free.size, 0.5 * (y.max() + y.min()))
    best_x, best_obj = best_on_grid(center, half, 11)
    step = 2.0 * half / 10.0
    for _ in range(refinements):
        best_x, best_obj = best_on_grid(best_x, step, 21)
        step /= 10.0
    return best_obj


def lagrangian_gradients(c_dense, s, y, z, x, q1, q2, qt, mus, gamma):
    """Gradient blocks of the ADMM subproblem's smooth part, assembled
    directly from the five constraint rows (independent re-derivation)."""
    mu_a, mu_b, mu_c, mu_d, mu_e = mus
    r = z.shape[0]
    qt1, qt2 = qt[:r], qt[r:]
    h = np.zeros((s.k, c_dense.shape[1]))
    h[np.arange(s.k), s.indices] = 1.0
    cx = c_dense @ x
    ra = z - cx - q1
    rb = z + cx - q2
    rc = h @ x - y
    rd = q1 - qt1
    re = q2 - qt2
    gz = np.ones(r) + mu_a + mu_b + gamma * (ra + rb)
    gx = c_dense.T @ (mu_b - mu_a) + h.T @ mu_c + gamma * (
        c_dense.T @ (rb - ra) + h.T @ rc
    )
    gq1 = -mu_a + mu_d + gamma * (rd - ra)
    gq2 = -mu_b + mu_e + gamma * (re - rb)
    return gz, gx, gq1, gq2
