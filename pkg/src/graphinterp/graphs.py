"""Pixel similarity graphs: features, Mahalanobis edge weights, window
topologies, Laplacians and the row-normalized incidence matrix.

Conventions: an undirected edge is stored once as (i, j) with i < j in
lexicographic order.  The incidence matrix has one row per edge; the
row-normalized variant has two directed rows per edge, (i -> j) first,
each scaled so the total weight leaving a node is one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import CsrMatrix


@dataclass(frozen=True)
class GraphTopology:
    """Undirected weighted graph on ``n_nodes`` nodes.

    Edges are parallel arrays ``(edges_i, edges_j, weights)`` with
    ``edges_i < edges_j``, lexicographically sorted and duplicate-free.
    ``grid_shape`` records the (H, W) pixel grid when the graph came from
    an image.
    """

    n_nodes: int
    edges_i: np.ndarray
    edges_j: np.ndarray
    weights: np.ndarray
    grid_shape: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "edges_i", np.asarray(self.edges_i, dtype=np.int64))
        object.__setattr__(self, "edges_j", np.asarray(self.edges_j, dtype=np.int64))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        ei, ej, w = self.edges_i, self.edges_j, self.weights
        if self.n_nodes < 1:
            raise ValueError("graph needs at least one node")
        if not (ei.shape == ej.shape == w.shape) or ei.ndim != 1:
            raise ValueError("edge arrays must be 1-d and of equal length")
        if ei.size:
            if ei.min() < 0 or ej.max() >= self.n_nodes:
                raise ValueError("edge endpoint out of range")
            if np.any(ei >= ej):
                raise ValueError("edges must satisfy i < j (no self-loops)")
            key = ei * self.n_nodes + ej
            if np.any(np.diff(key) <= 0):
                raise ValueError("edges must be lexicographically sorted and unique")
        if not np.all(np.isfinite(w)) or (w.size and w.min() < 0):
            raise ValueError("edge weights must be finite and non-negative")

    @property
    def n_edges(self) -> int:
        return int(self.edges_i.shape[0])

    @classmethod
    def from_edge_list(cls, n_nodes, edges, grid_shape=None) -> "GraphTopology":
        """Build from (i, j, w) triplets in any order; endpoints are swapped
        into i < j form and the list is sorted."""
        if len(edges) == 0:
            z = np.zeros(0)
            return cls(n_nodes, z, z, z, grid_shape)
        arr = np.asarray([(min(i, j), max(i, j), w) for i, j, w in edges], dtype=np.float64)
        order = np.lexsort((arr[:, 1], arr[:, 0]))
        arr = arr[order]
        return cls(n_nodes, arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2], grid_shape)

    def degrees(self) -> np.ndarray:
        d = np.bincount(self.edges_i, weights=self.weights, minlength=self.n_nodes)
        d += np.bincount(self.edges_j, weights=self.weights, minlength=self.n_nodes)
        return d


def is_connected(g: GraphTopology) -> bool:
    """Breadth-first reachability over the undirected edge list."""
    n = g.n_nodes
    if n == 1:
        return True
    adj_from = np.concatenate([g.edges_i, g.edges_j])
    adj_to = np.concatenate([g.edges_j, g.edges_i])
    order = np.argsort(adj_from, kind="stable")
    adj_from, adj_to = adj_from[order], adj_to[order]
    starts = np.searchsorted(adj_from, np.arange(n + 1))
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = [0]
    count = 1
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj_to[starts[u]:starts[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    nxt.append(int(v))
                    count += 1
        frontier = nxt
    return count == n


def extract_features(shape, channels, spatial_scale=1.0) -> np.ndarray:
    """Per-pixel feature rows (R, G, B, row*s, col*s) from the current estimate.

    ``channels`` is a sequence of one (grayscale, replicated to three
    columns) or three vectors of length H*W in row-major order.  The same
    feature table is shared by all channels of a block.
    """
    h, w = int(shape[0]), int(shape[1])
    n = h * w
    chans = [np.asarray(c, dtype=np.float64).ravel() for c in channels]
    if len(chans) == 1:
        chans = chans * 3
    if len(chans) != 3:
        raise ValueError("expected 1 or 3 channels")
    for c in chans:
        if c.shape[0] != n:
            raise ValueError(f"channel length {c.shape[0]} does not match grid {h}x{w}")
    f = np.empty((n, 5))
    f[:, 0], f[:, 1], f[:, 2] = chans
    rows, cols = np.divmod(np.arange(n), w)
    f[:, 3] = spatial_scale * rows
    f[:, 4] = spatial_scale * cols
    return f


def mahalanobis_d(fi, fj, metric) -> float:
    """Squared Mahalanobis distance (fi-fj)' diag(metric) (fi-fj)."""
    fi = np.asarray(fi, dtype=np.float64)
    fj = np.asarray(fj, dtype=np.float64)
    if fi.shape != fj.shape:
        raise ValueError("feature rows must have equal length")
    m = np.broadcast_to(np.asarray(metric, dtype=np.float64), fi.shape)
    if m.min() < 0:
        raise ValueError("metric diagonal must be non-negative")
    diff = fi - fj
    return float(np.sum(m * diff * diff))


def edge_weight(d) -> float:
    """Gaussian-kernel weight exp(-d) for a squared distance d >= 0."""
    if d < 0:
        raise ValueError("squared distance must be non-negative")
    return float(np.exp(-d))


def edge_weights(features, edges_i, edges_j, metric) -> np.ndarray:
    """Vectorized exp(-d) over an edge index list; symmetric by construction."""
    f = np.asarray(features, dtype=np.float64)
    m = np.broadcast_to(np.asarray(metric, dtype=np.float64), (f.shape[1],))
    if m.min() < 0:
        raise ValueError("metric diagonal must be non-negative")
    diff = f[edges_i] - f[edges_j]
    return np.exp(-((diff * diff) @ m))


def build_window_graph(h, w, radius=2):
    """Edge index pairs connecting pixels within Chebyshev distance ``radius``.

    Returns ``(edges_i, edges_j)`` in lexicographic order with i < j; node
    ids are row-major.  The 5x5 window of the default radius gives every
    interior pixel 24 neighbours.
    """
    h, w = int(h), int(w)
    if h < 1 or w < 1 or h * w < 2:
        raise ValueError("grid must contain at least two pixels")
    if radius < 1:
        raise ValueError("radius must be at least 1")
    pairs_i, pairs_j = [], []
    rows = np.arange(h)
    cols = np.arange(w)
    for dr in range(0, radius + 1):
        dcs = range(1, radius + 1) if dr == 0 else range(-radius, radius + 1)
        for dc in dcs:
            r0 = rows[(rows + dr < h)]
            c0 = cols[(cols + dc < w) & (cols + dc >= 0)]
            if r0.size == 0 or c0.size == 0:
                continue
            rr, cc = np.meshgrid(r0, c0, indexing="ij")
            pairs_i.append((rr * w + cc).ravel())
            pairs_j.append(((rr + dr) * w + (cc + dc)).ravel())
    ei = np.concatenate(pairs_i)
    ej = np.concatenate(pairs_j)
    order = np.lexsort((ej, ei))
    return ei[order], ej[order]


def laplacian(g: GraphTopology) -> CsrMatrix:
    """Combinatorial Laplacian L = D - W."""
    n = g.n_nodes
    ei, ej, w = g.edges_i, g.edges_j, g.weights
    rows = np.concatenate([ei, ej, ei, ej])
    cols = np.concatenate([ei, ej, ej, ei])
    vals = np.concatenate([w, w, -w, -w])
    return CsrMatrix.from_coo(n, n, rows, cols, vals)


def normalized_laplacian(lap: CsrMatrix, degrees) -> CsrMatrix:
    """Symmetric normalization D^{-1/2} L D^{-1/2}.

    ``lap`` must be the combinatorial Laplacian of a positive graph whose
    diagonal equals ``degrees``; the unit diagonal is then set exactly.
    """
    d = np.asarray(degrees, dtype=np.float64)
    if lap.n_rows != lap.n_cols or d.shape[0] != lap.n_rows:
        raise ValueError("degree vector must match the Laplacian size")
    if d.size == 0 or d.min() <= 0:
        raise ValueError("isolated node: all degrees must be positive")
    inv_sqrt = 1.0 / np.sqrt(d)
    row_of = np.repeat(np.arange(lap.n_rows), np.diff(lap.row_ptr))
    vals = lap.values * inv_sqrt[row_of] * inv_sqrt[lap.col_idx]
    on_diag = row_of == lap.col_idx
    if np.any(np.abs(vals[on_diag] - 1.0) > 1e-8):
        raise ValueError("Laplacian diagonal does not match the degree vector")
    vals[on_diag] = 1.0
    return CsrMatrix(lap.n_rows, lap.n_cols, lap.row_ptr, lap.col_idx, vals)


def incidence(g: GraphTopology) -> CsrMatrix:
    """Edge-node incidence: row k holds +w at i and -w at j for edge k."""
    m, n = g.n_edges, g.n_nodes
    k = np.arange(m)
    rows = np.concatenate([k, k])
    cols = np.concatenate([g.edges_i, g.edges_j])
    vals = np.concatenate([g.weights, -g.weights])
    return CsrMatrix.from_coo(m, n, rows, cols, vals)


def normalize_rw(g: GraphTopology) -> CsrMatrix:
    """Row-normalized directed incidence (2M x N).

    Edge k yields rows 2k and 2k+1: the (i -> j) row carries
    w_ij / deg(i) and the (j -> i) row w_ij / deg(j), so the weights
    leaving each node sum to one.
    """
    d = g.degrees()
    if g.n_edges == 0 or d.min() <= 0:
        raise ValueError("isolated node: row normalization undefined")
    ei, ej, w = g.edges_i, g.edges_j, g.weights
    w_fwd = w / d[ei]
    w_bwd = w / d[ej]
    k = np.arange(g.n_edges)
    rows = np.concatenate([2 * k, 2 * k, 2 * k + 1, 2 * k + 1])
    cols = np.concatenate([ei, ej, ej, ei])
    vals = np.concatenate([w_fwd, -w_fwd, w_bwd, -w_bwd])
    return CsrMatrix.from_coo(2 * g.n_edges, g.n_nodes, rows, cols, vals)


def gtv_laplacian(cbar: CsrMatrix) -> CsrMatrix:
    """Gram matrix of an incidence matrix: symmetric PSD with zero row sums."""
    c = cbar.to_scipy()
    return CsrMatrix.from_scipy((c.T @ c).tocsr())
