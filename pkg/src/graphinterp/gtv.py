"""Graph total-variation interpolation by ADMM on a sparse linear program.

The l1 objective ||C x||_1 with hard constraints H x = y is rewritten with
an upper-bound variable z >= +-Cx and slack pairs (q1, q2), giving a linear
program whose ADMM splitting has closed-form updates for everything except
x, which solves a sparse SPD system by conjugate gradients.

State layout (R = number of incidence rows, N nodes, K samples):
  z (R), x (N), q1, q2 (R), qt = (qt1; qt2) (2R),
  duals mu_a, mu_b (bound rows), mu_c (sampling rows, K),
  mu_d, mu_e (slack-coupling rows).

The scaled-iteration invariants: the (z, x, q) triple jointly minimizes the
augmented Lagrangian's smooth part for fixed (qt, mu); qt is the
non-negative projection of q + mu/gamma; the duals ascend along the
constraint residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from .glr import SamplingSet, h_apply, h_transpose
from .sparse import CgParams, CgResult, CsrMatrix, cg_parametrized, cg_solve


@dataclass(frozen=True)
class AdmmParams:
    """gamma is the penalty weight; admm_iters the fixed cycle count.

    ``cg`` controls the inner x-solve.  The defaults mirror the untrained
    pipeline configuration: gamma 10, five cycles, ten fixed (0.5, 0.3)
    inner steps.
    """

    gamma: float = 10.0
    admm_iters: int = 5
    cg: CgParams = field(default_factory=lambda: CgParams(max_iter=10, schedule=((0.5, 0.3),)))
    feas_tol: float = 1e-3

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.admm_iters < 1:
            raise ValueError("admm_iters must be at least 1")
        if not self.feas_tol > 0:
            raise ValueError("feas_tol must be positive")


@dataclass
class AdmmState:
    z: np.ndarray
    x: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    qt: np.ndarray
    mu_a: np.ndarray
    mu_b: np.ndarray
    mu_c: np.ndarray
    mu_d: np.ndarray
    mu_e: np.ndarray

    @property
    def n_rows(self) -> int:
        return int(self.z.shape[0])


@dataclass
class GtvDiagnostics:
    """Per-cycle solver trace plus the final feasibility report."""

    objective: list = field(default_factory=list)
    feasibility: list = field(default_factory=list)
    cg_residual: list = field(default_factory=list)
    cg_iters: list = field(default_factory=list)
    state: "AdmmState | None" = None

    @property
    def final_objective(self) -> float:
        return self.objective[-1]

    @property
    def final_feasibility(self) -> float:
        return self.feasibility[-1]


def gtv_objective(c: CsrMatrix, x) -> float:
    """Graph total variation ||C x||_1."""
    return float(np.abs(c @ x).sum())


def gtv_system(c: CsrMatrix, s: SamplingSet) -> CsrMatrix:
    """The SPD x-update system C'C + H'H."""
    sp = c.to_scipy()
    sys_ = (sp.T @ sp) + scipy.sparse.diags(s.mask())
    return CsrMatrix.from_scipy(sys_.tocsr())


def coverage_ok(c: CsrMatrix, s: SamplingSet) -> bool:
    """True when every connected component of the incidence graph holds a
    sample; that is exactly when C'C + H'H is invertible."""
    sp = c.to_scipy()
    adj = abs(sp).T @ abs(sp)
    n_comp, labels = scipy.sparse.csgraph.connected_components(adj, directed=False)
    present = np.bincount(labels, minlength=n_comp) > 0
    sampled = np.bincount(labels[s.indices], minlength=n_comp) > 0
    return bool(np.all(sampled[present]))


def admm_init(c: CsrMatrix, s: SamplingSet, y, x0, p: AdmmParams) -> AdmmState:
    """Initial state: x from the (projected) start estimate, z the exact
    bound |C x|, slacks consistent with it, every dual entry 0.1."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (s.k,):
        raise ValueError("observation length does not match the sampling set")
    x = np.asarray(x0, dtype=np.float64).copy()
    if x.shape != (c.n_cols,):
        raise ValueError("x0 length does not match the incidence matrix")
    x[s.indices] = y
    cx = c @ x
    z = np.abs(cx)
    q1 = z - cx
    q2 = z + cx
    r = c.n_rows
    return AdmmState(
        z=z,
        x=x,
        q1=q1,
        q2=q2,
        qt=np.concatenate([q1, q2]),
        mu_a=np.full(r, 0.1),
        mu_b=np.full(r, 0.1),
        mu_c=np.full(s.k, 0.1),
        mu_d=np.full(r, 0.1),
        mu_e=np.full(r, 0.1),
    )


def update_z(st: AdmmState, p: AdmmParams) -> np.ndarray:
    r = st.n_rows
    qt1, qt2 = st.qt[:r], st.qt[r:]
    g = p.gamma
    return (
        -(1.0 / g) * np.ones(r)
        - (st.mu_a + st.mu_b + st.mu_d + st.mu_e) / (2.0 * g)
        + 0.5 * (qt1 + qt2)
    )


def update_x(
    st: AdmmState,
    c: CsrMatrix,
    s: SamplingSet,
    y,
    p: AdmmParams,
    system: CsrMatrix | None = None,
    return_info: bool = False,
):
    """Solve gamma (C'C + H'H) x = rhs for the new x.

    The system matrix can be passed in to amortize its assembly across
    iterations and channels.  Warm-starts from the current x.
    """
    y = np.asarray(y, dtype=np.float64)
    if system is None:
        system = gtv_system(c, s)
    r = c.n_rows
    g = p.gamma
    qt1, qt2 = st.qt[:r], st.qt[r:]
    row_load = 0.5 * (st.mu_a - st.mu_b + st.mu_d - st.mu_e) - (g / 2.0) * (qt1 - qt2)
    rhs = c.to_scipy().T @ row_load - h_transpose(s, st.mu_c) + g * h_transpose(s, y)
    rhs /= g
    if p.cg.schedule is not None:
        x = cg_parametrized(system, rhs, st.x, p.cg.schedule, p.cg.max_iter)
        info = CgResult(x, p.cg.max_iter, float(np.linalg.norm(rhs - system @ x)), False)
    else:
        info = cg_solve(system, rhs, x0=st.x, params=p.cg)
        if info.breakdown and info.residual > 1e-6 * (1.0 + float(np.linalg.norm(rhs))):
            raise ValueError(
                "CG breakdown in the x-update: some component has no sampled node"
            )
        x = info.x
    return (x, info) if return_info else x


def update_q(st: AdmmState, c: CsrMatrix, p: AdmmParams):
    """Closed-form slack pair from the advanced (z, x) and old (qt, mu)."""
    r = st.n_rows
    g = p.gamma
    cx = c @ st.x
    qt1, qt2 = st.qt[:r], st.qt[r:]
    q1 = 0.5 * (st.z - cx) + (st.mu_a - st.mu_d + g * qt1) / (2.0 * g)
    q2 = 0.5 * (st.z + cx) + (st.mu_b - st.mu_e + g * qt2) / (2.0 * g)
    return q1, q2


def update_qtilde(st: AdmmState, p: AdmmParams) -> np.ndarray:
    """Non-negative projection, entrywise max(0, q + mu/gamma); mu_d pairs
    with q1 and mu_e with q2."""
    q = np.concatenate([st.q1, st.q2])
    mu = np.concatenate([st.mu_d, st.mu_e])
    return np.maximum(0.0, q + mu / p.gamma)


def update_mu(st: AdmmState, c: CsrMatrix, s: SamplingSet, y, p: AdmmParams):
    """Dual ascent along the five constraint-block residuals."""
    y = np.asarray(y, dtype=np.float64)
    r = st.n_rows
    g = p.gamma
    cx = c @ st.x
    qt1, qt2 = st.qt[:r], st.qt[r:]
    mu_a = st.mu_a + g * (st.z - cx - st.q1)
    mu_b = st.mu_b + g * (st.z + cx - st.q2)
    mu_c = st.mu_c + g * (h_apply(s, st.x) - y)
    mu_d = st.mu_d + g * (st.q1 - qt1)
    mu_e = st.mu_e + g * (st.q2 - qt2)
    return mu_a, mu_b, mu_c, mu_d, mu_e


def gtv_interpolate(
    c: CsrMatrix,
    s: SamplingSet,
    y,
    x0,
    p: AdmmParams | None = None,
    system: CsrMatrix | None = None,
):
    """Run ``p.admm_iters`` full ADMM cycles and return (x, diagnostics).

    The constraint H x = y is only met asymptotically here; callers that
    need it exactly project afterwards.  Raises ``ValueError`` when some
    connected component has no sampled node (the x-system is singular
    there).
    """
    if p is None:
        p = AdmmParams()
    y = np.asarray(y, dtype=np.float64)
    if not coverage_ok(c, s):
        raise ValueError("a connected component has no sampled node")
    if system is None:
        system = gtv_system(c, s)
    st = admm_init(c, s, y, x0, p)
    diag = GtvDiagnostics()
    for _ in range(p.admm_iters):
        st.z = update_z(st, p)
        st.x, info = update_x(st, c, s, y, p, system=system, return_info=True)
        st.q1, st.q2 = update_q(st, c, p)
        st.qt = update_qtilde(st, p)
        st.mu_a, st.mu_b, st.mu_c, st.mu_d, st.mu_e = update_mu(st, c, s, y, p)
        diag.objective.append(gtv_objective(c, st.x))
        diag.feasibility.append(float(np.abs(h_apply(s, st.x) - y).max()))
        diag.cg_residual.append(info.residual)
        diag.cg_iters.append(info.n_iter)
    diag.state = st
    return st.x.copy(), diag
