"""Iterated interpolation: an initial scattered-data estimate followed by
T blocks of (feature extraction -> window graph -> smoothness solve), with
the graph rebuilt from the current estimate before every block.

One graph per block is shared by all channels; only the sampling pattern
and observed values differ per channel.  Fixed, hand-set parameters
throughout; `export_params`/`import_params` give the text form used by the
command line and reserve the slot for externally tuned values.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, fields, replace

import numpy as np
import scipy.ndimage

from .glr import GlrProblem, SamplingSet, glr_interpolate
from .graphs import (
    GraphTopology,
    build_window_graph,
    edge_weights,
    extract_features,
    laplacian,
    normalize_rw,
    normalized_laplacian,
)
from .gtv import AdmmParams, gtv_interpolate, gtv_system
from .sparse import CgParams

_METHODS = ("glr", "gtv")

# Intensity features are divided by 255 before distance computation; on the
# raw 8-bit scale the default metric drives exp(-d) into hard underflow
# (zero weight, isolated nodes) for steps of a dozen gray levels.
_INTENSITY_RANGE = 255.0

# key -> parser for the text form; insertion order is the export order
_CONFIG_FIELDS = {
    "method": str,
    "blocks": int,
    "window": int,
    "metric_diag": float,
    "spatial_scale": float,
    "gamma": float,
    "admm_iters": int,
    "cg_iters": int,
    "cg_alpha": float,
    "cg_beta": float,
    "feas_tol": float,
}


@dataclass(frozen=True)
class BlockConfig:
    """Per-block solver settings, constant across the T blocks.

    ``window`` is the Chebyshev radius of the pixel neighbourhood (2 gives
    the 5x5 window).  ``cg_alpha``/``cg_beta`` fix the inner solver's step
    and momentum; set both to None for residual-driven steps instead.
    """

    method: str = "gtv"
    blocks: int = 5
    window: int = 2
    metric_diag: float = 1.5
    spatial_scale: float = 1.0
    gamma: float = 10.0
    admm_iters: int = 5
    cg_iters: int = 10
    cg_alpha: float | None = 0.5
    cg_beta: float | None = 0.3
    feas_tol: float = 1e-3

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if self.blocks < 1:
            raise ValueError("blocks must be at least 1")
        if self.window < 1:
            raise ValueError("window radius must be at least 1")
        if self.metric_diag < 0:
            raise ValueError("metric_diag must be non-negative")
        if self.spatial_scale < 0:
            raise ValueError("spatial_scale must be non-negative")
        if self.cg_iters < 1:
            raise ValueError("cg_iters must be at least 1")
        if (self.cg_alpha is None) != (self.cg_beta is None):
            raise ValueError("cg_alpha and cg_beta must be set together")

    def cg_params(self) -> CgParams:
        schedule = None
        if self.cg_alpha is not None:
            schedule = ((self.cg_alpha, self.cg_beta),)
        return CgParams(max_iter=self.cg_iters, schedule=schedule)

    def admm_params(self) -> AdmmParams:
        return AdmmParams(
            gamma=self.gamma,
            admm_iters=self.admm_iters,
            cg=self.cg_params(),
            feas_tol=self.feas_tol,
        )


@dataclass(frozen=True)
class InterpolationTask:
    """A grid plus per-channel observations: what to fill in, from what."""

    shape: tuple
    channels: tuple  # of (SamplingSet, y) pairs

    def __post_init__(self):
        h, w = self.shape
        if h < 1 or w < 1:
            raise ValueError("degenerate grid")
        if len(self.channels) not in (1, 3):
            raise ValueError("expected 1 or 3 channels")
        object.__setattr__(self, "shape", (int(h), int(w)))
        norm = []
        for s, y in self.channels:
            y = np.asarray(y, dtype=np.float64)
            if s.n_total != h * w:
                raise ValueError("sampling set does not match the grid")
            if y.shape != (s.k,):
                raise ValueError("observation length does not match the sampling set")
            if not np.all(np.isfinite(y)):
                raise ValueError("observations must be finite")
            norm.append((s, y))
        object.__setattr__(self, "channels", tuple(norm))

    @property
    def n_channels(self) -> int:
        return len(self.channels)


def task_from_mosaic(obs) -> InterpolationTask:
    return InterpolationTask(obs.shape, obs.samples)


def task_from_lowres(lr, sampling: SamplingSet, hr_shape) -> InterpolationTask:
    """Upsampling task: the low-resolution pixels observed on the HR grid,
    one shared sampling set for every channel."""
    lr = np.asarray(lr, dtype=np.float64)
    planes = [lr] if lr.ndim == 2 else [lr[..., c] for c in range(lr.shape[2])]
    chans = tuple((sampling, p.ravel().copy()) for p in planes)
    return InterpolationTask(tuple(hr_shape), chans)


def _idw_kernel(radius: int) -> np.ndarray:
    rr, cc = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    dist = np.hypot(rr, cc)
    k = np.zeros_like(dist)
    k[dist > 0] = 1.0 / dist[dist > 0]
    return k


def init_estimate(task: InterpolationTask, window: int = 5) -> list:
    """Inverse-distance weighted fill of each channel's missing pixels.

    ``window`` is the odd side length of the square neighbourhood.  Known
    pixels are copied verbatim; a pixel whose window holds no known value
    gets its window doubled until one appears.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd side length of at least 3")
    h, w = task.shape
    out = []
    for s, y in task.channels:
        plane = np.zeros(h * w)
        plane[s.indices] = y
        plane = plane.reshape(h, w)
        known = s.mask().reshape(h, w).astype(np.float64)
        filled = np.where(known > 0, plane, np.nan)
        radius = window // 2
        while np.isnan(filled).any():
            k = _idw_kernel(radius)
            num = scipy.ndimage.convolve(plane * known, k, mode="constant")
            den = scipy.ndimage.convolve(known, k, mode="constant")
            ready = np.isnan(filled) & (den > 0)
            filled[ready] = num[ready] / den[ready]
            if radius >= max(h, w):
                # window already covered the whole grid
                if np.isnan(filled).any():
                    raise ValueError("channel has no reachable known pixels")
                break
            radius *= 2
        out.append(filled.ravel())
    return out


@functools.lru_cache(maxsize=8)
def _cached_window_edges(h: int, w: int, radius: int):
    return build_window_graph(h, w, radius)


def _assemble(estimates, shape) -> np.ndarray:
    h, w = shape
    if len(estimates) == 1:
        return estimates[0].reshape(h, w)
    return np.stack([e.reshape(h, w) for e in estimates], axis=-1)


def run_blocks(task: InterpolationTask, cfg: BlockConfig, trace=None) -> np.ndarray:
    """Run the T-block pipeline and assemble the final image.

    ``trace``, when a list, receives one entry per block with the shared
    topology and the per-channel estimates after that block's solve.
    """
    h, w = task.shape
    n = h * w
    estimates = init_estimate(task, 2 * cfg.window + 1)
    edges_i, edges_j = _cached_window_edges(h, w, cfg.window)
    metric = np.full(5, cfg.metric_diag)
    for _ in range(cfg.blocks):
        scaled = [e / _INTENSITY_RANGE for e in estimates]
        feats = extract_features((h, w), scaled, cfg.spatial_scale)
        weights = edge_weights(feats, edges_i, edges_j, metric)
        g = GraphTopology(n, edges_i, edges_j, weights, grid_shape=(h, w))
        if cfg.method == "glr":
            lap = normalized_laplacian(laplacian(g), g.degrees())
            for c, (s, y) in enumerate(task.channels):
                problem = GlrProblem(lap, s, y)
                estimates[c] = glr_interpolate(problem, cg=cfg.cg_params(), x0=estimates[c])
        else:
            cbar = normalize_rw(g)
            params = cfg.admm_params()
            for c, (s, y) in enumerate(task.channels):
                system = gtv_system(cbar, s)
                estimates[c], _ = gtv_interpolate(
                    cbar, s, y, estimates[c], p=params, system=system
                )
        for c, (s, y) in enumerate(task.channels):
            estimates[c][s.indices] = y
        if trace is not None:
            trace.append({"topology": g, "estimates": [e.copy() for e in estimates]})
    return np.clip(_assemble(estimates, (h, w)), 0.0, 255.0)


def _tile_starts(extent, tile, stride):
    if extent <= tile:
        return [0]
    starts = list(range(0, extent - tile + 1, stride))
    if starts[-1] != extent - tile:
        starts.append(extent - tile)
    return starts


def _subtask(task, r0, r1, c0, c1):
    _, w = task.shape
    th, tw = r1 - r0, c1 - c0
    chans = []
    for ci, (s, y) in enumerate(task.channels):
        rows, cols = np.divmod(s.indices, w)
        keep = (rows >= r0) & (rows < r1) & (cols >= c0) & (cols < c1)
        if not keep.any():
            raise ValueError(
                f"tile rows {r0}:{r1} cols {c0}:{c1} has no samples for channel {ci}"
            )
        local = (rows[keep] - r0) * tw + (cols[keep] - c0)
        chans.append((SamplingSet(th * tw, local), y[keep]))
    return InterpolationTask((th, tw), tuple(chans))


def run_tiled(task: InterpolationTask, cfg: BlockConfig, tile=128, overlap=None) -> np.ndarray:
    """Run the pipeline on overlapping tiles and average the seams.

    Bounds per-image memory on large inputs; a grid that fits in one tile
    falls through to ``run_blocks`` unchanged.  ``overlap`` defaults to an
    eighth of the tile size.
    """
    h, w = task.shape
    if tile < 2:
        raise ValueError("tile must be at least 2")
    if overlap is None:
        overlap = tile // 8
    if not 0 <= overlap < tile:
        raise ValueError("overlap must be in [0, tile)")
    if h <= tile and w <= tile:
        return run_blocks(task, cfg)
    stride = tile - overlap
    nch = task.n_channels
    acc = np.zeros((h, w, nch))
    cover = np.zeros((h, w))
    for r0 in _tile_starts(h, tile, stride):
        for c0 in _tile_starts(w, tile, stride):
            r1, c1 = min(r0 + tile, h), min(c0 + tile, w)
            out = run_blocks(_subtask(task, r0, r1, c0, c1), cfg)
            if out.ndim == 2:
                out = out[..., None]
            acc[r0:r1, c0:c1] += out
            cover[r0:r1, c0:c1] += 1.0
    img = acc / cover[..., None]
    flat = [img[..., c].ravel() for c in range(nch)]
    for c, (s, y) in enumerate(task.channels):
        flat[c][s.indices] = y
    return _assemble(flat, (h, w))


def _format_value(v) -> str:
    if v is None:
        return "none"
    return repr(v) if isinstance(v, float) else str(v)


def export_params(cfg: BlockConfig) -> str:
    lines = ["# interpolation pipeline parameters"]
    for key in _CONFIG_FIELDS:
        lines.append(f"{key} = {_format_value(getattr(cfg, key))}")
    return "\n".join(lines) + "\n"


def import_params(text: str, base: BlockConfig | None = None) -> BlockConfig:
    """Parse the `key = value` text form; '#' starts a comment."""
    known = {f.name for f in fields(BlockConfig)}
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in updates:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if key in ("cg_alpha", "cg_beta") and value.lower() == "none":
            updates[key] = None
            continue
        try:
            updates[key] = _CONFIG_FIELDS[key](value)
        except ValueError:
            raise ValueError(f"line {lineno}: bad value {value!r} for {key}") from None
    return replace(base if base is not None else BlockConfig(), **updates)
