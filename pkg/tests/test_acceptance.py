"""Acceptance gate: one test per review criterion, run at the stated
instance counts, tolerances, and runtime budgets.

Criteria 6 and 7 score reconstruction quality on the 18-image McM
benchmark, which is not redistributed here.  Point GRAPHINTERP_MCM at a
directory holding the set converted to PPM or PNG to enable them; they
skip otherwise.  Everything else runs self-contained.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from graphinterp import selftest
from graphinterp.cli import cmd_demosaic, cmd_interp2x
from graphinterp.pipeline import BlockConfig, export_params, import_params

SEED = 20260815


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def test_criterion_1_glr_oracle_equivalence():
    # 200 random connected graphs, N <= 16, K in [1, N-1]: sparse solve vs
    # dense partitioned solve (<= 1e-8) and, with epsilon self-loops, vs
    # the closed-form inverse (<= 1e-6)
    rng = np.random.default_rng(SEED)
    result, elapsed = _timed(selftest.check_glr_oracle, rng, 200)
    assert result.ok, result.detail
    assert elapsed < 10.0, f"took {elapsed:.1f}s, budget 10s"


def test_criterion_2_gtv_lp_optimality():
    # 100 instances with at most 3 free variables, gamma=10, >= 200 ADMM
    # iterations: objective within 1e-2 of the grid oracle, samples held
    # to 1e-3
    rng = np.random.default_rng(SEED)
    result, elapsed = _timed(selftest.check_gtv_lp_oracle, rng, 100)
    assert result.ok, result.detail
    assert elapsed < 60.0, f"took {elapsed:.1f}s, budget 60s"


def test_criterion_3_spectral_guarantees():
    # lambda_min(L_cc) > 1e-8 and lambda_min(C'C + H'H) > 1e-8 over 200
    # sampled instances each; the saddle-point block matrix nonsingular
    # on 50
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    sub = selftest.check_submatrix_pd(rng, 200)
    gen = selftest.check_generalized_pd(rng, 200)
    block = selftest.check_block_system(rng, 50)
    elapsed = time.perf_counter() - t0
    assert sub.ok, sub.detail
    assert gen.ok, gen.detail
    assert block.ok, block.detail
    assert elapsed < 30.0, f"took {elapsed:.1f}s, budget 30s"


def test_criterion_4_golden_matrices():
    # three-node reference: normalized incidence row multiset, its Gram
    # matrix at s = 6/5, and the zero row-sum identity, all to 1e-12
    result = selftest.check_golden_matrices()
    assert result.ok, result.detail


def test_criterion_5_admm_stationarity():
    # after each sub-update on 50 random states, the matching smooth
    # gradient block vanishes to 1e-6 * (1 + state scale)
    rng = np.random.default_rng(SEED)
    result = selftest.check_gtv_stationarity(rng, 50)
    assert result.ok, result.detail


# --- benchmark criteria (user-supplied dataset) ---

_MCM_ENV = "GRAPHINTERP_MCM"

# reference means for the 18-image McM set, in dB
BILINEAR_CPSNR = 29.71
BICUBIC_YPSNR = 29.01
IGTV_CPSNR = 30.43
IGLR_CPSNR = 29.39
IGTV_YPSNR = 30.41


def _mcm_dir() -> Path:
    path = os.environ.get(_MCM_ENV)
    if not path:
        pytest.skip(f"set {_MCM_ENV} to the McM image directory (PPM or PNG)")
    path = Path(path)
    if not path.is_dir():
        pytest.skip(f"{_MCM_ENV}={path} is not a directory")
    return path


_bench_cache = {}


def _bench(kind: str, method: str, tmp_root: Path):
    """Run one method over the dataset once; cache (report, seconds)."""
    key = (kind, method)
    if key not in _bench_cache:
        mcm = _mcm_dir()
        out = tmp_root / f"{kind}_{method}"
        cfg = BlockConfig(method={"iglr": "glr"}.get(method, "gtv"))
        runner = cmd_demosaic if kind == "demosaic" else cmd_interp2x
        report, elapsed = _timed(runner, mcm, out, method, cfg)
        assert report.errors == [], f"unreadable benchmark files: {report.errors}"
        assert report.rows, "benchmark directory holds no readable images"
        _bench_cache[key] = (report, elapsed)
    return _bench_cache[key]


@pytest.fixture(scope="module")
def bench_root(tmp_path_factory):
    return tmp_path_factory.mktemp("mcm_bench")


def test_criterion_6_classical_baselines(bench_root):
    # bilinear demosaicking mean CPSNR and bicubic 2x mean Y-PSNR each
    # within 0.5 dB of the reference means; minutes for the whole set
    bil, t_bil = _bench("demosaic", "bilinear", bench_root)
    bic, t_bic = _bench("interp2x", "bicubic", bench_root)
    assert abs(bil.mean_psnr - BILINEAR_CPSNR) <= 0.5, (
        f"bilinear CPSNR {bil.mean_psnr:.2f}, want {BILINEAR_CPSNR} +- 0.5")
    assert abs(bic.mean_psnr - BICUBIC_YPSNR) <= 0.5, (
        f"bicubic Y-PSNR {bic.mean_psnr:.2f}, want {BICUBIC_YPSNR} +- 0.5")
    assert t_bil + t_bic < 600.0, f"took {t_bil + t_bic:.0f}s, budget minutes"


def test_criterion_7_iterative_solvers(bench_root):
    # soft absolute targets (1.0 dB windows) plus calibration-free
    # orderings: iGTV >= iGLR on demosaicking, iGTV >= bicubic + 0.5 dB
    # on interpolation; <= 5 min per image at default settings
    igtv_dem, _ = _bench("demosaic", "igtv", bench_root)
    iglr_dem, _ = _bench("demosaic", "iglr", bench_root)
    igtv_int, _ = _bench("interp2x", "igtv", bench_root)
    bic, _ = _bench("interp2x", "bicubic", bench_root)

    assert abs(igtv_dem.mean_psnr - IGTV_CPSNR) <= 1.0, (
        f"iGTV demosaic CPSNR {igtv_dem.mean_psnr:.2f}, want {IGTV_CPSNR} +- 1.0")
    assert abs(iglr_dem.mean_psnr - IGLR_CPSNR) <= 1.0, (
        f"iGLR demosaic CPSNR {iglr_dem.mean_psnr:.2f}, want {IGLR_CPSNR} +- 1.0")
    assert abs(igtv_int.mean_psnr - IGTV_YPSNR) <= 1.0, (
        f"iGTV 2x Y-PSNR {igtv_int.mean_psnr:.2f}, want {IGTV_YPSNR} +- 1.0")

    assert igtv_dem.mean_psnr >= iglr_dem.mean_psnr, (
        f"iGTV {igtv_dem.mean_psnr:.2f} below iGLR {iglr_dem.mean_psnr:.2f}")
    assert igtv_int.mean_psnr >= bic.mean_psnr + 0.5, (
        f"iGTV {igtv_int.mean_psnr:.2f} not 0.5 dB over bicubic {bic.mean_psnr:.2f}")

    slowest = max(r.seconds for r in igtv_dem.rows + igtv_int.rows)
    assert slowest <= 300.0, f"slowest image {slowest:.0f}s, budget 300s/image"


def test_criterion_8_learned_models_out_of_scope():
    # trained per-block parameters are not reproduced here; the artifact
    # instead exposes (a) the oracle/invariant suites behind criteria 1-5
    # and (b) a round-tripping parameter slot that can load external
    # per-block step sizes
    counts = selftest._LEVELS["full"]
    assert counts["glr"] >= 200 and counts["lp"] >= 100
    assert counts["pd"] >= 200 and counts["stationarity"] >= 50

    cfg = BlockConfig(method="glr", blocks=7, cg_iters=4, cg_alpha=0.31, cg_beta=0.07)
    restored = import_params(export_params(cfg))
    assert restored == cfg
    assert restored.cg_params().schedule == ((0.31, 0.07),)
