import numpy as np
import pytest

from graphinterp import selftest


def test_fast_level_all_green():
    results, ok = selftest.run("fast", seed=0)
    assert ok
    assert len(results) == 9
    assert all(isinstance(r.ok, bool) for r in results)
    names = [r.name for r in results]
    assert "golden-matrices" in names
    assert "gtv-lp-oracle" in names


def test_unknown_level_rejected():
    with pytest.raises(ValueError, match="level"):
        selftest.run("paranoid")


def test_golden_check_standalone():
    r = selftest.check_golden_matrices()
    assert r.ok and "deviation" in r.detail


def test_checks_are_seed_deterministic():
    a, _ = selftest.run("fast", seed=7)
    b, _ = selftest.run("fast", seed=7)
    assert [r.detail for r in a] == [r.detail for r in b]


def test_stationarity_check_detects_broken_update(monkeypatch):
    # sanity: the check must actually fail when an update is wrong
    monkeypatch.setattr(selftest, "update_z", lambda st, p: st.z * 0.5 + 1.0)
    rng = np.random.default_rng(0)
    r = selftest.check_gtv_stationarity(rng, 3)
    assert not r.ok
