import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairbads.central import BarycenterConfig, KdeConfig
from fairbads.particles import ParticleSet
from fairbads.theory import (KernelExpansion, check_disparity_bound, check_padding_invariance,
                             check_transfer_bound, effective_gap, empirical_lipschitz,
                             random_bound_instance, run_bound_suite, run_padding_suite)


def test_empirical_lipschitz_linear():
    f = lambda Z: np.atleast_2d(Z) @ np.array([3.0, 4.0])  # noqa: E731
    pts = np.random.default_rng(0).normal(size=(6, 2))
    L = empirical_lipschitz(f, [pts])
    assert L <= 5.0 + 1e-12
    assert L > 0


def test_transfer_bound_identical_sets_zero_lhs():
    pts = ParticleSet(np.random.default_rng(1).normal(size=(4, 2)))
    loss = lambda Z: np.sum(np.atleast_2d(Z) ** 2, axis=1)  # noqa: E731
    r = check_transfer_bound([pts, pts], pts, [loss, loss], "w2")
    assert r.lhs == 0.0 and r.rhs == 0.0 and r.passed


def test_disparity_bound_report_fields():
    groups, central, losses = random_bound_instance(np.random.default_rng(2))
    r = check_disparity_bound(groups, central, losses, "w2")
    assert r.passed
    assert r.constants["K_eff"] == effective_gap(central, losses)
    assert '"status": "PASS"' in r.to_json()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_bounds_hold_on_random_instances(seed):
    groups, central, losses = random_bound_instance(np.random.default_rng(seed))
    js = BarycenterConfig(f_choice="js")
    for div in ("w2", "fdiv"):
        assert check_transfer_bound(groups, central, losses, div, js).slack >= -1e-9
        assert check_disparity_bound(groups, central, losses, div, js).slack >= -1e-9


def test_mmd_bound_needs_kernel_expansion():
    groups, central, losses = random_bound_instance(np.random.default_rng(3))
    assert check_transfer_bound(groups, central, losses, "mmd").status == "NOT_CHECKABLE"
    rng = np.random.default_rng(4)
    dim = groups[0].dim
    kde = KdeConfig(1.0)
    kl = [KernelExpansion(rng.normal(size=(3, dim)), rng.normal(size=3), 1.0) for _ in groups]
    r = check_transfer_bound(groups, central, kl, "mmd", kde=kde)
    assert r.passed
    assert check_disparity_bound(groups, central, kl, "mmd", kde=kde).passed


def test_chi2_like_f_not_checkable():
    groups, central, losses = random_bound_instance(np.random.default_rng(5))
    r = check_transfer_bound(groups, central, losses, "fdiv", BarycenterConfig(f_choice="reverse_kl"))
    assert r.status == "NOT_CHECKABLE"


def test_rkhs_norm_single_center():
    k = KernelExpansion(np.zeros((1, 2)), np.array([3.0]), 0.5)
    assert k.rkhs_norm == 3.0


def test_padding_invariance_equal_dims():
    rng = np.random.default_rng(6)
    a = ParticleSet(rng.normal(scale=0.1, size=(4, 5)), n_params=2)
    b = ParticleSet(rng.normal(scale=0.1, size=(4, 5)), n_params=2)
    rep = check_padding_invariance(a, b, 9)
    assert rep.passed
    assert rep.diffs["fdiv"] <= 1e-9


def test_suites():
    res = run_bound_suite(20, 0)
    assert res["fail"] == 0 and res["pass"] == 20
    assert set(res["cases"]) == {"transfer_w2", "disparity_w2", "transfer_js", "disparity_js"}
    assert run_padding_suite(20, 0) == {"pass": 20, "fail": 0}


def test_disparity_needs_two_groups():
    groups, central, losses = random_bound_instance(np.random.default_rng(7))
    with pytest.raises(ValueError):
        check_disparity_bound(groups[:1], central, losses[:1])
