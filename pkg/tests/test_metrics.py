import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairbads.data import Dataset
from fairbads.metrics import (effective_weights, evaluate, evaluate_probs, posterior_predict,
                              weight_distance)
from fairbads.particles import ParticleSet


def ds(y, s):
    n = len(y)
    return Dataset(np.zeros((n, 1)), y, s, y, n_groups=2)


def test_dp_eo_by_hand():
    data = ds([1, 0, 1, 1, 0, 1], [0, 0, 0, 1, 1, 1])
    probs = np.array([0.9, 0.2, 0.7, 0.6, 0.55, 0.1])
    r = evaluate_probs(probs, data)
    # positive rates: group0 2/3, group1 2/3
    assert r.per_group_pos_rate == [2 / 3, 2 / 3]
    assert r.dp == 0.0
    # TPR: group0 2/2, group1 1/2
    assert r.eo == 0.5
    np.testing.assert_allclose(r.acc, 4 / 6)
    overall = probs.mean()
    np.testing.assert_allclose(r.ddp, max(abs(probs[:3].mean() - overall), abs(probs[3:].mean() - overall)))


def test_eo_skips_groups_without_positives():
    r = evaluate_probs(np.array([0.9, 0.1, 0.8]), ds([1, 0, 0], [0, 1, 1]))
    assert r.per_group_tpr == [1.0, None]
    assert r.eo == 0.0


def test_missing_group_raises():
    with pytest.raises(ValueError):
        evaluate_probs(np.array([0.5, 0.5]), ds([1, 0], [0, 0]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_metric_ranges(seed):
    rng = np.random.default_rng(seed)
    n = 30
    s = np.r_[0, 1, rng.integers(0, 2, n - 2)]
    data = ds(rng.integers(0, 2, n), s)
    r = evaluate_probs(rng.random(n), data)
    for v in (r.acc, r.dp, r.ddp, r.eo):
        assert 0.0 <= v <= 1.0


def test_record_keys():
    r = evaluate(np.zeros(2), ds([1, 0], [0, 1]))
    rec = r.to_record(3, 0.25)
    assert list(rec) == ["epoch", "acc", "dp", "ddp", "eo", "w2_weights", "group_pos_rates", "group_tprs"]


def test_posterior_predict_averages():
    ps = ParticleSet(np.array([[0.0, 0.0, 9.0], [100.0, 0.0, 9.0]]), n_params=2)
    np.testing.assert_allclose(posterior_predict(ps, [1.0]), (0.5 + 1 - 1e-12) / 2)


def test_weight_distance_padding_convention():
    # group a: 3 live weight slots, group b: 1 live slot + 2 padding zeros
    a = ParticleSet(np.array([[0.0, 0.0, 0.0, 0.0]]), n_params=1)
    b = ParticleSet(np.array([[0.0, 0.0, 0.0, 0.0]]), n_params=1, n_live=1)
    assert weight_distance(a, b) == 0.0
    a2 = a.with_z(np.array([[0.0, 50.0, 0.0, 0.0]]))
    # sigmoid(50) = 1 vs sigmoid(0) = 0.5 in one slot
    np.testing.assert_allclose(weight_distance(a2, b), 0.5, rtol=1e-12)
    np.testing.assert_allclose(effective_weights(b), [[0.5]])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_weight_distance_symmetric(seed):
    rng = np.random.default_rng(seed)
    a = ParticleSet(rng.normal(size=(4, 6)), n_params=2, n_live=3)
    b = ParticleSet(rng.normal(size=(4, 6)), n_params=2, n_live=4)
    np.testing.assert_allclose(weight_distance(a, b), weight_distance(b, a), rtol=1e-12)
    assert weight_distance(a, a) == 0.0
