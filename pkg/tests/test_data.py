import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairbads.data import (DataError, Dataset, MetaSet, carve_meta, inject_label_bias,
                           load_dataset, make_synthetic, write_dataset)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_three_rows(tmp_path):
    p = write(tmp_path, "f0,f1,y,s\n0.1,0.2,1,0\n0.3,0.4,0,0\n-1,2,1,1\n")
    ds = load_dataset(p)
    assert ds.d == 2
    assert ds.group_sizes == [2, 1]
    assert ds.n_max == 2
    np.testing.assert_array_equal(ds.y, [1, 0, 1])
    np.testing.assert_array_equal(ds.y_clean, ds.y)
    np.testing.assert_allclose(ds.X[2], [-1, 2])


def test_load_header_only(tmp_path):
    with pytest.raises(DataError, match="no examples"):
        load_dataset(write(tmp_path, "f0,f1,y,s\n"))


def test_load_bad_label_cites_row(tmp_path):
    rows = "".join(f"{i},0,{1 if i != 3 else 2},0\n" for i in range(6))
    with pytest.raises(DataError, match="row 5"):
        load_dataset(write(tmp_path, "f0,f1,y,s\n" + rows))


@pytest.mark.parametrize("text, msg", [
    ("f0,y\n1,0\n", "missing column 's'"),
    ("f0,y,s\n1,0\n", "row 2"),
    ("f0,y,s\nx,0,0\n", "non-numeric"),
    ("f0,y,s\n1,0,-1\n", "negative"),
])
def test_load_errors(tmp_path, text, msg):
    with pytest.raises(DataError, match=msg):
        load_dataset(write(tmp_path, text))


def test_crlf_and_roundtrip(tmp_path):
    p = write(tmp_path, "f0,y,s\r\n0.5,1,0\r\n1.5,0,1\r\n")
    ds = load_dataset(p)
    assert len(ds) == 2
    out = tmp_path / "out.csv"
    write_dataset(ds, out)
    back = load_dataset(out)
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.s, ds.s)


def test_dataset_is_read_only():
    ds = Dataset(np.zeros((2, 1)), [0, 1], [0, 1], [0, 1])
    with pytest.raises(ValueError):
        ds.y[0] = 1


def test_metaset_soft_labels_validated():
    MetaSet(np.zeros((2, 1)), [0, 1], [[0.3, 0.7], [1.0, 0.0]])
    with pytest.raises(DataError):
        MetaSet(np.zeros((1, 1)), [0], [[0.3, 0.6]])


def _biased_fixture(n=400, seed=0):
    return make_synthetic(n, 3, 0.5, seed)


def test_bias_zero_is_identity():
    ds = _biased_fixture()
    out = inject_label_bias(ds, 0.0, 1, 7)
    np.testing.assert_array_equal(out.y, ds.y)


def test_bias_one_flips_all_positives():
    ds = _biased_fixture()
    out = inject_label_bias(ds, 1.0, 1, 7)
    g1 = ds.s == 1
    assert out.y[g1].sum() == 0
    np.testing.assert_array_equal(out.y[~g1], ds.y[~g1])


def test_bias_flip_count_binomial():
    # 1000 clean positives in the target group
    n = 1000
    ds = Dataset(np.zeros((n, 1)), np.ones(n, int), np.ones(n, int), np.ones(n, int), n_groups=2)
    flipped = n - inject_label_bias(ds, 0.4, 1, 3).y.sum()
    sigma = np.sqrt(n * 0.4 * 0.6)
    assert abs(flipped - 400) <= 3 * sigma


@settings(max_examples=40, deadline=None)
@given(rho=st.floats(0, 1), seed=st.integers(0, 10_000), target=st.integers(0, 1))
def test_bias_invariants(rho, seed, target):
    ds = _biased_fixture(120, seed % 7)
    out = inject_label_bias(ds, rho, target, seed)
    np.testing.assert_array_equal(out.X, ds.X)
    np.testing.assert_array_equal(out.s, ds.s)
    np.testing.assert_array_equal(out.y_clean, ds.y_clean)
    other = ds.s != target
    np.testing.assert_array_equal(out.y[other], ds.y[other])
    # one-sided: only 1 -> 0
    assert np.all(out.y <= ds.y)
    assert np.array_equal(out.y, inject_label_bias(ds, rho, target, seed).y)


def test_symmetric_bias_flips_negatives_too():
    ds = _biased_fixture()
    out = inject_label_bias(ds, 1.0, 0, 1, symmetric=True)
    g0 = ds.s == 0
    np.testing.assert_array_equal(out.y[g0], 1 - ds.y_clean[g0])


def test_carve_meta_sizes():
    ds = make_synthetic(200, 2, 0.3, 0)
    train, meta = carve_meta(ds, 0.01, 5)
    assert (len(train), len(meta)) == (198, 2)
    ds10 = make_synthetic(10, 2, 0.3, 0)
    train, meta = carve_meta(ds10, 0.5, 5)
    assert (len(train), len(meta)) == (5, 5)


def test_carve_meta_empty_raises():
    with pytest.raises(ValueError, match="empty meta"):
        carve_meta(make_synthetic(20, 2, 0.3, 0), 0.01, 0)


@settings(max_examples=30, deadline=None)
@given(frac=st.floats(0.05, 0.95), seed=st.integers(0, 1000))
def test_carve_meta_partitions(frac, seed):
    ds = make_synthetic(60, 2, 0.3, 1)
    ds = Dataset(ds.X, ds.y, ds.s, ds.y_clean, 2)
    # tag each row with its index in feature 0 to recover the split
    tagged = Dataset(np.column_stack([np.arange(60.0), ds.X]), ds.y, ds.s, ds.y_clean, 2)
    biased = inject_label_bias(tagged, 0.7, 1, seed)
    train, meta = carve_meta(biased, frac, seed)
    ids = np.concatenate([train.X[:, 0], meta.X[:, 0]])
    np.testing.assert_array_equal(np.sort(ids), np.arange(60.0))
    # meta labels are the clean ones
    np.testing.assert_array_equal(meta.y, tagged.y_clean[meta.X[:, 0].astype(int)])
    assert sum(train.group_sizes) == len(train)
    t2, m2 = carve_meta(biased, frac, seed)
    np.testing.assert_array_equal(t2.X, train.X)


def test_make_synthetic_group_split():
    ds = make_synthetic(2000, 5, 0.3, 4)
    assert ds.group_sizes == [1400, 600]
    assert ds.d == 5
    np.testing.assert_array_equal(ds.y, ds.y_clean)
