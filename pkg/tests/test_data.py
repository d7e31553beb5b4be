import numpy as np
import pytest

from binconf.data import (
    DataError,
    Dataset,
    GENERATORS,
    SplitSpec,
    gen_bimodal,
    gen_heteroscedastic,
    gen_lei_fork,
    gen_lognormal,
    lei_fork_gap,
    lei_fork_mean,
    lei_fork_variance,
    load_csv,
    split,
    standardize,
)


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_generators_are_deterministic_and_finite(name):
    a, b = GENERATORS[name](200, 3), GENERATORS[name](200, 3)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert np.all(np.isfinite(a.labels))
    assert not np.array_equal(a.labels, GENERATORS[name](200, 4).labels)


def test_heteroscedastic_variance():
    ds = gen_heteroscedastic(10_000, 0)
    x, y = ds.features[:, 0], ds.labels
    band = (np.abs(x) >= 0.9) & (np.abs(x) <= 1.1)
    assert np.var(y[band]) == pytest.approx(1.0, rel=0.2)
    # zero scale at x = 0 gives y = 0
    assert np.all(np.abs(y[np.abs(x) < 1e-4]) < 1e-2)


def test_bimodal_shape():
    ds = gen_bimodal(10_000, 0)
    y = ds.labels
    hist, edges = np.histogram(y, bins=40)
    centers = (edges[:-1] + edges[1:]) / 2
    peaks = [centers[i] for i in range(1, 39) if hist[i] >= hist[i - 1] and hist[i] > hist[i + 1] and hist[i] > 100]
    assert len(peaks) == 2
    assert peaks[0] == pytest.approx(-1, abs=0.15) and peaks[1] == pytest.approx(1, abs=0.15)
    assert abs(y.mean()) < 3 * y.std() / np.sqrt(len(y))
    assert ds.n_features == 4
    with pytest.raises(DataError):
        gen_bimodal(11, 0)


def test_lei_fork_components():
    assert lei_fork_mean(-1.0) == 0.0 and lei_fork_gap(-1.0) == 0.0
    assert lei_fork_variance(-1.0) == pytest.approx(1.25)
    assert lei_fork_mean(0.5) == pytest.approx(0.375)
    assert lei_fork_gap(0.5) == pytest.approx(4.0)
    assert lei_fork_mean(0.5) - lei_fork_gap(0.5) == pytest.approx(-3.625)
    assert lei_fork_mean(0.5) + lei_fork_gap(0.5) == pytest.approx(4.375)
    assert np.all(lei_fork_gap(np.linspace(-1.5, -0.5001, 50)) == 0)


def test_lei_fork_unimodal_branch_and_variance():
    ds = gen_lei_fork(200_000, 1)
    x, y = ds.features[:, 0], ds.labels
    assert x.min() >= -1.5 and x.max() <= 1.5
    near = np.abs(x + 1) < 0.02
    resid = y[near] - lei_fork_mean(x[near])
    assert np.var(resid) == pytest.approx(1.25, rel=0.1)
    ref = np.var(gen_lei_fork(1_000_000, 99).labels)
    assert np.var(gen_lei_fork(10_000, 5).labels) == pytest.approx(ref, rel=0.25)


def test_lognormal():
    ds = gen_lognormal(10_000, 0)
    assert np.all(ds.labels > 0)
    assert np.median(ds.labels) == pytest.approx(1.0, rel=0.1)
    for j in range(ds.n_features):
        r = np.corrcoef(ds.features[:, j], ds.labels)[0, 1]
        assert abs(r) < 3 / np.sqrt(len(ds))


def test_load_csv(tmp_path):
    p = tmp_path / "toy.csv"
    p.write_text("a,b,y\n1,2,3\n4,5,6\n7,8,9\n")
    ds = load_csv(p, "y")
    assert ds.features.shape == (3, 2)
    np.testing.assert_array_equal(ds.labels, [3, 6, 9])
    with pytest.raises(DataError, match="'z'"):
        load_csv(p, "z")
    with pytest.raises(DataError, match="not found"):
        load_csv(tmp_path / "missing.csv", "y")


@pytest.mark.parametrize("cell", ["NaN", "", "abc", "inf"])
def test_load_csv_rejects_bad_cells(tmp_path, cell):
    p = tmp_path / "bad.csv"
    p.write_text(f"a,y\n1,2\n{cell},3\n")
    with pytest.raises(DataError, match="row 3"):
        load_csv(p, "y")


def test_standardize_uses_train_statistics(rng):
    train = Dataset(rng.normal(3, 2, size=(50, 2)), rng.normal(-1, 4, 50))
    test = Dataset(rng.normal(size=(10, 2)), rng.normal(size=10))
    st, te = standardize(train, test)
    assert st.labels.mean() == pytest.approx(0, abs=1e-9)
    assert st.labels.var() == pytest.approx(1, abs=1e-9)
    np.testing.assert_allclose(st.features.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(te.labels, (test.labels - train.labels.mean()) / train.labels.std(), rtol=1e-12)
    np.testing.assert_allclose(st.label_scaler.inverse(st.labels[:, None])[:, 0], train.labels, rtol=1e-9)
    np.testing.assert_allclose(st.feature_scaler.inverse(st.features), train.features, rtol=1e-9)


def test_standardize_constant_column():
    ds = Dataset(np.column_stack([np.full(5, 2.0), np.arange(5.0)]), np.arange(5.0))
    with pytest.warns(RuntimeWarning, match="constant"):
        out = standardize(ds)
    assert out.feature_scaler.scale[0] == 1.0
    np.testing.assert_array_equal(out.features[:, 0], 0.0)


def test_standardize_can_keep_labels():
    ds = gen_lei_fork(100, 0)
    out = standardize(ds, labels=False)
    np.testing.assert_array_equal(out.labels, ds.labels)


def test_split_sizes_and_partition():
    ds = Dataset(np.arange(100.0)[:, None], np.arange(100.0))
    parts = split(ds, SplitSpec((0.5, 0.25, 0.25), 7))
    assert [len(p) for p in parts] == [50, 25, 25]
    rows = np.concatenate([p.labels for p in parts])
    np.testing.assert_array_equal(np.sort(rows), np.arange(100.0))
    again = split(ds, SplitSpec((0.5, 0.25, 0.25), 7))
    for a, b in zip(parts, again):
        np.testing.assert_array_equal(a.labels, b.labels)


def test_split_errors():
    with pytest.raises(DataError):
        SplitSpec((0.5, 0.6), 0)
    with pytest.raises(DataError):
        SplitSpec((1.0, 0.0), 0)
    with pytest.raises(DataError, match="empty"):
        split(Dataset(np.zeros((2, 1)), np.zeros(2)), SplitSpec((0.5, 0.25, 0.25), 0))
