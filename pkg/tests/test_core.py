import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqfusion.core import (
    Dataset,
    Standardizer,
    derive_seed,
    make_folds,
    rng_for,
    spatialize,
    spatialize_all,
    split_ab,
    split_train_test,
    standardize,
    staticize,
    staticize_all,
)
from seqfusion.exceptions import DimensionError, StratificationError

PN = ("POS", "NEG")


def make_dataset(n_pos, n_neg, n_s=2, n_d=1, l_d=3, seed=0):
    rng = np.random.default_rng(seed)
    n = n_pos + n_neg
    labels = np.array(["POS"] * n_pos + ["NEG"] * n_neg)
    return Dataset(rng.normal(size=(n, n_s)), rng.normal(size=(n, n_d, l_d)), labels, PN)


class TestSpatialize:
    def test_single_row_is_identity(self):
        assert spatialize([[1, 2, 3]]).tolist() == [1, 2, 3]

    def test_feature_major(self):
        assert spatialize([[1, 2], [3, 4]]).tolist() == [1, 2, 3, 4]

    def test_univariate_length(self):
        assert spatialize(np.zeros((1, 500))).shape == (500,)

    @given(st.integers(1, 4), st.integers(1, 6), st.integers(0, 2**16))
    def test_reshape_inverts(self, n_d, l_d, seed):
        m = np.random.default_rng(seed).normal(size=(n_d, l_d))
        assert np.array_equal(spatialize(m).reshape(n_d, l_d), m)

    def test_batch_matches_single(self):
        d = np.arange(24.0).reshape(2, 3, 4)
        out = spatialize_all(d)
        assert np.array_equal(out[1], spatialize(d[1]))


class TestStaticize:
    def test_constant_replication(self):
        assert staticize([5.0], 3).tolist() == [[5, 5, 5]]
        assert staticize([1.5, -2.0], 2).tolist() == [[1.5, 1.5], [-2, -2]]

    def test_empty(self):
        assert staticize([], 4).shape == (0, 4)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=5), st.integers(1, 8))
    def test_zero_variance_along_time(self, values, l_d):
        out = staticize(values, l_d)
        assert np.all(out == out[:, :1])

    def test_batch(self):
        out = staticize_all(np.array([[1.0, 2.0], [3.0, 4.0]]), 3)
        assert out.shape == (2, 2, 3)
        assert out[1, 0, 2] == 3.0


class TestDataset:
    def test_shape_validation(self):
        with pytest.raises(DimensionError):
            Dataset(np.zeros((3, 2)), np.zeros((2, 1, 3)), np.array(["POS", "NEG", "POS"]), PN)

    def test_rejects_non_finite(self):
        s = np.zeros((2, 1))
        s[0, 0] = np.nan
        with pytest.raises(ValueError):
            Dataset(s, np.zeros((2, 1, 3)), np.array(["POS", "NEG"]), PN)

    def test_rejects_unknown_label(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 1)), np.zeros((2, 1, 3)), np.array(["POS", "MAYBE"]), PN)

    def test_subset_keeps_ids(self):
        d = make_dataset(3, 3)
        sub = d.subset([4, 1])
        assert sub.sample_ids.tolist() == [4, 1]
        assert np.array_equal(sub.static, d.static[[4, 1]])

    def test_fingerprint_changes_with_data(self):
        d = make_dataset(3, 3)
        assert d.fingerprint() == make_dataset(3, 3).fingerprint()
        assert d.fingerprint() != d.with_labels(d.labels[::-1]).fingerprint()


def _check_partition(plan, n):
    parts = [set(plan.part(i).tolist()) for i in range(plan.n_parts)]
    assert set().union(*parts) == set(range(n))
    assert sum(len(p) for p in parts) == n


class TestSplits:
    def test_even_ab(self):
        d = make_dataset(50, 50)
        plan = split_ab(d, seed=7)
        assert plan.sizes() == [50, 50]
        for i in range(2):
            assert d.is_pos[plan.part(i)].sum() == 25

    def test_odd_ab_gives_a_extra(self):
        d = make_dataset(51, 50)
        sizes = split_ab(d, seed=1).sizes()
        assert sizes == [51, 50]

    def test_deterministic(self):
        d = make_dataset(20, 13)
        assert np.array_equal(split_ab(d, 3).assignments, split_ab(d, 3).assignments)
        assert not np.array_equal(split_ab(d, 3).assignments, split_ab(d, 4).assignments)

    def test_folds_even(self):
        assert make_folds(make_dataset(5, 5), 5, 0).sizes() == [2] * 5

    def test_folds_remainder(self):
        assert sorted(make_folds(make_dataset(6, 5), 5, 0).sizes()) == [2, 2, 2, 2, 3]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(5, 40), st.integers(5, 40), st.integers(2, 5), st.integers(0, 1000))
    def test_folds_partition_and_balance(self, n_pos, n_neg, k, seed):
        d = make_dataset(n_pos, n_neg)
        plan = make_folds(d, k, seed)
        _check_partition(plan, d.n_samples)
        sizes = plan.sizes()
        assert max(sizes) - min(sizes) <= 1
        per_class = [d.is_pos[plan.part(i)].sum() for i in range(k)]
        assert max(per_class) - min(per_class) <= 1

    def test_class_too_small(self):
        with pytest.raises(StratificationError):
            split_ab(make_dataset(1, 10), 0)
        with pytest.raises(StratificationError):
            make_folds(make_dataset(3, 10), 5, 0)

    def test_train_test_fraction(self):
        d = make_dataset(40, 60)
        plan = split_train_test(d, 0.5, 0)
        assert plan.sizes() == [50, 50]
        assert d.is_pos[plan.part(1)].sum() == 20


class TestStandardizer:
    def test_zero_mean_on_fit_partition(self):
        d = make_dataset(10, 10, n_s=3)
        out = standardize(Standardizer.fit(d), d)
        assert np.all(np.abs(out.static.mean(axis=0)) < 1e-9)

    def test_constant_column_gives_zeros(self):
        d = make_dataset(4, 4)
        d = d.with_features(static=np.full((8, 2), 3.0))
        out = standardize(Standardizer.fit(d), d)
        assert np.all(out.static == 0)

    def test_uses_fit_statistics(self):
        # fit on {1, 3}: mean 2, population std 1; applied to 5 gives 3
        x = Dataset(np.array([[1.0], [3.0]]), np.zeros((2, 1, 2)), np.array(["POS", "NEG"]), PN)
        y = Dataset(np.array([[5.0]]), np.zeros((1, 1, 2)), np.array(["POS"]), PN)
        assert standardize(Standardizer.fit(x), y).static[0, 0] == pytest.approx(3.0)

    @given(st.floats(0.1, 10), st.floats(-10, 10))
    def test_affine(self, a, b):
        d = make_dataset(5, 5, n_s=2)
        stats = Standardizer.fit(d)
        z1 = stats.transform_static(d.static)
        z2 = stats.transform_static(a * d.static + b)
        # z2 = a*z1 + (a-1)*mean/std + b/std, a fixed affine map of z1
        expected = a * z1 + ((a - 1) * stats.static_mean + b) / stats.static_std
        assert np.allclose(z2, expected)


class TestSeeds:
    def test_named_streams_differ(self):
        assert derive_seed(0, "hmm") != derive_seed(0, "lstm")
        assert derive_seed(0, "hmm") == derive_seed(0, "hmm")

    def test_rng_reproducible(self):
        assert rng_for(5, "synth", 3).random() == rng_for(5, "synth", 3).random()
