import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from explainit.dataset import (Dataset, QualityClass, ScalerParams, bin_quality, fit_scaler, kfold_split,
                               load_csv, pairwise_distances, standardize, stratified_kfold_split, write_csv)
from explainit.errors import DataError
from explainit.oracles import naive_pairwise_distances

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def _write(tmp_path, text, name="t.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestLoadCsv:
    def test_basic(self, tmp_path):
        d = load_csv(_write(tmp_path, "a,b\n1,2\n3,4\n5,6\n"))
        assert (d.n, d.m) == (3, 2)
        assert d.columns == ("a", "b") or list(d.columns) == ["a", "b"]
        assert d.ground_truth is None

    def test_label_column_moves_to_ground_truth(self, tmp_path):
        d = load_csv(_write(tmp_path, "x,avgq_class,y\n1,LD,2\n3,HD,4\n"), "avgq_class")
        assert list(d.columns) == ["x", "y"]
        assert list(d.ground_truth) == ["LD", "HD"]
        np.testing.assert_array_equal(d.values, [[1, 2], [3, 4]])

    def test_nan_cell_names_row_and_column(self, tmp_path):
        with pytest.raises(DataError, match=r"row 2.*'b'"):
            load_csv(_write(tmp_path, "a,b\n1,2\n3,nan\n"))

    def test_non_numeric(self, tmp_path):
        with pytest.raises(DataError, match="'a'"):
            load_csv(_write(tmp_path, "a,b\nfoo,2\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(str(tmp_path / "absent.csv"))

    def test_duplicate_header(self, tmp_path):
        with pytest.raises(DataError, match="duplicate"):
            load_csv(_write(tmp_path, "a,a\n1,2\n"))

    def test_ragged_row(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(_write(tmp_path, "a,b\n1,2\n3\n"))

    def test_unknown_label_column(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(_write(tmp_path, "a,b\n1,2\n"), "label")

    def test_roundtrip_with_labels(self, tmp_path):
        d = Dataset(["p", "q"], np.array([[1.5, -2.0], [0.1, 3e5]]), ["SD", "HD"])
        path = str(tmp_path / "r.csv")
        write_csv(d, path, "label")
        back = load_csv(path, "label")
        np.testing.assert_array_equal(back.values, d.values)
        assert list(back.ground_truth) == ["SD", "HD"]


class TestDatasetInvariants:
    def test_rejects_non_finite(self):
        with pytest.raises(DataError):
            Dataset(["a"], np.array([[np.inf]]))

    def test_rejects_duplicate_or_empty_names(self):
        with pytest.raises(DataError):
            Dataset(["a", "a"], np.zeros((1, 2)))
        with pytest.raises(DataError):
            Dataset(["a", ""], np.zeros((1, 2)))

    def test_ground_truth_length(self):
        with pytest.raises(DataError):
            Dataset(["a"], np.zeros((2, 1)), ["LD"])


class TestStandardize:
    def test_two_points(self):
        z, _ = standardize(Dataset(["a"], np.array([[1.0], [3.0]])))
        np.testing.assert_allclose(z.values[:, 0], [-1, 1])

    def test_constant_column(self):
        z, sc = standardize(Dataset(["a", "b"], np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]])))
        np.testing.assert_array_equal(z.values[:, 0], 0)
        assert list(sc.degenerate) == [True, False]

    def test_needs_two_rows(self):
        with pytest.raises(DataError):
            standardize(Dataset(["a"], np.array([[1.0]])))

    @given(arrays(float, st.tuples(st.integers(2, 12), st.integers(1, 5)), elements=finite))
    def test_moments_and_inverse(self, X):
        z, sc = standardize(Dataset([f"c{j}" for j in range(X.shape[1])], X))
        ok = ~np.asarray(sc.degenerate)
        np.testing.assert_allclose(z.values[:, ok].mean(axis=0), 0, atol=1e-9)
        np.testing.assert_allclose(z.values[:, ok].var(axis=0), 1, atol=1e-9)
        back = sc.inverse_transform(z.values)
        np.testing.assert_allclose(back[:, ok], X[:, ok], rtol=1e-9, atol=1e-9 * (1 + np.abs(X).max()))

    def test_scaler_json_sidecar(self, tmp_path):
        sc = fit_scaler(np.array([[1.0, 2.0], [3.0, 2.0], [4.0, 2.0]]))
        path = str(tmp_path / "scaler.json")
        sc.to_json(path)
        back = ScalerParams.from_json(path)
        np.testing.assert_array_equal(back.mean, sc.mean)
        np.testing.assert_array_equal(back.std, sc.std)
        assert json.load(open(path))


class TestKfold:
    def test_singletons(self):
        folds = kfold_split(10, 10, 0)
        assert sorted(len(f) for f in folds) == [1] * 10

    def test_sizes(self):
        assert sorted(len(f) for f in kfold_split(10, 3, 5)) == [3, 3, 4]

    def test_deterministic(self):
        a, b = kfold_split(17, 4, 9), kfold_split(17, 4, 9)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    @pytest.mark.parametrize("n,k", [(3, 4), (5, 1)])
    def test_bad_k(self, n, k):
        with pytest.raises(DataError):
            kfold_split(n, k, 0)

    @given(st.integers(2, 60), st.data())
    def test_partition(self, n, data):
        k = data.draw(st.integers(2, n))
        folds = kfold_split(n, k, data.draw(st.integers(0, 2**31)))
        allidx = np.concatenate(folds)
        assert sorted(allidx.tolist()) == list(range(n))
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1

    @given(st.lists(st.integers(0, 3), min_size=8, max_size=60), st.integers(2, 4), st.integers(0, 99))
    def test_stratified_partition(self, labels, k, seed):
        folds = stratified_kfold_split(labels, k, seed)
        assert len(folds) == k
        assert sorted(np.concatenate(folds).tolist()) == list(range(len(labels)))
        labels = np.asarray(labels)
        for c in np.unique(labels):
            per_fold = [int((labels[f] == c).sum()) for f in folds]
            assert max(per_fold) - min(per_fold) <= 1


class TestDistances:
    def test_345(self, tiny):
        assert pairwise_distances(tiny)[0, 1] == 5.0

    def test_duplicates(self):
        D = pairwise_distances(Dataset(["a"], np.array([[2.0], [2.0], [7.0]])))
        assert D[0, 1] == 0 and D[1, 0] == 0

    def test_random_6x4_matches_loop_oracle(self):
        X = np.random.default_rng(11).normal(size=(6, 4))
        D = pairwise_distances(Dataset(list("abcd"), X))
        np.testing.assert_allclose(D, naive_pairwise_distances(X), atol=1e-12, rtol=0)

    @given(arrays(float, st.tuples(st.integers(1, 50), st.integers(1, 4)), elements=st.floats(-100, 100)))
    def test_matrix_invariants(self, X):
        D = pairwise_distances(Dataset([f"c{j}" for j in range(X.shape[1])], X))
        assert np.array_equal(D, D.T)
        assert np.all(np.diag(D) == 0) and np.all(D >= 0)
        np.testing.assert_allclose(D, naive_pairwise_distances(X), atol=1e-12 * (1 + np.abs(X).max()), rtol=1e-12)
        if len(X) >= 3:
            i, j, k = 0, 1, 2
            assert D[i, k] <= D[i, j] + D[j, k] + 1e-9


class TestQuality:
    @pytest.mark.parametrize("v,q", [(360, QualityClass.LD), (480, QualityClass.SD), (720, QualityClass.HD),
                                     (0, QualityClass.LD), (479.999, QualityClass.LD), (1080, QualityClass.HD)])
    def test_thresholds(self, v, q):
        assert bin_quality(v) is q

    def test_negative(self):
        with pytest.raises(DataError):
            bin_quality(-1)

    @given(st.floats(0, 1e4), st.floats(0, 1e4))
    def test_monotone(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert bin_quality(lo) <= bin_quality(hi)
