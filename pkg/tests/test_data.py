import math

import numpy as np
import pytest

from votebound import data as d
from votebound.errors import DataFormatError, DomainError
from votebound.voters import Stump


class TestTwoMoons:
    def test_shape_and_balance(self, rng):
        ds = d.gen_two_moons(1001, 0.05, rng)
        assert ds.features.shape == (1001, 2)
        counts = np.bincount(ds.labels)
        assert abs(counts[0] - counts[1]) <= 1

    def test_noise_free_points_lie_on_arcs(self):
        ds = d.gen_two_moons(200, 0.0, np.random.default_rng(1))
        # undo the affine map onto [-2, 2]^2 and check the arc radii
        x = (ds.features[:, 0] + 2.0) * 3.0 / 4.0 - 1.0
        y = (ds.features[:, 1] + 2.0) * 1.5 / 4.0 - 0.5
        upper = np.hypot(x, y)
        lower = np.hypot(x - 1.0, y - 0.5)
        on_arc = np.where(ds.labels == 0, np.abs(upper - 1) < 1e-9, np.abs(lower - 1) < 1e-9)
        assert on_arc.all()

    def test_spans_square(self, rng):
        ds = d.gen_two_moons(5000, 0.0, rng)
        assert ds.features.min() >= -2.0 - 1e-9 and ds.features.max() <= 2.0 + 1e-9
        assert ds.features.min() < -1.9 and ds.features.max() > 1.9

    def test_determinism(self):
        a = d.gen_two_moons(50, 0.05, np.random.default_rng(3))
        b = d.gen_two_moons(50, 0.05, np.random.default_rng(3))
        assert np.array_equal(a.features, b.features)

    def test_validation(self, rng):
        with pytest.raises(DomainError):
            d.gen_two_moons(1, rng=rng)
        with pytest.raises(DomainError):
            d.gen_two_moons(10, -0.1, rng)


class TestTwoGaussians:
    def test_class_means(self):
        ds = d.gen_two_gaussians(100_000, np.random.default_rng(0))
        m0 = ds.features[ds.labels == 0].mean(axis=0)
        m1 = ds.features[ds.labels == 1].mean(axis=0)
        assert np.allclose(m0, [-1, 0], atol=0.02)
        assert np.allclose(m1, [1, 0], atol=0.02)

    def test_first_axis_stump_is_strong(self):
        ds = d.gen_two_gaussians(100_000, np.random.default_rng(2))
        acc = (Stump(0, 0.0, +1).predict(ds.features) == ds.labels).mean()
        assert acc > 0.99

    def test_determinism(self):
        a = d.gen_two_gaussians(60, np.random.default_rng(5))
        b = d.gen_two_gaussians(60, np.random.default_rng(5))
        assert np.array_equal(a.features, b.features)


class TestInputNoise:
    def test_zero_variance_identity(self, rng):
        ds = d.gen_two_moons(40, 0.05, rng)
        noisy = d.add_input_noise(ds, 0.0, rng)
        assert np.array_equal(noisy.features, ds.features)

    def test_variance_matches(self, rng):
        ds = d.Dataset(np.zeros((200_000, 1)), np.zeros(200_000, dtype=np.int64), 1)
        noisy = d.add_input_noise(ds, 0.7, rng)
        var = noisy.features.var()
        se = 0.7 * math.sqrt(2 / 200_000)
        assert abs(var - 0.7) < 3 * se


class TestCsvLoader:
    def test_numeric_roundtrip(self, tmp_path, rng):
        path = tmp_path / "data.csv"
        X = rng.normal(0, 1, (20, 3)).round(6)
        y = rng.integers(0, 2, 20)
        rows = [",".join(map(str, list(x) + [int(lab)])) for x, lab in zip(X, y)]
        path.write_text("\n".join(rows) + "\n")
        ds = d.load_tabular(path, "csv")
        assert np.allclose(ds.features, X)
        assert np.array_equal(ds.labels, y)
        assert ds.class_count == 2

    def test_header_and_label_column(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("label,f1,f2\n1,0.5,2.0\n0,1.5,3.0\n")
        ds = d.load_csv(path, label_col=0, has_header=True)
        assert ds.features.shape == (2, 2)
        assert ds.labels.tolist() == [1, 0]

    def test_categorical_encoding(self, tmp_path):
        path = tmp_path / "cat.csv"
        path.write_text("red,1.0,a\nblue,2.0,b\nred,3.0,a\ngreen,4.0,b\n")
        ds = d.load_csv(path, label_col=-1)
        # first-appearance ordinal codes: red=0, blue=1, green=2
        assert ds.features[:, 0].tolist() == [0.0, 1.0, 0.0, 2.0]
        assert ds.class_count == 2

    def test_unseen_category_gets_reserved_code(self, tmp_path):
        train_path = tmp_path / "train.csv"
        train_path.write_text("red,0\nblue,1\n")
        train = d.load_csv(train_path, label_col=-1)
        test_path = tmp_path / "test.csv"
        test_path.write_text("red,0\npurple,1\n")
        test = d.load_csv(test_path, label_col=-1, vocabs=train.vocabs)
        assert test.features[0, 0] == 0.0
        assert test.features[1, 0] == 2.0  # len(vocab) is the reserved code

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0,0\n1.0,0\n")
        with pytest.raises(DataFormatError) as exc:
            d.load_csv(path)
        assert exc.value.line_number == 2


class TestLibsvmLoader:
    def test_hand_written_file(self, tmp_path):
        path = tmp_path / "data.libsvm"
        path.write_text("+1 1:0.5 3:1.5\n-1 2:2.0\n+1 1:1.0 2:1.0 3:1.0\n")
        ds = d.load_tabular(path, "libsvm")
        expected = np.array([[0.5, 0.0, 1.5], [0.0, 2.0, 0.0], [1.0, 1.0, 1.0]])
        assert np.allclose(ds.features, expected)
        assert ds.labels.tolist() == [1, 0, 1]  # sorted classes: -1 -> 0, +1 -> 1

    def test_malformed_entries(self, tmp_path):
        path = tmp_path / "bad.libsvm"
        path.write_text("+1 1:0.5\n-1 nonsense\n")
        with pytest.raises(DataFormatError) as exc:
            d.load_libsvm(path)
        assert exc.value.line_number == 2

    def test_unknown_format(self, tmp_path):
        with pytest.raises(DomainError):
            d.load_tabular(tmp_path / "x", "parquet")


class TestSplitAndPreprocess:
    def test_split_partition_sizes(self, rng):
        ds = d.gen_two_moons(101, 0.05, rng)
        train, test = d.split_dataset(ds, 0.2, rng)
        assert train.n == math.ceil(0.8 * 101)
        assert test.n == 101 - train.n
        combined = np.vstack([train.features, test.features])
        assert {tuple(row) for row in combined} == {tuple(row) for row in ds.features}

    def test_train_columns_standardized(self, rng):
        ds = d.gen_two_gaussians(500, rng)
        train, test = d.split_dataset(ds, 0.2, rng)
        stats = d.fit_train_stats(train)
        ztrain = d.preprocess(train, stats)
        assert np.allclose(ztrain.features.mean(axis=0), 0.0, atol=1e-10)
        assert np.allclose(ztrain.features.var(axis=0), 1.0, atol=1e-10)

    def test_test_uses_train_statistics_only(self, rng):
        ds = d.gen_two_gaussians(500, rng)
        train, test = d.split_dataset(ds, 0.2, rng)
        stats = d.fit_train_stats(train)
        ztest = d.preprocess(test, stats)
        # test columns are shifted by the train statistics, not their own
        assert not np.allclose(ztest.features.mean(axis=0), 0.0, atol=1e-6)

    def test_constant_column_guard(self):
        ds = d.Dataset(np.ones((10, 2)), np.zeros(10, dtype=np.int64), 1)
        stats = d.fit_train_stats(ds)
        z = d.preprocess(ds, stats)
        assert np.all(np.isfinite(z.features))

    def test_dataset_validation(self):
        with pytest.raises(DomainError):
            d.Dataset(np.array([[np.nan, 1.0]]), np.array([0]), 2)
        with pytest.raises(DomainError):
            d.Dataset(np.ones((2, 2)), np.array([0, 5]), 2)
