import numpy as np
import pytest

import advbundle as ab
from advbundle.errors import ContractError, DataError


class TestSynth:
    def test_balanced_labels(self):
        ds = ab.synth_dataset(4, 2, 2, seed=0)
        labels = ds.labels()
        assert (labels == 0).sum() == 2
        assert (labels == 1).sum() == 2

    @pytest.mark.parametrize("seed", [0, 1, 99, 2024])
    def test_features_in_unit_interval(self, seed):
        ds = ab.synth_dataset(50, 3, 4, seed=seed)
        X = ds.features_matrix()
        assert X.min() >= 0.0 and X.max() <= 1.0

    def test_deterministic_per_seed(self):
        a = ab.synth_dataset(30, 2, 2, seed=5)
        b = ab.synth_dataset(30, 2, 2, seed=5)
        assert np.array_equal(a.features_matrix(), b.features_matrix())
        c = ab.synth_dataset(30, 2, 2, seed=6)
        assert not np.array_equal(a.features_matrix(), c.features_matrix())

    def test_separable_blobs_train_well(self):
        ds = ab.synth_dataset(2000, 2, 2, seed=1)
        # nearest-class-mean oracle shows the classes are separable
        X, y = ds.features_matrix(), ds.labels()
        means = np.stack([X[y == c].mean(axis=0) for c in range(2)])
        nearest = np.argmin(
            ((X[:, None, :] - means[None, :, :]) ** 2).sum(axis=2), axis=1)
        assert np.mean(nearest != y) <= 0.05
        m = ab.train(ds, "softmax_linear",
                     ab.TrainParams(learning_rate=0.1, epochs=60, batch_size=64, seed=0))
        err = np.mean([ab.predict(m, ex.features).predicted_class != ex.label
                       for ex in ds.examples])
        assert err <= 0.05

    def test_one_dimensional_supported(self):
        ds = ab.synth_dataset(20, 1, 2, seed=0)
        assert ds.dimension == 1

    @pytest.mark.parametrize("n,d,k", [(1, 2, 2), (5, 0, 2), (5, 2, 1)])
    def test_invalid_sizes_rejected(self, n, d, k):
        with pytest.raises(ContractError):
            ab.synth_dataset(n, d, k, seed=0)


class TestCsv:
    def test_round_trip(self, tmp_path):
        ds = ab.synth_dataset(25, 3, 3, seed=2)
        path = tmp_path / "data.csv"
        ab.save_dataset_csv(path, ds)
        loaded = ab.load_dataset_csv(path)
        assert loaded.num_classes == ds.num_classes
        assert np.array_equal(loaded.features_matrix(), ds.features_matrix())
        assert np.array_equal(loaded.labels(), ds.labels())

    def test_header_is_optional(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("0.1,0.2,0\n0.9,0.8,1\n")
        ds = ab.load_dataset_csv(path)
        assert len(ds) == 2
        assert ds.dimension == 2

    def test_out_of_range_feature_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.1,1.2,0\n")
        with pytest.raises(DataError):
            ab.load_dataset_csv(path)

    def test_non_integer_label_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.1,0.2,0.5\n")
        with pytest.raises(DataError):
            ab.load_dataset_csv(path)

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.1,0.2,0\n0.1,0\n")
        with pytest.raises(DataError):
            ab.load_dataset_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            ab.load_dataset_csv(tmp_path / "nope.csv")

    def test_single_class_file_still_has_two_classes(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("0.1,0.2,0\n0.3,0.4,0\n")
        assert ab.load_dataset_csv(path).num_classes == 2


class TestTypes:
    def test_example_bounds_enforced(self):
        with pytest.raises(ContractError):
            ab.Example(np.array([0.5, 1.5]), 0)
        with pytest.raises(ContractError):
            ab.Example(np.array([np.nan, 0.5]), 0)

    def test_dataset_checks_dimensions_and_labels(self):
        good = ab.Example(np.array([0.5]), 0)
        with pytest.raises(ContractError):
            ab.Dataset([good, ab.Example(np.array([0.5, 0.5]), 0)], num_classes=2)
        with pytest.raises(ContractError):
            ab.Dataset([ab.Example(np.array([0.5]), 3)], num_classes=2)
        with pytest.raises(ContractError):
            ab.Dataset([good], num_classes=1)
