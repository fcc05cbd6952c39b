import numpy as np
import pytest

from dprob import DataError, Dataset, from_arrays, load_csv, split


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    return path


class TestLoadCsv:
    def test_ozone_fixture(self, ozone):
        assert ozone.n == 330
        assert ozone.p == 8
        assert ozone.names == ("vh", "wind", "humidity", "temp", "ibh", "dpg",
                               "ibt", "vis")
        assert np.all(ozone.X >= 0.0) and np.all(ozone.X <= 1.0)
        assert np.all(ozone.X.min(axis=0) == 0.0)
        assert np.all(ozone.X.max(axis=0) == 1.0)

    def test_already_unit_range_is_identity(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["y", "x"],
                         [[1.0, 0.0], [2.0, 0.25], [3.0, 1.0]])
        ds = load_csv(path, "y")
        np.testing.assert_array_equal(ds.X[:, 0], [0.0, 0.25, 1.0])
        assert ds.rescale_bounds == ((0.0, 1.0),)

    def test_affine_map(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["y", "x"],
                         [[1, 2], [2, 4], [3, 6]])
        ds = load_csv(path, "y")
        np.testing.assert_allclose(ds.X[:, 0], [0.0, 0.5, 1.0])

    def test_response_not_rescaled(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["y", "x"],
                         [[10, 2], [20, 4], [30, 6]])
        ds = load_csv(path, "y")
        np.testing.assert_array_equal(ds.y, [10.0, 20.0, 30.0])

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot open"):
            load_csv(tmp_path / "nope.csv", "y")

    def test_unparseable_cell_reports_location(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["y", "x"],
                         [[1, 2], [2, "oops"], [3, 6]])
        with pytest.raises(DataError, match=r"row 2, column 'x'"):
            load_csv(path, "y")

    def test_non_finite_cell_rejected(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["y", "x"],
                         [[1, 2], [2, "inf"], [3, 6]])
        with pytest.raises(DataError, match="not finite"):
            load_csv(path, "y")

    def test_constant_column_rejected(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["y", "x"],
                         [[1, 5], [2, 5], [3, 5]])
        with pytest.raises(DataError, match="constant"):
            load_csv(path, "y")

    def test_missing_response_column(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["a", "x"], [[1, 2], [2, 4], [3, 6]])
        with pytest.raises(DataError, match="response column"):
            load_csv(path, "y")

    def test_quoted_headers(self, tmp_path):
        path = tmp_path / "t.csv"
        with open(path, "w") as fh:
            fh.write('"y","x"\n1,2\n2,4\n3,6\n')
        ds = load_csv(path, "y")
        assert ds.names == ("x",)

    def test_roundtrip_rescaling(self, tmp_path):
        rng = np.random.default_rng(3)
        raw = rng.normal(50.0, 12.0, size=(25, 3))
        rows = np.column_stack([rng.normal(size=25), raw])
        path = write_csv(tmp_path / "t.csv", ["y", "a", "b", "c"], rows.tolist())
        ds = load_csv(path, "y")
        recovered = ds.raw_covariates()
        np.testing.assert_allclose(recovered, raw, rtol=1e-12)

    def test_debug_json(self, ozone):
        import json
        d = json.loads(ozone.to_debug_json())
        assert d["n"] == 330 and d["p"] == 8
        assert len(d["rescale_bounds"]) == 8


class TestDatasetInvariants:
    def test_too_few_rows(self):
        with pytest.raises(DataError):
            from_arrays(np.zeros((2, 1)) + [[0.1], [0.9]], [1.0, 2.0])

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            Dataset(np.array([[0.1], [np.nan], [0.9]]), np.ones(3), ("x",),
                    ((0.0, 1.0),))

    def test_degenerate_bounds_rejected(self):
        with pytest.raises(DataError, match="degenerate"):
            Dataset(np.array([[0.1], [0.5], [0.9]]), np.ones(3), ("x",),
                    ((1.0, 1.0),))

    def test_immutable(self, toy_dataset):
        with pytest.raises(ValueError):
            toy_dataset.X[0, 0] = 2.0


class TestSplit:
    def test_ozone_half(self, ozone):
        plan = split(ozone, 0.5, seed=11)
        assert plan.train_indices.size == 165
        assert plan.test_indices.size == 165

    def test_single_test_row(self, toy_dataset):
        n = toy_dataset.n
        plan = split(toy_dataset, 1.0 - 1.0 / n, seed=0)
        assert plan.test_indices.size == 1

    def test_deterministic(self, ozone):
        a = split(ozone, 0.3, seed=42)
        b = split(ozone, 0.3, seed=42)
        np.testing.assert_array_equal(a.train_indices, b.train_indices)
        np.testing.assert_array_equal(a.test_indices, b.test_indices)

    def test_partition_property_randomized(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(10, 500))
            X = np.linspace(0.0, 1.0, n)[:, None]
            ds = from_arrays(X, rng.normal(size=n))
            frac = float(rng.uniform(0.15, 0.9))
            plan = split(ds, frac, seed=int(rng.integers(1 << 30)))
            merged = np.sort(np.concatenate([plan.train_indices, plan.test_indices]))
            np.testing.assert_array_equal(merged, np.arange(n))
            assert plan.train_indices.size == int(round(frac * n))

    def test_train_too_small(self):
        rng = np.random.default_rng(1)
        ds = from_arrays(rng.uniform(size=(12, 6)), rng.normal(size=12))
        with pytest.raises(DataError, match="too small"):
            split(ds, 0.25, seed=0)

    def test_fraction_bounds(self, toy_dataset):
        with pytest.raises(ValueError):
            split(toy_dataset, 1.0, seed=0)
