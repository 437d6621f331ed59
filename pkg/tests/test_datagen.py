import numpy as np
import pytest

from mamlflow.datagen import (
    ClassificationSuiteSpec,
    CsvFormatError,
    CsvTaskSpec,
    RegressionSuiteSpec,
    classification_data,
    gen_classification_suite,
    gen_regression_suite,
    load_csv_tasks,
    random_quadratic_pool,
    read_numeric_csv,
    regression_data,
    standardize,
    suite_initial_point,
    write_synthetic_table,
)
from mamlflow.task_model import ConfigError, validate_pool


class TestRegression:
    def test_shapes_and_determinism(self):
        spec = RegressionSuiteSpec(M=3, d=4, n=10, seed=1)
        a, b = regression_data(spec), regression_data(spec)
        assert len(a) == 3 and a[0][0].shape == (10, 4) and a[0][1].shape == (10,)
        for (X1, y1, g1), (X2, y2, g2) in zip(a, b):
            np.testing.assert_array_equal(X1, X2)
            np.testing.assert_array_equal(y1, y2)

    def test_task_streams_independent_of_M(self):
        small = regression_data(RegressionSuiteSpec(M=2, d=3, n=5, seed=9))
        big = regression_data(RegressionSuiteSpec(M=6, d=3, n=5, seed=9))
        np.testing.assert_array_equal(small[1][0], big[1][0])

    def test_shared_truth(self):
        data = regression_data(RegressionSuiteSpec(M=4, d=3, n=5, shared_truth=True))
        for _, _, g in data[1:]:
            np.testing.assert_array_equal(g, data[0][2])

    def test_noise_free_fit(self):
        data = regression_data(RegressionSuiteSpec(M=1, d=3, n=50, noise=0.0))
        X, y, g = data[0]
        np.testing.assert_allclose(X @ g, y)

    def test_pool(self):
        pool = gen_regression_suite(RegressionSuiteSpec())
        assert pool.M == 10 and pool.dim == 20 and pool.is_quadratic
        assert validate_pool(pool) == []

    def test_mean_scale_doubles_hessian(self):
        half = gen_regression_suite(RegressionSuiteSpec(M=2, d=3, n=20))
        full = gen_regression_suite(RegressionSuiteSpec(M=2, d=3, n=20, loss_scale="mean"))
        np.testing.assert_allclose(full.quadratic_stack[0], 2 * half.quadratic_stack[0])

    @pytest.mark.parametrize("kw, key", [({"M": 0}, "M"), ({"noise": -1.0}, "noise"), ({"loss_scale": "sum"}, "loss_scale")])
    def test_validation(self, kw, key):
        with pytest.raises(ConfigError) as info:
            RegressionSuiteSpec(**kw)
        assert info.value.key == key

    def test_initial_point(self):
        np.testing.assert_array_equal(suite_initial_point(42, 10, 20), suite_initial_point(42, 10, 20))
        assert suite_initial_point(42, 10, 20).shape == (20,)


class TestClassification:
    def test_balance(self):
        spec = ClassificationSuiteSpec(M=3, d=5, n=40, balance=0.25)
        for X, y, u in classification_data(spec):
            assert (y == 1).sum() == 10 and (y == -1).sum() == 30
            assert np.linalg.norm(u) == pytest.approx(1.0)

    def test_default_suite(self):
        pool = gen_classification_suite(ClassificationSuiteSpec(M=5))
        assert pool.M == 5 and pool.dim == 20

    @pytest.mark.parametrize("kw", [{"balance": 0.0}, {"n": 301}, {"balance": 0.3, "n": 7}, {"delta": 0.0}])
    def test_validation(self, kw):
        with pytest.raises(ConfigError):
            ClassificationSuiteSpec(**kw)


class TestRandomQuadratic:
    def test_spectrum(self):
        pool = random_quadratic_pool(5, 4, seed=3, mu_min=0.2, L_max=1.5)
        ev = np.linalg.eigvalsh(pool.quadratic_stack[0])
        assert ev.min() >= 0.2 - 1e-12 and ev.max() <= 1.5 + 1e-12


class TestCsv:
    def _write(self, path, text):
        path.write_text(text)
        return path

    def test_read_numeric(self, tmp_path):
        p = self._write(tmp_path / "a.csv", "x,y\n1,2\n3,4\n\n5,6\n")
        out = read_numeric_csv(p, ["x", "y"])
        np.testing.assert_array_equal(out["x"], [1, 3, 5])

    def test_parse_error_names_row_and_column(self, tmp_path):
        p = self._write(tmp_path / "a.csv", "x,y\n1,2\n3,abc\n")
        with pytest.raises(CsvFormatError, match=r"row 2 \(line 3\), column 'y'"):
            read_numeric_csv(p, ["x", "y"])

    def test_missing_column(self, tmp_path):
        p = self._write(tmp_path / "a.csv", "x,y\n1,2\n")
        with pytest.raises(CsvFormatError, match="missing column"):
            read_numeric_csv(p, ["z"])

    def test_empty_file(self, tmp_path):
        p = self._write(tmp_path / "a.csv", "")
        with pytest.raises(CsvFormatError, match="empty"):
            read_numeric_csv(p, ["x"])

    def test_standardize(self):
        X = np.array([[1.0, 5.0], [3.0, 5.0]])
        Z = standardize(X)
        np.testing.assert_allclose(Z[:, 0], [-1.0, 1.0])
        np.testing.assert_allclose(Z[:, 1], 0.0)

    def test_splits(self, tmp_path):
        p = tmp_path / "t.csv"
        write_synthetic_table(p, n=120)
        spec = CsvTaskSpec(
            path=str(p), features=("age", "bmi"), label="target",
            splits=({"column": "sex", "op": "==", "value": 1}, {"column": "age", "op": ">", "mean": True}),
        )
        pool = load_csv_tasks(spec)
        assert pool.M == 4 and pool.dim == 2
        assert pool.task_labels[0] == "sex == 1 & age > mean"
        sizes = [t.H.shape for t in pool.tasks]
        assert all(s == (2, 2) for s in sizes)

    def test_empty_cell_dropped(self, tmp_path):
        p = self._write(tmp_path / "a.csv", "x,g,y\n1,0,1\n2,0,2\n3,0,2.5\n")
        spec = CsvTaskSpec(path=str(p), features=("x",), label="y", splits=({"column": "g", "op": ">", "value": 5},))
        with pytest.warns(UserWarning, match="matches no rows"):
            pool = load_csv_tasks(spec)
        assert pool.M == 1

    def test_hinge_tasks(self, tmp_path):
        p = tmp_path / "t.csv"
        write_synthetic_table(p, n=60)
        pool = load_csv_tasks(CsvTaskSpec(path=str(p), features=("age", "bmi"), label="label", loss="hinge"))
        assert not pool.is_quadratic

    @pytest.mark.parametrize(
        "kw",
        [{"loss": "l1"}, {"features": ()}, {"splits": ({"column": "x", "op": "~", "value": 1},)}, {"splits": ({"column": "x"},)}],
    )
    def test_spec_validation(self, kw):
        args = dict(path="x.csv", features=("x",), label="y")
        args.update(kw)
        with pytest.raises(ConfigError):
            CsvTaskSpec(**args)

    def test_shipped_table_loads(self):
        from pathlib import Path

        path = Path(__file__).resolve().parents[1] / "data" / "synthetic_table.csv"
        cols = read_numeric_csv(path, ["age", "target", "label"])
        assert cols["age"].size == 240 and set(np.unique(cols["label"])) == {-1.0, 1.0}
