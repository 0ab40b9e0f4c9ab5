"""Tests for the simulation harness: calibration, generation, aggregation."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

import locdim.experiments as experiments
from locdim.experiments import (
    DESK_GRIDS,
    ESTIMATOR_NAMES,
    FULL_GRIDS,
    ExperimentConfig,
    MeanPredictor,
    ResultTable,
    calibrate_lambda,
    fit_neural_sc,
    generate,
    ingest_csv,
    normalized_error,
    normalizer,
    prediction_error,
    render_table,
    run_experiment,
    sample_iqr,
    sample_median,
    sorted_percentile,
)
from locdim.fitting import Dataset, FitConfig
from locdim.targets import target_eval


class _TruePredictor:
    """Oracle predictor evaluating the target itself."""

    def __init__(self, name):
        self.name = name

    def predict_batch(self, X):
        return target_eval(self.name, X)


class TestPercentiles:
    def test_matches_numpy_linear_interpolation(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            v = rng.standard_normal(int(rng.integers(1, 40)))
            for q in (0.0, 25.0, 50.0, 75.0, 90.0, 100.0):
                assert_allclose(sorted_percentile(v, q), np.percentile(v, q),
                                rtol=1e-12, atol=1e-12)
            assert_allclose(sample_median(v), np.median(v), rtol=1e-12)
            assert_allclose(
                sample_iqr(v),
                np.percentile(v, 75) - np.percentile(v, 25),
                rtol=1e-12, atol=1e-12,
            )

    def test_constant_sample_has_zero_spread(self):
        assert sample_iqr(np.full(100, 3.7)) == 0.0
        assert sample_median(np.full(5, -1.0)) == -1.0

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            sorted_percentile([], 50.0)


class TestCalibrateLambda:
    def test_validation(self):
        with pytest.raises(ValueError):
            calibrate_lambda("m1", mc_samples=999)

    def test_deterministic(self):
        a = calibrate_lambda("m1", 1000, 2, seed=3)
        b = calibrate_lambda("m1", 1000, 2, seed=3)
        assert a == b
        assert a > 0

    def test_reference_scales_for_m2_and_m3(self):
        # desk-scale Monte Carlo stays within 15% of the reference values
        lam2 = calibrate_lambda("m2", 10_000, 10, seed=0)
        lam3 = calibrate_lambda("m3", 10_000, 10, seed=0)
        assert abs(lam2 - 6.28) / 6.28 <= 0.15
        assert abs(lam3 - 12.2) / 12.2 <= 0.15

    def test_sparse_piece_excluded_with_warning(self, monkeypatch):
        real_masks = experiments.piece_masks

        def starved(name, X):
            masks = real_masks(name, X)
            tiny = np.zeros(X.shape[0], dtype=bool)
            tiny[:5] = True  # piece with fewer than 30 samples
            return [tiny] + list(masks)

        monkeypatch.setattr(experiments, "piece_masks", starved)
        with pytest.warns(UserWarning, match="excluded"):
            lam = calibrate_lambda("m1", 1000, 2, seed=1)
        assert np.isfinite(lam)

    def test_all_pieces_starved_raises(self, monkeypatch):
        def empty_masks(name, X):
            return [np.zeros(X.shape[0], dtype=bool)]

        monkeypatch.setattr(experiments, "piece_masks", empty_masks)
        with pytest.warns(UserWarning):
            with pytest.raises(RuntimeError):
                calibrate_lambda("m1", 1000, 2, seed=1)


class TestGenerate:
    def test_noiseless_matches_target(self):
        data = generate("m1", 50, 0.0, 2.0, seed=4)
        assert_allclose(data.Y, target_eval("m1", data.X), rtol=0, atol=0)
        assert np.all((data.X >= 0.0) & (data.X <= 1.0))

    def test_same_seed_identical(self):
        d1 = generate("fig2", 30, 0.1, 2.0, seed=9)
        d2 = generate("fig2", 30, 0.1, 2.0, seed=9)
        assert np.array_equal(d1.X, d2.X) and np.array_equal(d1.Y, d2.Y)

    def test_noise_variance_scale(self):
        sigma, lam = 0.5, 3.0
        data = generate("m1", 20_000, sigma, lam, seed=6)
        noise = data.Y - target_eval("m1", data.X)
        assert abs(np.var(noise) - (sigma * lam) ** 2) / (sigma * lam) ** 2 <= 0.05

    def test_negative_sigma_raises(self):
        with pytest.raises(ValueError):
            generate("m1", 20, -0.1, 1.0, seed=0)


class TestNormalizedError:
    def test_oracle_predictor_scores_zero(self):
        err = normalized_error(_TruePredictor("m1"), "m1", 100, 2000, seed=3,
                               sigma=0.05, lam=2.0)
        assert err == 0.0

    def test_fresh_mean_is_near_one(self):
        lam = 1.8
        data = generate("m1", 100, 0.05, lam, seed=11)
        mp = MeanPredictor(value=float(np.mean(data.Y)))
        ratio = normalized_error(mp, "m1", 100, 2000, seed=21,
                                 sigma=0.05, lam=lam)
        assert 0.5 <= ratio <= 2.0

    def test_small_eval_set_rejected(self):
        with pytest.raises(ValueError):
            normalized_error(_TruePredictor("m1"), "m1", 100, 999, seed=0)

    def test_normalizer_deterministic_and_positive(self):
        a = normalizer("m1", 100, 0.05, 2.0, 2000, seed=5)
        b = normalizer("m1", 100, 0.05, 2.0, 2000, seed=5)
        assert a == b and a > 0

    def test_prediction_error_formula(self):
        # constant predictor against a fresh uniform sample, by hand
        value = 2.5
        rng = np.random.default_rng(77)
        Xe = rng.uniform(0.0, 1.0, size=(1500, 10))
        expected = float(np.mean((value - target_eval("m1", Xe)) ** 2))
        got = prediction_error(MeanPredictor(value=value), "m1", 1500, seed=77)
        assert_allclose(got, expected, rtol=1e-12)


class TestMeanPredictor:
    def test_surface(self):
        mp = MeanPredictor(value=1.5)
        assert_allclose(mp.predict_batch(np.zeros((4, 3))), np.full(4, 1.5))
        assert mp.predict(np.zeros(3)) == 1.5
        assert mp.to_doc() == {"kind": "mean", "value": 1.5}


class TestFitNeuralSc:
    def test_returns_truncating_predictor(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(0, 1, (30, 2))
        Y = X[:, 0] ** 2 + np.sin(3 * X[:, 1])
        pred = fit_neural_sc(Dataset(X=X, Y=Y), (2,), (1,), (3,),
                             FitConfig(restarts=1, max_iters=15))
        assert (pred.L, pred.r) == (1, 3)
        assert pred.predict_batch(X).shape == (30,)

    def test_split_validation(self):
        data = Dataset(X=np.zeros((3, 1)), Y=np.zeros(3))
        with pytest.raises(ValueError):
            fit_neural_sc(data, (2,), (1,), (3,), FitConfig(), split_fraction=0.99)


class TestExperimentConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(n=5)
        with pytest.raises(ValueError):
            ExperimentConfig(repetitions=0)
        with pytest.raises(ValueError):
            ExperimentConfig(target="nope")
        with pytest.raises(ValueError):
            ExperimentConfig(estimators=("mean", "oracle"))

    def test_doc_round_trips_fields(self):
        cfg = ExperimentConfig(target="m2", n=50, estimators=("mean", "knn"),
                               seed=7, full_scale=True)
        doc = cfg.to_doc()
        assert doc["target"] == "m2" and doc["n"] == 50
        assert doc["estimators"] == ["mean", "knn"]
        assert doc["full_scale"] is True

    def test_grids_cover_trained_estimators(self):
        for grids in (DESK_GRIDS, FULL_GRIDS):
            assert {"neural-sc", "neural-fc", "mars"} <= set(grids)
        assert set(ESTIMATOR_NAMES) == {"mean", "knn", "rbf", "mars",
                                        "neural-fc", "neural-sc"}


class TestRunExperiment:
    CHEAP = dict(target="m1", n=20, noise_sigma=0.05, repetitions=2,
                 N_eval=1000, estimators=("mean", "knn"), seed=1,
                 lambda_mc_samples=1000, lambda_mc_repeats=2)

    def test_cheap_cell_shapes_and_scales(self):
        tab = run_experiment(ExperimentConfig(**self.CHEAP))
        assert isinstance(tab, ResultTable)
        for name in ("mean", "knn"):
            assert len(tab.errors[name]) == 2
            assert tab.failures[name] == 0
            assert all(np.isfinite(e) and e > 0 for e in tab.errors[name])
        # the constant-mean estimator matches the constant-mean baseline scale
        assert 0.2 <= tab.median("mean") <= 5.0

    def test_same_seed_byte_identical_json(self):
        a = run_experiment(ExperimentConfig(**self.CHEAP)).to_json()
        b = run_experiment(ExperimentConfig(**self.CHEAP)).to_json()
        assert a == b

    def test_estimator_failure_recorded_not_fatal(self, monkeypatch):
        real = experiments._fit_estimator

        def flaky(name, data, seed, full_scale):
            if name == "knn":
                raise RuntimeError("synthetic failure")
            return real(name, data, seed, full_scale)

        monkeypatch.setattr(experiments, "_fit_estimator", flaky)
        with pytest.warns(UserWarning, match="failed in repetition"):
            tab = run_experiment(ExperimentConfig(**self.CHEAP))
        assert tab.failures["knn"] == 2
        assert tab.errors["knn"] == []
        assert len(tab.errors["mean"]) == 2

    def test_render_table_output(self):
        tab = run_experiment(ExperimentConfig(**self.CHEAP))
        text = render_table(tab.to_doc())
        assert "estimator" in text and "mean" in text and "knn" in text
        assert "lambda=" in text
        # an estimator with no finished repetitions renders a dash
        doc = tab.to_doc()
        doc["estimators"]["knn"] = {"errors": [], "failures": 2}
        assert "-" in render_table(doc)


class TestResultTable:
    def test_aggregates(self):
        cfg = ExperimentConfig(estimators=("mean",))
        tab = ResultTable(config=cfg, lam=2.0, normalizer_value=3.0,
                          errors={"mean": [1.0, 3.0, 2.0]},
                          failures={"mean": 1})
        assert tab.median("mean") == 2.0
        assert tab.iqr("mean") == 1.0
        doc = tab.to_doc()
        assert doc["version"] == 1
        assert doc["estimators"]["mean"]["failures"] == 1
        assert doc["estimators"]["mean"]["median"] == 2.0


class TestIngestCsv:
    def _write(self, tmp_path, text):
        path = tmp_path / "data.csv"
        path.write_text(text, encoding="utf-8")
        return str(path)

    def test_exact_parse(self, tmp_path):
        path = self._write(tmp_path, "a,b,y\n1,2,3\n4,5,6\n7,8,9\n")
        data, report = ingest_csv(path, "y", ["a", "b"])
        assert_allclose(data.X, [[1, 2], [4, 5], [7, 8]])
        assert_allclose(data.Y, [3, 6, 9])
        assert report == {"rows_used": 3, "rows_dropped": 0}

    def test_missing_column_named(self, tmp_path):
        path = self._write(tmp_path, "a,y\n1,2\n")
        with pytest.raises(ValueError, match="nope"):
            ingest_csv(path, "y", ["nope"])

    def test_bad_rows_dropped_and_counted(self, tmp_path):
        path = self._write(tmp_path,
                           "a,y\n1,2\nbroken,3\n4\n5,6\n")
        data, report = ingest_csv(path, "y", ["a"])
        assert report == {"rows_used": 2, "rows_dropped": 2}
        assert_allclose(data.X[:, 0], [1, 5])

    def test_minmax_normalization(self, tmp_path):
        path = self._write(tmp_path, "a,c,y\n0,7,1\n5,7,2\n10,7,3\n")
        with pytest.warns(UserWarning, match="'c'"):
            data, _ = ingest_csv(path, "y", ["a", "c"], normalization="minmax")
        assert_allclose(data.X[:, 0], [0.0, 0.5, 1.0])
        assert_allclose(data.X[:, 1], [0.0, 0.0, 0.0])

    def test_wide_header(self, tmp_path):
        cols = ["f%d" % i for i in range(12)]
        header = ",".join(cols + ["cnt"])
        row = ",".join(str(i) for i in range(12)) + ",99"
        path = self._write(tmp_path, header + "\n" + row + "\n")
        data, _ = ingest_csv(path, "cnt", cols)
        assert data.d == 12 and data.Y[0] == 99.0

    def test_validation(self, tmp_path):
        path = self._write(tmp_path, "")
        with pytest.raises(ValueError, match="empty"):
            ingest_csv(path, "y", ["a"])
        path2 = self._write(tmp_path, "a,y\nx,z\n")
        with pytest.raises(ValueError, match="no parseable rows"):
            ingest_csv(path2, "y", ["a"])
        path3 = self._write(tmp_path, "a,y\n1,2\n")
        with pytest.raises(ValueError, match="normalization"):
            ingest_csv(path3, "y", ["a"], normalization="zscore")
