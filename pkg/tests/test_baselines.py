import numpy as np
import pytest

from cdmshape import baselines


class TestPolynomialFeatures:
    def test_zero_in_zero_out(self):
        np.testing.assert_array_equal(baselines.polynomial_features(np.zeros(8)),
                                      np.zeros(44))

    def test_unit_vector_hits_two_terms(self):
        x = np.zeros(8)
        x[0] = 1.0
        phi = baselines.polynomial_features(x)
        assert phi.sum() == 2.0  # x_1 and x_1^2
        assert phi[0] == 1.0 and phi[8] == 1.0

    def test_arity_is_44(self):
        rng = np.random.default_rng(0)
        assert baselines.polynomial_features(rng.normal(size=8)).shape == (44,)
        assert baselines.polynomial_features(rng.normal(size=(5, 8))).shape == (5, 44)
        assert baselines.feature_arity("poly2") == 44
        assert baselines.feature_arity("identity") == 8

    def test_cross_term_ordering(self):
        x = np.arange(1.0, 9.0)
        phi = baselines.polynomial_features(x)
        # first cross term is x_1*x_2, last is x_7*x_8
        assert phi[16] == 1.0 * 2.0
        assert phi[-1] == 7.0 * 8.0

    def test_wrong_arity(self):
        with pytest.raises(ValueError):
            baselines.polynomial_features(np.zeros(7))


class TestFit:
    def test_exact_linear_recovery(self):
        rng = np.random.default_rng(1)
        w = rng.normal(size=(8, 60))
        b = rng.normal(size=60)
        x = rng.normal(size=(400, 8))
        model = baselines.fit(x, x @ w + b, "identity")
        assert np.abs(model.coef - w).max() < 1e-8
        assert np.abs(model.intercept - b).max() < 1e-8
        assert model.residual < 1e-8

    def test_constant_targets(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(100, 8))
        y = np.tile([3.0, -1.0], (100, 30))
        model = baselines.fit(x, y, "identity")
        assert np.abs(model.coef).max() < 1e-8
        np.testing.assert_allclose(model.intercept, y[0], atol=1e-8)

    def test_quadratic_truth_needs_poly2(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(500, 8))
        y = (baselines.polynomial_features(x) @ rng.normal(size=(44, 60))) * 0.1
        poly = baselines.fit(x, y, "poly2")
        lin = baselines.fit(x, y, "identity")
        assert poly.residual < 1e-6
        assert lin.residual > 100 * poly.residual

    def test_nested_models_on_random_data(self):
        rng = np.random.default_rng(4)
        for trial in range(3):
            x = rng.normal(size=(300, 8))
            y = rng.normal(size=(300, 60))
            lin = baselines.fit(x, y, "identity")
            poly = baselines.fit(x, y, "poly2")
            # nested classes; equality only up to the tiny ridge
            assert poly.residual <= lin.residual + 1e-9

    def test_too_few_rows(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError, match="rows"):
            baselines.fit(rng.normal(size=(8, 8)), rng.normal(size=(8, 60)), "identity")

    def test_unknown_map(self):
        with pytest.raises(ValueError):
            baselines.fit(np.zeros((10, 8)), np.zeros((10, 60)), "poly3")

    def test_collinear_features_still_fit(self):
        # mode-corrected frames satisfy x[j+4] == -x[j] exactly
        rng = np.random.default_rng(6)
        half = rng.normal(size=(300, 4))
        x = np.concatenate([half, -half], axis=1)
        y = half @ rng.normal(size=(4, 60)) + 2.0
        model = baselines.fit(x, y, "identity")
        assert model.residual < 1e-8
        pred = baselines.predict(model, x[:5])
        np.testing.assert_allclose(pred, y[:5], atol=1e-7)


class TestPredict:
    def test_zero_model(self):
        model = baselines.LinearModel(coef=np.zeros((8, 60)), intercept=np.zeros(60))
        np.testing.assert_array_equal(baselines.predict(model, np.ones(8)), np.zeros(60))

    def test_training_rows_reproduced(self):
        rng = np.random.default_rng(7)
        w = rng.normal(size=(8, 60))
        x = rng.normal(size=(200, 8))
        y = x @ w
        model = baselines.fit(x, y, "identity")
        np.testing.assert_allclose(baselines.predict(model, x[0]), y[0], atol=1e-8)

    def test_linear_in_coefficients(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=8)
        a = baselines.LinearModel(coef=rng.normal(size=(8, 60)), intercept=rng.normal(size=60))
        b = baselines.LinearModel(coef=2 * a.coef, intercept=2 * a.intercept)
        np.testing.assert_allclose(baselines.predict(b, x), 2 * baselines.predict(a, x),
                                   rtol=1e-12)

    def test_arity_mismatch(self):
        model = baselines.LinearModel(coef=np.zeros((44, 60)), intercept=np.zeros(60),
                                      feature_map="identity")
        with pytest.raises(ValueError):
            baselines.predict(model, np.ones(8))
