import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from boost.agb.data import Task
from boost.agb.extensions import error_handler as error
from boost.agb.losses import (
    LEAF_WEIGHT_CLAMP,
    ExponentialLoss,
    LogitLoss,
    LossKind,
    SquaredLoss,
    get_loss,
)

CLASSIFICATION_LOSSES = [ExponentialLoss(), LogitLoss()]


class TestInitConstant:

    def test_squared_mean(self):
        assert SquaredLoss().init_constant(np.array([1.0, 2.0, 3.0])) == pytest.approx(2.0)

    def test_exponential(self):
        y = np.array([1.0, 1.0, 1.0, -1.0])
        assert ExponentialLoss().init_constant(y) == pytest.approx(0.549306, abs=1e-6)

    def test_logit_balanced(self):
        assert LogitLoss().init_constant(np.array([1.0, -1.0, 1.0, -1.0])) == pytest.approx(0.0)

    @pytest.mark.parametrize("loss", CLASSIFICATION_LOSSES, ids=repr)
    def test_single_class(self, loss):
        with pytest.raises(error.SingleClassError):
            loss.init_constant(np.ones(5))

    @pytest.mark.parametrize("loss", [SquaredLoss(), *CLASSIFICATION_LOSSES], ids=repr)
    def test_is_the_minimizer(self, loss, rng):
        if loss.kind is LossKind.SQUARED:
            y = rng.normal(size=30)
        else:
            y = np.where(rng.random(30) < 0.3, 1.0, -1.0)
            y[:2] = [1.0, -1.0]
        best = minimize_scalar(
            lambda z: loss.risk(np.full(y.shape, z), y),
            bounds=(-10, 10),
            method="bounded",
            options={"xatol": 1e-10},
        )
        assert loss.init_constant(y) == pytest.approx(best.x, abs=1e-4)


class TestNegativeGradient:

    def test_squared_residuals(self):
        z = SquaredLoss().negative_gradient(np.zeros(2), np.array([1.0, -1.0]))
        np.testing.assert_array_equal(z, [1.0, -1.0])

    def test_exponential_at_zero(self):
        z = ExponentialLoss().negative_gradient(np.zeros(2), np.array([1.0, -1.0]))
        np.testing.assert_allclose(z, [1.0, -1.0])

    def test_logit_at_zero(self):
        z = LogitLoss().negative_gradient(np.zeros(1), np.ones(1))
        assert z[0] == pytest.approx(1 / (2 * math.log(2)), abs=1e-9)

    @pytest.mark.parametrize("loss", CLASSIFICATION_LOSSES, ids=repr)
    def test_matches_finite_difference(self, loss, rng):
        f = rng.normal(size=20)
        y = np.where(rng.random(20) < 0.5, 1.0, -1.0)
        h = 1e-6
        numeric = -(loss.pointwise(f + h, y) - loss.pointwise(f - h, y)) / (2 * h)
        np.testing.assert_allclose(loss.negative_gradient(f, y), numeric, rtol=1e-5, atol=1e-8)

    def test_squared_is_half_the_true_gradient(self, rng):
        f = rng.normal(size=20)
        y = rng.normal(size=20)
        h = 1e-6
        loss = SquaredLoss()
        numeric = -(loss.pointwise(f + h, y) - loss.pointwise(f - h, y)) / (2 * h)
        np.testing.assert_allclose(2 * loss.negative_gradient(f, y), numeric, rtol=1e-5, atol=1e-6)

    @pytest.mark.parametrize("loss", CLASSIFICATION_LOSSES, ids=repr)
    def test_large_margins_stay_finite(self, loss):
        f = np.array([1e6, -1e6])
        y = np.array([-1.0, -1.0])
        assert np.isfinite(loss.negative_gradient(f, y)).all()
        assert np.isfinite(loss.pointwise(f, y)).all()


class TestLeafWeight:

    def test_squared(self):
        w = SquaredLoss().leaf_weight(np.array([1.0, 1.0]), np.array([3.0, 5.0]))
        assert w == pytest.approx(3.0)

    def test_exponential_symmetric(self):
        w = ExponentialLoss().leaf_weight(np.zeros(2), np.array([1.0, -1.0]))
        assert w == pytest.approx(0.0)

    def test_logit_closed_form(self):
        w = LogitLoss().leaf_weight(np.zeros(3), np.array([1.0, 1.0, -1.0]))
        assert w == pytest.approx(math.log(2), abs=1e-8)

    @pytest.mark.parametrize("loss", CLASSIFICATION_LOSSES, ids=repr)
    def test_pure_leaf_is_clamped(self, loss):
        assert loss.leaf_weight(np.zeros(3), np.ones(3)) == LEAF_WEIGHT_CLAMP
        assert loss.leaf_weight(np.zeros(3), -np.ones(3)) == -LEAF_WEIGHT_CLAMP

    @pytest.mark.parametrize("loss", [SquaredLoss(), *CLASSIFICATION_LOSSES], ids=repr)
    def test_matches_scalar_oracle(self, loss, rng):
        for _ in range(100):
            size = int(rng.integers(2, 30))
            f = rng.normal(scale=2.0, size=size)
            if loss.kind is LossKind.SQUARED:
                y = rng.normal(scale=3.0, size=size)
                bounds = (-50.0, 50.0)
            else:
                y = np.where(rng.random(size) < 0.5, 1.0, -1.0)
                y[:2] = [1.0, -1.0]
                bounds = (-LEAF_WEIGHT_CLAMP, LEAF_WEIGHT_CLAMP)
            oracle = minimize_scalar(
                lambda w: loss.leaf_risk(w, f, y),
                bounds=bounds,
                method="bounded",
                options={"xatol": 1e-10},
            )
            w = loss.leaf_weight(f, y)
            assert loss.leaf_risk(w, f, y) <= oracle.fun + 1e-8

    @pytest.mark.parametrize("loss", [SquaredLoss(), *CLASSIFICATION_LOSSES], ids=repr)
    def test_never_worse_than_zero(self, loss, rng):
        for _ in range(20):
            f = rng.normal(scale=3.0, size=7)
            if loss.kind is LossKind.SQUARED:
                y = rng.normal(size=7)
            else:
                y = np.where(rng.random(7) < 0.5, 1.0, -1.0)
            w = loss.leaf_weight(f, y)
            assert loss.leaf_risk(w, f, y) <= loss.leaf_risk(0.0, f, y) + 1e-12


class TestRisk:

    def test_squared(self):
        assert SquaredLoss().risk(np.zeros(2), np.array([1.0, -1.0])) == pytest.approx(1.0)

    def test_exponential_at_zero(self):
        assert ExponentialLoss().risk(np.zeros(4), np.array([1.0, -1.0, 1.0, 1.0])) == pytest.approx(1.0)

    def test_logit_at_zero(self):
        assert LogitLoss().risk(np.zeros(4), np.array([1.0, -1.0, 1.0, 1.0])) == pytest.approx(1.0)

    @pytest.mark.parametrize("loss", [SquaredLoss(), *CLASSIFICATION_LOSSES], ids=repr)
    def test_convex_along_a_coordinate(self, loss, rng):
        for _ in range(100):
            f = rng.normal(scale=2.0, size=10)
            if loss.kind is LossKind.SQUARED:
                y = rng.normal(size=10)
            else:
                y = np.where(rng.random(10) < 0.5, 1.0, -1.0)
            direction = np.zeros(10)
            direction[rng.integers(10)] = 1.0
            a, b = rng.uniform(-3.0, 3.0, size=2)
            low = loss.risk(f + a * direction, y)
            high = loss.risk(f + b * direction, y)
            middle = loss.risk(f + (a + b) / 2 * direction, y)
            assert middle <= (low + high) / 2 + 1e-12 * max(low, high)

    def test_length_mismatch(self):
        with pytest.raises(error.InvalidDatasetError):
            SquaredLoss().risk(np.zeros(3), np.zeros(2))

    def test_empty(self):
        with pytest.raises(error.InvalidDatasetError):
            SquaredLoss().risk(np.zeros(0), np.zeros(0))


class TestKinds:

    def test_parse(self):
        assert LossKind.parse(" Logit ") is LossKind.LOGIT
        assert get_loss("exponential").kind is LossKind.EXPONENTIAL

    def test_parse_unknown(self):
        with pytest.raises(error.InvalidConfigError):
            LossKind.parse("hinge")

    def test_defaults(self):
        assert LossKind.default_for(Task.REGRESSION) is LossKind.SQUARED
        assert LossKind.default_for(Task.CLASSIFICATION) is LossKind.EXPONENTIAL

    def test_task_check(self):
        get_loss("squared").check_task(Task.REGRESSION)
        with pytest.raises(error.IncompatibleLossError):
            get_loss("squared").check_task(Task.CLASSIFICATION)
        with pytest.raises(error.IncompatibleLossError):
            get_loss("logit").check_task(Task.REGRESSION)
