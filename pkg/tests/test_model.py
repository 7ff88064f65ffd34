import json

import numpy as np
import pytest

from boost.agb.boosting import NesterovSchedule, TrainConfig, train
from boost.agb.extensions import error_handler as error
from boost.agb.model import (
    FORMAT_VERSION,
    BoostedModel,
    deserialize,
    load_model,
    save_model,
    serialize,
)
from boost.agb.trees import LEAF, Tree
from tests.helpers import random_classification, random_regression

STUMP_FILE = """
{
 "version": "agb-model/1",
 "algorithm": "gb",
 "loss": "squared",
 "nu": 0.5,
 "init": 5.0,
 "task": "regression",
 "feature_names": ["x1"],
 "trees": [
  {
   "feature": [0, -1, -1],
   "threshold": [2.5, 0.0, 0.0],
   "left": [1, -1, -1],
   "right": [2, -1, -1],
   "leaf_id": [-1, 0, 1],
   "weight": [-5.0, 5.0],
   "mean_target": [-5.0, 5.0]
  }
 ]
}
"""


@pytest.fixture
def regression_model(rng):
    ds = random_regression(rng, n=100)
    model, _ = train(ds, TrainConfig("agb", "squared", 0.1, 30, leaves=4))
    return model, ds


class TestReplay:

    def test_t0_is_the_constant(self, regression_model):
        model, ds = regression_model
        np.testing.assert_array_equal(model.predict_at(ds.features, 0), np.full(ds.n, model.init))

    def test_out_of_range(self, regression_model):
        model, ds = regression_model
        with pytest.raises(error.IterationOutOfRangeError):
            model.predict_at(ds.features, 31)
        with pytest.raises(error.IterationOutOfRangeError):
            model.predict_at(ds.features, -1)

    @pytest.mark.parametrize("algorithm", ["gb", "agb"])
    def test_flat_coefficients_agree(self, rng, algorithm):
        ds = random_classification(rng)
        model, _ = train(ds, TrainConfig(algorithm, "logit", 0.2, 25, leaves=3))
        for t in (0, 1, 2, 10, 25):
            np.testing.assert_allclose(
                model.predict_flat(ds.features, t),
                model.predict_at(ds.features, t),
                rtol=0,
                atol=1e-9,
            )

    def test_gb_coefficients_are_ones(self, line_dataset):
        model, _ = train(line_dataset, TrainConfig("gb", "squared", 0.5, 4))
        np.testing.assert_array_equal(model.effective_coefficients(), np.ones(4))

    def test_agb_coefficients(self, line_dataset):
        model, _ = train(line_dataset, TrainConfig("agb", "squared", 0.5, 3))
        # F_1 = F_0 + ν h_1, G_1 = F_0, F_2 = F_0 + ν h_2, G_2 = F_2, F_3 = F_2 + ν h_3.
        np.testing.assert_allclose(model.effective_coefficients(1), [1.0])
        np.testing.assert_allclose(model.effective_coefficients(2), [0.0, 1.0])
        np.testing.assert_allclose(model.effective_coefficients(3), [0.0, 1.0, 1.0])

    def test_zero_momentum_coefficients(self, line_dataset):
        model, _ = train(
            line_dataset,
            TrainConfig("agb", "squared", 0.5, 5),
            schedule=NesterovSchedule.constant(5),
        )
        np.testing.assert_array_equal(model.effective_coefficients(), np.ones(5))

    def test_classify_uses_the_sign(self, rng):
        ds = random_classification(rng)
        model, _ = train(ds, TrainConfig("gb", "exponential", 0.5, 10, leaves=3))
        scores = model.predict(ds.features)
        labels = model.classify(ds.features)
        np.testing.assert_array_equal(labels, np.where(scores > 0, 1.0, -1.0))

    def test_feature_count_checked(self, regression_model):
        model, _ = regression_model
        with pytest.raises(error.InvalidDatasetError):
            model.predict(np.zeros((2, 5)))


class TestSerialization:

    @pytest.mark.parametrize("algorithm", ["gb", "agb"])
    @pytest.mark.parametrize("loss", ["squared", "exponential", "logit"])
    def test_round_trip_is_exact(self, rng, algorithm, loss):
        ds = random_regression(rng) if loss == "squared" else random_classification(rng)
        model, _ = train(ds, TrainConfig(algorithm, loss, 0.1, 12, leaves=3))
        restored = deserialize(serialize(model))
        assert restored.trees == model.trees
        assert restored.init == model.init
        for t in (0, 1, 12):
            np.testing.assert_array_equal(
                restored.predict_at(ds.features, t),
                model.predict_at(ds.features, t),
            )

    def test_save_and_load(self, regression_model, tmp_path):
        model, ds = regression_model
        path = tmp_path / "model.json"
        save_model(model, path)
        restored = load_model(path)
        assert restored.feature_names == model.feature_names
        np.testing.assert_array_equal(restored.predict(ds.features), model.predict(ds.features))

    def test_hand_written_stump(self, line_dataset):
        model = deserialize(STUMP_FILE)
        np.testing.assert_array_equal(model.predict(line_dataset.features), [2.5, 2.5, 7.5, 7.5])

    def test_truncated_file(self, regression_model):
        model, _ = regression_model
        data = serialize(model)
        with pytest.raises(error.ModelFormatError):
            deserialize(data[: len(data) // 2])

    def test_version_mismatch(self):
        document = json.loads(STUMP_FILE)
        document["version"] = "agb-model/0"
        with pytest.raises(error.ModelFormatError, match="version"):
            deserialize(json.dumps(document))

    def test_dangling_child(self):
        document = json.loads(STUMP_FILE)
        document["trees"][0]["right"] = [7, -1, -1]
        with pytest.raises(error.ModelFormatError):
            deserialize(json.dumps(document))

    def test_split_feature_beyond_the_feature_names(self):
        document = json.loads(STUMP_FILE)
        document["trees"][0]["feature"] = [7, -1, -1]
        with pytest.raises(error.ModelFormatError, match="splits on feature 7"):
            deserialize(json.dumps(document))

    @pytest.mark.parametrize("field, value", [("feature", [0.9, -1, -1]), ("left", [1.5, -1, -1])])
    def test_fractional_index(self, field, value):
        document = json.loads(STUMP_FILE)
        document["trees"][0][field] = value
        with pytest.raises(error.ModelFormatError, match="must be integers"):
            deserialize(json.dumps(document))

    def test_integral_float_index(self, line_dataset):
        document = json.loads(STUMP_FILE)
        document["trees"][0]["feature"] = [0.0, -1.0, -1.0]
        model = deserialize(json.dumps(document))
        np.testing.assert_array_equal(model.predict(line_dataset.features), [2.5, 2.5, 7.5, 7.5])

    def test_unnamed_model_needs_enough_columns(self):
        tree = Tree([2, LEAF, LEAF], [0.0, 0.0, 0.0], [1, LEAF, LEAF], [2, LEAF, LEAF], [LEAF, 0, 1], [1.0, -1.0], [1.0, -1.0])
        model = BoostedModel("gb", "squared", 0.5, 0.0, [tree], "regression")
        with pytest.raises(error.InvalidDatasetError, match="splits on 3 features"):
            model.predict(np.zeros((2, 2)))
        assert model.predict(np.zeros((2, 3))).shape == (2,)

    @pytest.mark.parametrize("field", ["nu", "init", "trees", "loss"])
    def test_missing_field(self, field):
        document = json.loads(STUMP_FILE)
        del document[field]
        with pytest.raises(error.ModelFormatError):
            deserialize(json.dumps(document))

    @pytest.mark.parametrize(
        "field, value",
        [("nu", 1.5), ("loss", "logit"), ("algorithm", "xgb"), ("trees", {}), ("task", "ranking")],
    )
    def test_invalid_field(self, field, value):
        document = json.loads(STUMP_FILE)
        document[field] = value
        with pytest.raises(error.ModelFormatError):
            deserialize(json.dumps(document))

    def test_classification_weight_out_of_range(self):
        tree = Tree([LEAF], [0.0], [LEAF], [LEAF], [0], [4.5], [0.0])
        with pytest.raises(error.ModelFormatError):
            BoostedModel("gb", "exponential", 0.1, 0.0, [tree], "classification")

    def test_not_an_object(self):
        with pytest.raises(error.ModelFormatError):
            deserialize("[1, 2, 3]")

    def test_missing_file(self, tmp_path):
        with pytest.raises(error.ModelFormatError):
            load_model(tmp_path / "absent.json")

    def test_custom_schedule_refused(self, line_dataset):
        model, _ = train(
            line_dataset,
            TrainConfig("agb", "squared", 0.5, 3),
            schedule=NesterovSchedule.constant(3, gamma=-0.5),
        )
        with pytest.raises(error.ModelFormatError):
            serialize(model)

    def test_format_version_written(self, line_dataset):
        model, _ = train(line_dataset, TrainConfig("gb", "squared", 0.5, 1))
        assert json.loads(serialize(model))["version"] == FORMAT_VERSION
