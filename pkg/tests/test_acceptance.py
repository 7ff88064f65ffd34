"""
Statistical checks of the accelerated method on the synthetic models.

These train thousands of trees and are deselected by default, run them with
`pytest -m slow`.
"""
import numpy as np
import pytest

from boost.agb import WORKERS
from boost.agb.benchmark import BenchConfig, mean_t_star, run_benchmark
from boost.agb.boosting import TrainConfig, train
from boost.agb.model import deserialize, serialize
from boost.agb.synthetic import ModelSpec, generate_model
from tests.helpers import random_classification, random_regression

pytestmark = pytest.mark.slow


def run_grid(tmp_path, **settings):
    data = {"output": str(tmp_path / "out"), "workers": max(WORKERS, 4), **settings}
    return run_benchmark(BenchConfig.from_dict(data))


def mean_metric(report, algorithm, nu, column):
    summary = report.summary
    row = summary[(summary["algorithm"] == algorithm) & np.isclose(summary["nu"], nu)]
    return float(row[f"{column}_mean"].iloc[0])


def test_agb_selects_much_sparser_models(tmp_path):
    report = run_grid(
        tmp_path,
        replications=5,
        nu_grid=[0.01],
        t_cap={"gb": 10_000, "agb": 2_500},
        tasks=[{"name": "model5", "model": 5, "design": "u", "n": 5000}],
    )
    assert report.failures.empty
    gb = mean_t_star(report, "model5", "gb", 0.01)
    agb = mean_t_star(report, "model5", "agb", 0.01)
    assert agb <= gb / 5


def test_model1_errors_and_sizes(tmp_path):
    report = run_grid(
        tmp_path,
        replications=10,
        nu_grid=[0.1],
        t_cap={"gb": 2_000, "agb": 500},
        tasks=[{"name": "model1", "model": 1, "design": "u"}],
    )
    for algorithm in ("gb", "agb"):
        assert 0.78 <= mean_metric(report, algorithm, 0.1, "mse") <= 1.08
    ratio = mean_t_star(report, "model1", "gb", 0.1) / mean_t_star(report, "model1", "agb", 0.1)
    assert ratio >= 3


def test_agb_is_less_sensitive_to_shrinkage(tmp_path):
    grid = [1e-5, 1e-3, 1e-2, 0.1]
    report = run_grid(
        tmp_path,
        replications=5,
        nu_grid=grid,
        t_cap={"gb": 4_000, "agb": 2_500},
        tasks=[{"name": "model3", "model": 3, "design": "u", "d": 100}],
    )

    def spread(algorithm):
        errors = [mean_metric(report, algorithm, nu, "mse") for nu in grid]
        return max(errors) / min(errors)

    assert spread("agb") < spread("gb")


@pytest.mark.parametrize("nu", [0.01, 0.1, 0.5])
@pytest.mark.parametrize("model_id, loss", [(2, "squared"), (4, "exponential"), (5, "logit")])
def test_gb_training_risk_is_monotone(model_id, loss, nu):
    ds = generate_model(ModelSpec(model_id, "u", 500, 20, seed=model_id))
    _, trace = train(ds, TrainConfig("gb", loss, nu, 500))
    assert (np.diff(trace.train_risk) <= 1e-12 * trace.train_risk[:-1]).all()


def test_replay_matches_coefficients_over_long_runs():
    rng = np.random.default_rng(3)
    ds = random_regression(rng, n=150, d=4)
    model, _ = train(ds, TrainConfig("agb", "squared", 0.05, 200, leaves=3))
    for t, values in enumerate(model.iterates(ds.features)):
        np.testing.assert_allclose(model.predict_flat(ds.features, t), values, rtol=0, atol=1e-9)


def test_many_models_round_trip():
    rng = np.random.default_rng(4)
    for i in range(50):
        classification = i % 2 == 1
        ds = random_classification(rng, n=60) if classification else random_regression(rng, n=60)
        loss = ("exponential", "logit")[i % 4 // 2] if classification else "squared"
        config = TrainConfig(
            algorithm=("gb", "agb")[i % 3 % 2],
            loss=loss,
            nu=float(rng.uniform(0.01, 0.9)),
            iterations=int(rng.integers(1, 40)),
            leaves=int(rng.integers(2, 6)),
        )
        model, _ = train(ds, config)
        restored = deserialize(serialize(model))
        for t in (0, 1, model.iterations):
            np.testing.assert_array_equal(restored.predict_at(ds.features, t), model.predict_at(ds.features, t))
