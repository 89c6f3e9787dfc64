import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rsowatch.anchor_ae import ModelConfig, train
from rsowatch.synthetic import ElementBaseline, ScenarioConfig, generate
from rsowatch.windows import utc

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

LEO_BASELINES = {
    "mean_motion": ElementBaseline(level=15.1, sigma=0.001),
    "eccentricity": ElementBaseline(level=0.0007, sigma=2e-5),
    "inclination": ElementBaseline(level=51.64, sigma=0.005),
    "raan": ElementBaseline(level=180.0, sigma=0.02),
    "arg_perigee": ElementBaseline(level=90.0, sigma=0.5),
    "mean_anomaly": ElementBaseline(level=200.0, sigma=1.0),
}


@pytest.fixture(scope="session")
def leo_baselines():
    return dict(LEO_BASELINES)


@pytest.fixture(scope="session")
def small_corpus(leo_baselines):
    """Three clean objects, 60 observations each."""
    scenario = ScenarioConfig(
        object_count=3, observations_per_object=60, start_epoch=utc(2021, 1, 1),
        cadence_per_day=0.6, baselines=leo_baselines, seed=11,
    )
    return generate(scenario)


@pytest.fixture(scope="session")
def training_matrix():
    """150 synthetic rows drawn around a LEO operating point."""
    rng = np.random.default_rng(5)
    return rng.normal(
        [15.1, 0.0007, 51.6, 180.0, 90.0, 200.0],
        [0.001, 2e-5, 0.005, 0.02, 0.5, 1.0],
        size=(150, 6),
    )


@pytest.fixture(scope="session")
def trained_model(training_matrix):
    """One modestly trained model shared by scoring tests."""
    return train(training_matrix, ModelConfig(epochs=40, seed=3), norad_id=90001)
