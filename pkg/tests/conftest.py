"""Shared fixtures: synthetic datasets and fitted predictors.

Session scope keeps the expensive artifacts (MLP training, LOOCV) to one
build per test run.
"""

import numpy as np
import pytest

from ortg_lab.ingest import Dataset, SyntheticSpec, TeamSeasonRow, generate_synthetic_dataset
from ortg_lab.model import TrainConfig, train_predictor


@pytest.fixture(scope="session")
def clean_dataset():
    """240 rows, sigma=0: targets follow the planted linear rule exactly."""
    data, truth = generate_synthetic_dataset(7, 240, SyntheticSpec(sigma=0.0))
    return data, truth


@pytest.fixture(scope="session")
def noisy_dataset():
    """240 rows with 2.0 ORTG points of target noise."""
    data, truth = generate_synthetic_dataset(7, 240, SyntheticSpec(sigma=2.0))
    return data, truth


@pytest.fixture(scope="session")
def full_rank_dataset():
    """Independent per-feature sampling: planted weights are identifiable."""
    data, truth = generate_synthetic_dataset(
        7, 240, SyntheticSpec(sigma=0.0, latent_dim=None)
    )
    return data, truth


@pytest.fixture(scope="session")
def linear_predictor(noisy_dataset):
    data, _ = noisy_dataset
    return train_predictor(data, "linear", k=18, cfg=TrainConfig(seed=7))


@pytest.fixture(scope="session")
def mlp_predictor(noisy_dataset):
    data, _ = noisy_dataset
    return train_predictor(data, "mlp", k=18, cfg=TrainConfig(seed=7), hidden_shape=(3,))


def make_single_feature_dataset(n=5, feature_index=1, slope=30.0, intercept=100.0):
    """Rows varying in exactly one feature, target linear in it."""
    from ortg_lab.features import FREQ_INDICES

    rows = []
    for i in range(n):
        x = np.full(48, 0.2)
        x[list(FREQ_INDICES)] = 0.08  # constant, sums to 0.64
        t = i / (n - 1)
        x[feature_index] = 0.3 + 0.4 * t
        rows.append(
            TeamSeasonRow(
                season="synth",
                team=f"T{i:02d}",
                ortg=intercept + slope * x[feature_index],
                features=x,
            )
        )
    data = Dataset(rows=rows)
    data.validate()
    return data
