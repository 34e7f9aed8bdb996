"""Shared fixtures: one dataset and one trained chip per session.

Training the reference net takes a couple of seconds, so everything
heavier than a unit test shares these session-scoped artifacts.  The
seeds here are the calibrated defaults the acceptance criteria were
tuned against; change them and the empirical bands move.
"""

import pytest

from acnn.arrows import DatasetSplit, generate_dataset
from acnn.bnn import TrainConfig, quantize, train_with_history
from acnn.capmap import compile_chip, quantize_chip

DATASET_SEED = 1
TRAIN_SEED = 0


@pytest.fixture(scope="session")
def dataset():
    return generate_dataset(DATASET_SEED)


@pytest.fixture(scope="session")
def mini_dataset(dataset):
    # enough samples for smoke training without the full cost
    return DatasetSplit(
        train=dataset.train[:600],
        test=dataset.test[:200],
        seed=dataset.seed,
        version=dataset.version,
    )


@pytest.fixture(scope="session")
def train_result(dataset):
    return train_with_history(dataset, TrainConfig(), seed=TRAIN_SEED)


@pytest.fixture(scope="session")
def qnet(train_result):
    return quantize(train_result.net)


@pytest.fixture(scope="session")
def exact_chip(qnet):
    return compile_chip(qnet)


@pytest.fixture(scope="session")
def chip(exact_chip):
    quantized, _ = quantize_chip(exact_chip)
    return quantized
