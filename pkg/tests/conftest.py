"""Session fixtures for the two full-scale training runs.

Both runs use the library defaults end to end and take about a minute
each, so every module that needs a trained model shares these instead of
training its own.
"""
import time
from types import SimpleNamespace

import pytest

from projpose.compatibility import random_compatible_volume
from projpose.dataset import generate_dataset
from projpose.vae import TrainConfig, train
from projpose.volumes import mirror_symmetric_triangle


def _run(volume):
    dataset = generate_dataset(volume, 2000, width=64, seed=1, val_fraction=0.1)
    start = time.perf_counter()
    model, histories = train(dataset, TrainConfig())
    seconds = time.perf_counter() - start
    return SimpleNamespace(
        volume=volume,
        dataset=dataset,
        model=model,
        histories=histories,
        train_seconds=seconds,
    )


@pytest.fixture(scope="session")
def compatible_run():
    """Defaults on an injective 3-point volume: pose inference should work."""
    return _run(random_compatible_volume(3, 7))


@pytest.fixture(scope="session")
def mirror_run():
    """Defaults on a reflection-symmetric volume: inference must fold."""
    return _run(mirror_symmetric_triangle())
