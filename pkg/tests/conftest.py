import numpy as np
import pytest

from pairsim.config import ClusterSpec
from pairsim.data import LabeledDataset, gen_clusters


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_dataset() -> LabeledDataset:
    """4 classes x 6 samples in 8 dims."""
    return gen_clusters(ClusterSpec(n_classes=4, per_class=6, dim=8, center_scale=1.0, noise_sigma=0.1, seed=3))


@pytest.fixture
def separated_dataset() -> LabeledDataset:
    """Zero-noise clusters on the coordinate axes of a 4-dim space."""
    centers = np.eye(4)
    labels = np.repeat(np.arange(4), 3)
    return LabeledDataset(centers[labels], labels)
