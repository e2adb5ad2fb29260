import numpy as np

from pairsim.data import Batch, LabeledDataset
from pairsim.errors import SamplingError


def pk_sample(dataset: LabeledDataset, P: int, K: int, rng: np.random.Generator) -> Batch:
    """P distinct classes, K distinct samples from each, grouped by class.

    Classes and samples are drawn uniformly without replacement; the batch
    order is fixed by the generator state.
    """
    if P < 1 or K < 1:
        raise SamplingError(f"P and K must be positive, got P={P}, K={K}")
    if dataset.n_classes < P:
        raise SamplingError(f"cannot draw P={P} classes from {dataset.n_classes}")

    sizes = dataset.class_sizes()
    if sizes.min() < K:
        small = np.flatnonzero(sizes < K).tolist()
        raise SamplingError(f"classes {small} have fewer than K={K} samples")

    by_class = dataset.indices_by_class()
    classes = rng.choice(dataset.n_classes, size=P, replace=False)

    indices = np.concatenate(
        [rng.choice(by_class[c], size=K, replace=False) for c in classes]
    )
    return Batch.from_indices(dataset, indices)


def flat_sample(dataset: LabeledDataset, batch_size: int, rng: np.random.Generator) -> Batch:
    """`batch_size` distinct rows drawn uniformly, for class-level training."""
    if not 1 <= batch_size <= len(dataset):
        raise SamplingError(
            f"batch size {batch_size} must lie in [1, {len(dataset)}]"
        )
    return Batch.from_indices(dataset, rng.choice(len(dataset), size=batch_size, replace=False))
