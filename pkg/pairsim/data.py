from dataclasses import dataclass
from typing import List

import numpy as np

from pairsim.config import ClusterSpec
from pairsim.errors import InvalidParamsError
from pairsim.similarity import normalize_rows


@dataclass(eq=False)
class LabeledDataset:
    """M feature rows of width Din with integer labels covering [0, N)."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)

        if self.features.ndim != 2 or self.features.shape[1] < 1:
            raise InvalidParamsError(f"features must be an M x Din matrix, got shape {self.features.shape}")
        if labels.ndim != 1 or labels.shape[0] != self.features.shape[0]:
            raise InvalidParamsError(
                f"expected {self.features.shape[0]} labels, got shape {labels.shape}"
            )
        if labels.size and not np.all(labels == np.round(labels)):
            raise InvalidParamsError("labels must be integers")
        self.labels = labels.astype(np.int64)

        if not np.all(np.isfinite(self.features)):
            raise InvalidParamsError("features must be finite")
        if self.labels.size and self.labels.min() < 0:
            raise InvalidParamsError(f"negative label {int(self.labels.min())}")

        n_classes = self.n_classes
        if n_classes < 2 or len(self) < n_classes:
            raise InvalidParamsError(
                f"dataset needs at least 2 classes and M >= N, got M={len(self)}, N={n_classes}"
            )
        missing = np.setdiff1d(np.arange(n_classes), self.labels)
        if missing.size:
            raise InvalidParamsError(f"class ids {missing.tolist()} never appear")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    @property
    def din(self) -> int:
        return int(self.features.shape[1])

    def indices_by_class(self) -> List[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.n_classes)]

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def equals(self, other: "LabeledDataset") -> bool:
        return np.array_equal(self.features, other.features) and np.array_equal(
            self.labels, other.labels
        )


@dataclass(eq=False)
class Batch:
    features: np.ndarray
    labels: np.ndarray
    # rows of the source dataset, in batch order
    indices: np.ndarray

    @classmethod
    def from_indices(cls, dataset: LabeledDataset, indices: np.ndarray) -> "Batch":
        indices = np.asarray(indices, dtype=np.int64)
        return cls(dataset.features[indices], dataset.labels[indices], indices)

    def __len__(self) -> int:
        return int(self.labels.shape[0])


def gen_clusters(spec: ClusterSpec) -> LabeledDataset:
    """Gaussian clusters around centers drawn uniformly on the sphere of
    radius `center_scale`. Rows are class-major."""
    rng = np.random.default_rng(spec.seed)

    directions = rng.standard_normal((spec.n_classes, spec.dim))
    centers = spec.center_scale * normalize_rows(directions)

    labels = np.repeat(np.arange(spec.n_classes), spec.per_class)
    noise = rng.normal(0.0, spec.noise_sigma, size=(labels.size, spec.dim))

    return LabeledDataset(centers[labels] + noise, labels)
