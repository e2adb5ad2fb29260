from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from pairsim.errors import DegenerateFeatureError, InvalidParamsError

SeedLike = Union[int, np.random.SeedSequence]


@dataclass
class EmbeddingCache:
    inputs: np.ndarray
    hidden_pre: Optional[np.ndarray]
    hidden: Optional[np.ndarray]
    raw: np.ndarray
    norms: np.ndarray
    units: np.ndarray


@dataclass
class EmbeddingModel:
    """One or two bias-free linear maps (tanh in between) followed by L2
    normalization, plus an optional class-weight matrix for class-level
    training.

    `layers[k]` has shape (fan_in, fan_out); `class_weights` has shape (N, D).
    """

    layers: List[np.ndarray]
    class_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        self.layers = [np.asarray(layer, dtype=np.float64) for layer in self.layers]
        if self.class_weights is not None:
            self.class_weights = np.asarray(self.class_weights, dtype=np.float64)

        if not 1 <= len(self.layers) <= 2:
            raise InvalidParamsError(f"model needs 1 or 2 layers, got {len(self.layers)}")
        if len(self.layers) == 2 and self.layers[0].shape[1] != self.layers[1].shape[0]:
            raise InvalidParamsError(
                f"layer shapes {self.layers[0].shape} and {self.layers[1].shape} do not chain"
            )
        if self.dim < 2:
            raise InvalidParamsError(f"embedding dimension must be >= 2, got {self.dim}")
        if self.class_weights is not None and (
            self.class_weights.ndim != 2 or self.class_weights.shape[1] != self.dim
        ):
            raise InvalidParamsError(
                f"class weights of shape {self.class_weights.shape} do not match dim {self.dim}"
            )
        for parameter in self.parameters():
            if not np.all(np.isfinite(parameter)):
                raise InvalidParamsError("model parameters must be finite")

    @property
    def din(self) -> int:
        return int(self.layers[0].shape[0])

    @property
    def dim(self) -> int:
        return int(self.layers[-1].shape[1])

    @property
    def hidden(self) -> Optional[int]:
        return int(self.layers[0].shape[1]) if len(self.layers) == 2 else None

    @property
    def n_classes(self) -> Optional[int]:
        return None if self.class_weights is None else int(self.class_weights.shape[0])

    def parameters(self) -> List[np.ndarray]:
        params = list(self.layers)
        if self.class_weights is not None:
            params.append(self.class_weights)
        return params

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(
            [layer.copy() for layer in self.layers],
            None if self.class_weights is None else self.class_weights.copy(),
        )

    def embed(self, X: np.ndarray) -> Tuple[np.ndarray, EmbeddingCache]:
        """Unit-norm embeddings of the rows of X and the cache `backward` needs."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.din:
            raise InvalidParamsError(f"expected inputs of width {self.din}, got shape {X.shape}")

        hidden_pre = hidden = None
        if len(self.layers) == 2:
            hidden_pre = X @ self.layers[0]
            hidden = np.tanh(hidden_pre)
            raw = hidden @ self.layers[1]
        else:
            raw = X @ self.layers[0]

        norms = np.linalg.norm(raw, axis=1)
        if np.any(norms == 0.0):
            raise DegenerateFeatureError("degenerate feature: zero embedding")
        units = raw / norms[:, None]

        return units, EmbeddingCache(X, hidden_pre, hidden, raw, norms, units)

    def embed_units(self, X: np.ndarray) -> np.ndarray:
        return self.embed(X)[0]

    def backward(self, cache: EmbeddingCache, d_units: np.ndarray) -> List[np.ndarray]:
        """Layer gradients given the gradient with respect to the unit embeddings."""
        radial = np.sum(d_units * cache.units, axis=1)
        d_raw = (d_units - radial[:, None] * cache.units) / cache.norms[:, None]

        if len(self.layers) == 1:
            return [cache.inputs.T @ d_raw]

        d_second = cache.hidden.T @ d_raw
        d_hidden = (d_raw @ self.layers[1].T) * (1.0 - cache.hidden**2)
        d_first = cache.inputs.T @ d_hidden
        return [d_first, d_second]

    @classmethod
    def identity(cls, dim: int, class_weights: Optional[np.ndarray] = None) -> "EmbeddingModel":
        return cls([np.eye(dim)], class_weights)


def init_model(
    seed: SeedLike,
    din: int,
    dim: int,
    n_classes: Optional[int] = None,
    hidden: Optional[int] = None,
) -> EmbeddingModel:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, deterministic per seed."""
    for name, value in (("din", din), ("dim", dim), ("n_classes", n_classes), ("hidden", hidden)):
        if value is not None and value < 1:
            raise InvalidParamsError(f"{name} must be positive, got {value}")

    rng = np.random.default_rng(seed)

    def uniform(fan_in: int, shape: Tuple[int, int]) -> np.ndarray:
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    if hidden is None:
        layers = [uniform(din, (din, dim))]
    else:
        layers = [uniform(din, (din, hidden)), uniform(hidden, (hidden, dim))]

    class_weights = None if n_classes is None else uniform(dim, (n_classes, dim))
    return EmbeddingModel(layers, class_weights)
