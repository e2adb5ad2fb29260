from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from pairsim.errors import (
    DegenerateFeatureError,
    EmptySimilaritySideError,
    InvalidParamsError,
)

VectorLike = Union[Sequence[float], np.ndarray]
VectorsLike = Union[Sequence[VectorLike], np.ndarray]


@dataclass(frozen=True, eq=False)
class SimilarityGroup:
    """Within-class scores `sp` (length K) and between-class scores `sn`
    (length L) attached to one anchor."""

    sp: np.ndarray
    sn: np.ndarray

    def __post_init__(self):
        sp = _as_score_vector(self.sp)
        sn = _as_score_vector(self.sn)

        if sp.size == 0 or sn.size == 0:
            raise EmptySimilaritySideError()

        if not (np.all(np.isfinite(sp)) and np.all(np.isfinite(sn))):
            raise InvalidParamsError("similarity scores must be finite (got NaN or inf)")

        object.__setattr__(self, "sp", sp)
        object.__setattr__(self, "sn", sn)

    @property
    def K(self) -> int:
        return int(self.sp.size)

    @property
    def L(self) -> int:
        return int(self.sn.size)

    @classmethod
    def from_scores(cls, sp: VectorLike, sn: VectorLike) -> "SimilarityGroup":
        return cls(np.asarray(sp, dtype=np.float64), np.asarray(sn, dtype=np.float64))

    def __repr__(self) -> str:
        return f"SimilarityGroup(sp={self.sp.tolist()}, sn={self.sn.tolist()})"


def _as_score_vector(values: VectorLike) -> np.ndarray:
    array = np.array(values, dtype=np.float64).reshape(-1)
    array.setflags(write=False)
    return array


def _as_feature(v: VectorLike) -> np.ndarray:
    array = np.asarray(v, dtype=np.float64)
    if array.ndim != 1 or array.size == 0:
        raise DegenerateFeatureError("degenerate feature: expected a non-empty vector")
    if not np.all(np.isfinite(array)):
        raise DegenerateFeatureError("degenerate feature: non-finite entries")
    return array


def _as_feature_rows(vectors: VectorsLike) -> np.ndarray:
    rows = np.asarray(vectors, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if not np.all(np.isfinite(rows)):
        raise DegenerateFeatureError("degenerate feature: non-finite entries")
    return rows


def l2_normalize(v: VectorLike) -> np.ndarray:
    """Scale `v` to unit Euclidean norm."""
    array = _as_feature(v)
    norm = np.linalg.norm(array)
    if norm == 0.0:
        raise DegenerateFeatureError()
    return array / norm


def normalize_rows(matrix: VectorsLike) -> np.ndarray:
    """Row-wise `l2_normalize` for a stack of vectors."""
    rows = _as_feature_rows(matrix)
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateFeatureError()
    return rows / norms[:, None]


def cosine(a: VectorLike, b: VectorLike) -> float:
    a = _as_feature(a)
    b = _as_feature(b)
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateFeatureError()

    value = float(np.dot(a, b) / (norm_a * norm_b))
    return float(np.clip(value, -1.0, 1.0))


def cosine_matrix(unit_rows: np.ndarray) -> np.ndarray:
    """All pairwise cosines of already normalized rows, clamped to [-1, 1]."""
    return np.clip(unit_rows @ unit_rows.T, -1.0, 1.0)


def _check_label(W: np.ndarray, label: int) -> None:
    if W.ndim != 2 or W.shape[0] < 2:
        raise InvalidParamsError(
            f"class-weight matrix needs at least 2 rows, got shape {W.shape}"
        )
    if not 0 <= label < W.shape[0]:
        raise InvalidParamsError(
            f"label {label} out of range for {W.shape[0]} classes"
        )


def class_similarities(x: VectorLike, W: VectorsLike, label: int) -> SimilarityGroup:
    """Cosine against the target row (sp, K=1) and every other row (sn,
    ascending class index, L=N-1)."""
    W = _as_feature_rows(W)
    _check_label(W, label)

    x_unit = l2_normalize(x)
    W_unit = normalize_rows(W)
    scores = np.clip(W_unit @ x_unit, -1.0, 1.0)

    return SimilarityGroup(scores[label : label + 1], np.delete(scores, label))


def class_inner_products(x: VectorLike, W: VectorsLike, label: int) -> SimilarityGroup:
    """Same split as `class_similarities` but with raw inner products (plain Softmax logits)."""
    W = _as_feature_rows(W)
    _check_label(W, label)

    scores = W @ _as_feature(x)
    return SimilarityGroup(scores[label : label + 1], np.delete(scores, label))


def pairwise_similarities(
    anchor: VectorLike, positives: VectorsLike, negatives: VectorsLike
) -> SimilarityGroup:
    if len(positives) == 0 or len(negatives) == 0:
        raise EmptySimilaritySideError()

    anchor_unit = l2_normalize(anchor)
    sp = np.clip(normalize_rows(positives) @ anchor_unit, -1.0, 1.0)
    sn = np.clip(normalize_rows(negatives) @ anchor_unit, -1.0, 1.0)

    return SimilarityGroup(sp, sn)
