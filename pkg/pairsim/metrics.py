import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from pairsim.data import LabeledDataset
from pairsim.errors import InsufficientImpostorsError
from pairsim.losses import CircleParams
from pairsim.metric_compute_functions import (
    compute_boundary_satisfied_fraction,
    compute_genuine_impostor_scores,
    compute_recall_at_k,
    compute_scatter_concentration,
    compute_scatter_points,
    compute_tar_at_far,
)
from pairsim.model import EmbeddingModel
from pairsim.similarity import cosine_matrix

logger = logging.getLogger(__name__)

DEFAULT_KS = (1, 2, 4, 8)
DEFAULT_FAR_TARGETS = (1e-4, 1e-3, 1e-2, 1e-1)


@dataclass
class MetricsReport:
    recall_at_k: Dict[int, float]
    rank1: float
    tar_at_far: Dict[float, float]
    # (max sn, min sp) per anchor, or every pair in all-pairs mode
    pair_scatter: np.ndarray
    scatter_mean: np.ndarray
    scatter_variance: float
    satisfied_fraction: float
    skipped_anchors: int = 0
    boundary_m: Optional[float] = None

    def jsonify(self) -> dict:
        # convert arrays to lists and numpy scalars to native python types
        attributes = {}
        for key, value in self.__dict__.items():
            if key == "pair_scatter":
                continue
            if isinstance(value, np.ndarray):
                attributes[key] = value.tolist()
            elif isinstance(value, dict):
                attributes[key] = {str(k): float(v) for k, v in value.items()}
            elif isinstance(value, (np.integer, np.floating)):
                attributes[key] = value.item()
            else:
                attributes[key] = value

        attributes["scatter_points"] = int(self.pair_scatter.shape[0])
        return attributes

    def rows(self) -> list:
        """(metric, key, value) rows for the flat CSV report."""
        rows = [("recall_at_k", str(k), v) for k, v in sorted(self.recall_at_k.items())]
        rows.append(("rank1", "", self.rank1))
        rows += [("tar_at_far", f"{far:g}", v) for far, v in sorted(self.tar_at_far.items())]
        rows.append(("scatter_mean", "sn", float(self.scatter_mean[0])))
        rows.append(("scatter_mean", "sp", float(self.scatter_mean[1])))
        rows.append(("scatter_variance", "", self.scatter_variance))
        rows.append(("satisfied_fraction", "", self.satisfied_fraction))
        rows.append(("skipped_anchors", "", float(self.skipped_anchors)))
        return rows


def similarity_scatter(
    model: EmbeddingModel, dataset: LabeledDataset, all_pairs: bool = False
) -> np.ndarray:
    """Hardest (max sn, min sp) pair of every anchor over the whole dataset.

    Anchors without a same-class partner are skipped with a warning.
    """
    points, _ = _scatter_with_skips(model.embed_units(dataset.features), dataset.labels, all_pairs)
    return points


def _scatter_with_skips(
    units: np.ndarray, labels: np.ndarray, all_pairs: bool
) -> Tuple[np.ndarray, int]:
    points, skipped = compute_scatter_points(cosine_matrix(units), labels, all_pairs)
    if skipped:
        logger.warning("skipped %d anchors without a positive or negative partner", skipped)
    return points, skipped


class MetricsCalculator:
    """Retrieval, verification and convergence-scatter metrics of a model on a dataset."""

    def __init__(
        self,
        ks: Sequence[int] = DEFAULT_KS,
        far_targets: Sequence[float] = DEFAULT_FAR_TARGETS,
        boundary: Optional[CircleParams] = None,
        all_pairs: bool = False,
    ):
        self.ks = tuple(ks)
        self.far_targets = tuple(far_targets)
        self.boundary = boundary or CircleParams.reduced(256.0, 0.25)
        self.all_pairs = all_pairs

    def _usable_ks(self, n: int) -> Iterable[int]:
        usable = [k for k in self.ks if k < n]
        if len(usable) < len(self.ks):
            logger.warning("dropping k values >= corpus size %d: %s", n, [k for k in self.ks if k >= n])
        return usable or [1]

    def _tar(self, genuine: np.ndarray, impostor: np.ndarray) -> Dict[float, float]:
        if genuine.size == 0 or impostor.size == 0:
            logger.warning("no genuine or impostor pairs, skipping TAR@FAR")
            return {}

        tar = {}
        for far in self.far_targets:
            try:
                tar.update(compute_tar_at_far(genuine, impostor, [far]))
            except InsufficientImpostorsError:
                logger.warning(
                    "FAR %g not reachable with %d impostor pairs, skipped", far, impostor.size
                )
        return tar

    def compute(self, model: EmbeddingModel, dataset: LabeledDataset) -> MetricsReport:
        units = model.embed_units(dataset.features)

        recall = compute_recall_at_k(units, dataset.labels, self._usable_ks(len(dataset)))
        rank1 = recall.get(1, float("nan"))

        genuine, impostor = compute_genuine_impostor_scores(units, dataset.labels)
        tar = self._tar(genuine, impostor)

        points, skipped = _scatter_with_skips(units, dataset.labels, self.all_pairs)
        mean, variance = compute_scatter_concentration(points)
        satisfied = compute_boundary_satisfied_fraction(points, self.boundary)

        logger.info(
            "R@1 %.4f, scatter variance %.6f, satisfied fraction %.4f", rank1, variance, satisfied
        )

        return MetricsReport(
            recall_at_k=recall,
            rank1=rank1,
            tar_at_far=tar,
            pair_scatter=points,
            scatter_mean=mean,
            scatter_variance=variance,
            satisfied_fraction=satisfied,
            skipped_anchors=skipped,
            boundary_m=self.boundary.m,
        )
