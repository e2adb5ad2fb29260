from typing import Dict, Iterable, Tuple

import numpy as np

from pairsim.errors import InsufficientImpostorsError, InvalidParamsError
from pairsim.geometry import pair_logit
from pairsim.losses import CircleParams
from pairsim.similarity import cosine_matrix, normalize_rows


def compute_recall_at_k(
    embeddings: np.ndarray, labels: np.ndarray, ks: Iterable[int]
) -> Dict[int, float]:
    """Fraction of queries with a same-class item among their k nearest
    neighbours by cosine. The query itself is excluded; ties go to the lower
    index."""
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n < 2:
        raise InvalidParamsError(f"recall@k needs at least 2 samples, got {n}")

    ks = sorted(set(int(k) for k in ks))
    if not ks:
        raise InvalidParamsError("no k values given")
    if ks[0] < 1 or ks[-1] >= n:
        raise InvalidParamsError(f"every k must lie in [1, {n - 1}], got {ks}")

    scores = cosine_matrix(normalize_rows(embeddings))
    np.fill_diagonal(scores, -np.inf)
    order = np.argsort(-scores, axis=1, kind="stable")

    matches = labels[order[:, : ks[-1]]] == labels[:, None]
    first_hit = np.where(matches.any(axis=1), np.argmax(matches, axis=1), ks[-1])

    return {k: float(np.mean(first_hit < k)) for k in ks}


def compute_tar_at_far(
    genuine_scores: np.ndarray, impostor_scores: np.ndarray, far_targets: Iterable[float]
) -> Dict[float, float]:
    """True-accept rate at each false-accept target.

    The threshold is the smallest observed score at which the fraction of
    impostors scoring >= threshold is at most the target; acceptance is
    inclusive.
    """
    genuine = np.sort(np.asarray(genuine_scores, dtype=np.float64).reshape(-1))
    impostor = np.sort(np.asarray(impostor_scores, dtype=np.float64).reshape(-1))
    if genuine.size == 0 or impostor.size == 0:
        raise InvalidParamsError("genuine and impostor score lists must be non-empty")

    candidates = np.append(np.unique(np.concatenate([genuine, impostor])), np.inf)
    impostors_accepted = impostor.size - np.searchsorted(impostor, candidates, side="left")
    genuine_accepted = genuine.size - np.searchsorted(genuine, candidates, side="left")

    tar = {}
    for far in far_targets:
        if far < 1.0 / impostor.size:
            raise InsufficientImpostorsError(
                f"insufficient impostor pairs: FAR {far:g} needs at least "
                f"{int(np.ceil(1.0 / far))} impostors, got {impostor.size}"
            )
        allowed = np.flatnonzero(impostors_accepted <= far * impostor.size + 1e-9)
        tar[far] = float(genuine_accepted[allowed[0]] / genuine.size)

    return tar


def compute_scatter_points(
    scores: np.ndarray, labels: np.ndarray, all_pairs: bool = False
) -> Tuple[np.ndarray, int]:
    """(sn, sp) points of every anchor with at least one positive.

    By default one hardest pair (max sn, min sp) per anchor; `all_pairs`
    emits every (sn_j, sp_i) combination instead. Also returns how many
    anchors were skipped for lacking a positive or a negative.
    """
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    points = []
    skipped = 0

    for a in range(labels.shape[0]):
        positive = same[a].copy()
        positive[a] = False
        negative = ~same[a]
        if not positive.any() or not negative.any():
            skipped += 1
            continue

        sp = scores[a, positive]
        sn = scores[a, negative]
        if all_pairs:
            grid_sn, grid_sp = np.meshgrid(sn, sp, indexing="xy")
            points.append(np.column_stack([grid_sn.ravel(), grid_sp.ravel()]))
        else:
            points.append(np.array([[sn.max(), sp.min()]]))

    if not points:
        return np.zeros((0, 2)), skipped
    return np.concatenate(points, axis=0), skipped


def compute_scatter_concentration(points: np.ndarray) -> Tuple[np.ndarray, float]:
    """Mean point and total variance (trace of the covariance) of a scatter."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if points.shape[0] == 0:
        return np.full(2, np.nan), float("nan")
    return points.mean(axis=0), float(points.var(axis=0).sum())


def compute_boundary_satisfied_fraction(points: np.ndarray, params: CircleParams) -> float:
    """Fraction of (sn, sp) points strictly on the loss-satisfied side of the
    circle decision boundary."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if points.shape[0] == 0:
        return float("nan")
    return float(np.mean(pair_logit(points[:, 0], points[:, 1], params) < 0.0))


def compute_genuine_impostor_scores(
    embeddings: np.ndarray, labels: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Cosine of every unordered same-class pair and every cross-class pair."""
    labels = np.asarray(labels)
    scores = cosine_matrix(normalize_rows(embeddings))
    upper = np.triu_indices(labels.shape[0], k=1)
    same = labels[upper[0]] == labels[upper[1]]
    pair_scores = scores[upper]
    return pair_scores[same], pair_scores[~same]
