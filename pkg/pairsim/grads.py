import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import softmax

from pairsim.data import Batch
from pairsim.errors import InvalidParamsError, ReducedModeRequiredError
from pairsim.loss_type import GradientMode, LossType, Paradigm, SimilarityKind
from pairsim.losses import (
    CircleParams,
    LossParams,
    UnifiedParams,
    _hinge_argument,
    _softplus_of_lse,
    check_params,
    circle_logits,
    circle_loss_frozen,
    circle_weights,
    evaluate_loss,
)
from pairsim.model import EmbeddingModel
from pairsim.similarity import (
    SimilarityGroup,
    class_inner_products,
    class_similarities,
    cosine_matrix,
)

logger = logging.getLogger(__name__)

# (anchor row, positive columns, negative columns, scores)
AnchorScores = Tuple[int, np.ndarray, np.ndarray, SimilarityGroup]


@dataclass
class LossGrad:
    """Loss value with its gradient over the similarity scores.

    `z` is the attenuation prefactor 1 - exp(-value) shared by every entry.
    """

    value: float
    d_sp: np.ndarray
    d_sn: np.ndarray
    z: float


def _attenuation(value: float) -> float:
    return float(-np.expm1(-value))


def _lse_grad(
    neg_logits: np.ndarray,
    pos_logits: np.ndarray,
    neg_slope: np.ndarray,
    pos_slope: np.ndarray,
) -> LossGrad:
    """Chain rule for log(1 + sum exp(a) * sum exp(b)) given da/dsn and db/dsp."""
    value = _softplus_of_lse(neg_logits, pos_logits)
    z = _attenuation(value)

    d_sn = z * softmax(neg_logits) * neg_slope
    d_sp = z * softmax(pos_logits) * pos_slope
    return LossGrad(value, d_sp, d_sn, z)


def unified_grad(g: SimilarityGroup, p: UnifiedParams) -> LossGrad:
    neg_logits = p.gamma * (g.sn + p.m)
    pos_logits = -p.gamma * g.sp
    return _lse_grad(
        neg_logits,
        pos_logits,
        np.full(g.L, p.gamma),
        np.full(g.K, -p.gamma),
    )


def triplet_grad(g: SimilarityGroup, m: float) -> LossGrad:
    """Hinge subgradient: +1 on the hardest negative, -1 on the hardest positive."""
    argument, i, j = _hinge_argument(g, m)
    value = max(0.0, argument)

    d_sp = np.zeros(g.K)
    d_sn = np.zeros(g.L)
    if value > 0.0:
        d_sp[i] = -1.0
        d_sn[j] = 1.0

    return LossGrad(value, d_sp, d_sn, _attenuation(value))


def circle_grad(g: SimilarityGroup, p: CircleParams) -> LossGrad:
    """Gradient with the weighting factors held constant.

    d_sn[j] = Z * softmax_j(gamma * alpha_n * (sn - Dn)) * gamma * alpha_n[j]
    d_sp[i] = -Z * softmax_i(-gamma * alpha_p * (sp - Dp)) * gamma * alpha_p[i]

    In reduced mode gamma * alpha_n[j] = gamma * (sn[j] + m). Entries whose
    weighting factor is cut off have logit 0 and a zero gradient.
    """
    if not p.is_reduced:
        raise ReducedModeRequiredError()

    alpha_p, alpha_n = circle_weights(g, p)
    neg_logits, pos_logits = circle_logits(g, p, alpha_p, alpha_n)
    return _lse_grad(neg_logits, pos_logits, p.gamma * alpha_n, -p.gamma * alpha_p)


def circle_grad_full(g: SimilarityGroup, p: CircleParams) -> LossGrad:
    """Exact derivative of the forward loss, differentiating through alpha.

    Only used to study how far the back-propagated gradient departs from it.
    """
    alpha_p, alpha_n = circle_weights(g, p)
    neg_logits, pos_logits = circle_logits(g, p, alpha_p, alpha_n)

    active_n = alpha_n > 0.0
    active_p = alpha_p > 0.0
    neg_slope = np.where(active_n, p.gamma * (2.0 * g.sn - p.On - p.Dn), 0.0)
    pos_slope = np.where(active_p, p.gamma * (2.0 * g.sp - p.Op - p.Dp), 0.0)
    return _lse_grad(neg_logits, pos_logits, neg_slope, pos_slope)


def loss_and_grad(
    loss_type: LossType,
    g: SimilarityGroup,
    params: LossParams,
    mode: GradientMode = GradientMode.FROZEN,
) -> LossGrad:
    check_params(loss_type, params)

    if loss_type == LossType.CIRCLE:
        if mode == GradientMode.FULL:
            return circle_grad_full(g, params)
        return circle_grad(g, params)
    if loss_type == LossType.TRIPLET:
        return triplet_grad(g, params.m)
    return unified_grad(g, params)


def _excluded_entries(
    loss_type: LossType, g: SimilarityGroup, params: LossParams, eps: float
) -> Tuple[np.ndarray, np.ndarray]:
    skip_p = np.zeros(g.K, dtype=bool)
    skip_n = np.zeros(g.L, dtype=bool)

    if loss_type == LossType.CIRCLE:
        skip_p |= np.abs(g.sp - params.Op) <= eps
        skip_n |= np.abs(g.sn - params.On) <= eps

    elif loss_type == LossType.TRIPLET:
        argument, _, _ = _hinge_argument(g, params.m)
        if abs(argument) <= 2.0 * eps:
            skip_p[:] = True
            skip_n[:] = True
        # near-ties switch the hardest entry under perturbation
        for scores, skip in ((g.sp, skip_p), (g.sn, skip_n)):
            gaps = np.abs(scores[:, None] - scores[None, :])
            np.fill_diagonal(gaps, np.inf)
            skip |= np.any(gaps <= 2.0 * eps, axis=1)

    return skip_p, skip_n


def fd_check(
    loss_type: LossType,
    g: SimilarityGroup,
    params: LossParams,
    eps: float = 1e-5,
    mode: GradientMode = GradientMode.FROZEN,
) -> float:
    """Largest relative error between the analytic gradient and central differences.

    The analytic side is always the back-propagated gradient. In FROZEN mode
    the circle weighting factors stay at their unperturbed values while
    probing; FULL mode lets them move with the scores, which exposes the gap
    between the two. Relative error is |fd - analytic| / max(1, |analytic|).
    Entries within eps of a cut-off or hinge kink are left out.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise InvalidParamsError(f"eps must lie in [1e-7, 1e-3], got {eps}")

    analytic = loss_and_grad(loss_type, g, params)

    if loss_type == LossType.CIRCLE and mode == GradientMode.FROZEN:
        alpha_p, alpha_n = circle_weights(g, params)

        def objective(sp: np.ndarray, sn: np.ndarray) -> float:
            return circle_loss_frozen(SimilarityGroup(sp, sn), params, alpha_p, alpha_n)

    else:

        def objective(sp: np.ndarray, sn: np.ndarray) -> float:
            return evaluate_loss(loss_type, SimilarityGroup(sp, sn), params)

    skip_p, skip_n = _excluded_entries(loss_type, g, params, eps)

    worst = 0.0
    for side, analytic_side, skip in (
        ("sp", analytic.d_sp, skip_p),
        ("sn", analytic.d_sn, skip_n),
    ):
        for index in range(len(analytic_side)):
            if skip[index]:
                continue

            plus_sp, plus_sn = np.array(g.sp), np.array(g.sn)
            minus_sp, minus_sn = np.array(g.sp), np.array(g.sn)
            if side == "sp":
                plus_sp[index] += eps
                minus_sp[index] -= eps
            else:
                plus_sn[index] += eps
                minus_sn[index] -= eps

            fd = (objective(plus_sp, plus_sn) - objective(minus_sp, minus_sn)) / (2.0 * eps)
            an = analytic_side[index]
            worst = max(worst, abs(fd - an) / max(1.0, abs(an)))

    return worst


@dataclass
class ParamGradients:
    """Batch loss and its gradients with respect to the model parameters."""

    loss: float
    layer_grads: List[np.ndarray]
    class_weight_grad: Optional[np.ndarray]
    mean_sp: float
    mean_sn: float
    n_anchors: int
    # one (max sn, min sp) row per anchor
    hardest_pairs: np.ndarray
    alphas: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    def is_zero(self) -> bool:
        grads = list(self.layer_grads)
        if self.class_weight_grad is not None:
            grads.append(self.class_weight_grad)
        return all(not np.any(grad) for grad in grads)


def _anchor_groups(
    model: EmbeddingModel,
    batch: Batch,
    paradigm: Paradigm,
    kind: SimilarityKind,
) -> Tuple[np.ndarray, object, np.ndarray, List[AnchorScores]]:
    """Embed the batch and split every anchor's scores into a SimilarityGroup.

    Returns the unit embeddings, the forward cache, the score matrix and a list
    of (anchor, positive columns, negative columns, group).
    """
    units, cache = model.embed(batch.features)
    anchors = []

    if paradigm == Paradigm.PAIR_WISE:
        scores = cosine_matrix(units)
        same = batch.labels[:, None] == batch.labels[None, :]
        for a in range(len(batch.labels)):
            pos = np.flatnonzero(same[a])
            pos = pos[pos != a]
            neg = np.flatnonzero(~same[a])
            if pos.size == 0 or neg.size == 0:
                continue
            anchors.append((a, pos, neg, SimilarityGroup(scores[a, pos], scores[a, neg])))
        return units, cache, scores, anchors

    if model.class_weights is None:
        raise InvalidParamsError("class-level training needs class weights in the model")
    if batch.labels.max() >= model.n_classes:
        raise InvalidParamsError(
            f"label {int(batch.labels.max())} out of range for {model.n_classes} class weights"
        )

    similarity = class_inner_products if kind == SimilarityKind.INNER_PRODUCT else class_similarities
    scores = np.empty((len(batch.labels), model.n_classes))
    columns = np.arange(model.n_classes)
    for a, label in enumerate(batch.labels):
        group = similarity(units[a], model.class_weights, int(label))
        pos = columns[columns == label]
        neg = columns[columns != label]
        scores[a, pos] = group.sp
        scores[a, neg] = group.sn
        anchors.append((a, pos, neg, group))
    return units, cache, scores, anchors


def _params_kind(params: LossParams) -> SimilarityKind:
    return params.kind if isinstance(params, UnifiedParams) else SimilarityKind.COSINE


def backprop_to_params(
    model: EmbeddingModel,
    batch: Batch,
    loss_type: LossType,
    params: LossParams,
    paradigm: Paradigm,
) -> ParamGradients:
    """Mean anchor loss over the batch and its gradients with respect to the
    embedding layers (and class weights in the class-level paradigm).

    Score gradients come from `loss_and_grad` and flow back through the cosine
    Jacobian and the embedding normalization. Anchors are reduced in batch
    order.
    """
    check_params(loss_type, params)
    if batch.features.shape[1] != model.din:
        raise InvalidParamsError(
            f"batch has {batch.features.shape[1]} features, model expects {model.din}"
        )
    if paradigm == Paradigm.PAIR_WISE and _params_kind(params) == SimilarityKind.INNER_PRODUCT:
        raise InvalidParamsError("inner-product similarity is only defined for class-level training")

    kind = _params_kind(params)
    units, cache, scores, anchors = _anchor_groups(model, batch, paradigm, kind)

    d_scores = np.zeros_like(scores)
    total_loss = 0.0
    sp_values, sn_values, hardest, alphas = [], [], [], []
    n = len(anchors)

    for a, pos, neg, group in anchors:
        grad = loss_and_grad(loss_type, group, params)
        total_loss += grad.value
        d_scores[a, pos] += grad.d_sp / n
        d_scores[a, neg] += grad.d_sn / n

        sp_values.append(group.sp)
        sn_values.append(group.sn)
        hardest.append((group.sn.max(), group.sp.min()))
        if loss_type == LossType.CIRCLE:
            alphas.append(circle_weights(group, params))

    if n == 0:
        logger.warning("batch has no anchor with both a positive and a negative")
        return ParamGradients(
            loss=0.0,
            layer_grads=[np.zeros_like(layer) for layer in model.layers],
            class_weight_grad=None if model.class_weights is None else np.zeros_like(model.class_weights),
            mean_sp=float("nan"),
            mean_sn=float("nan"),
            n_anchors=0,
            hardest_pairs=np.zeros((0, 2)),
        )

    class_weight_grad = None
    if paradigm == Paradigm.PAIR_WISE:
        d_units = (d_scores + d_scores.T) @ units
        if model.class_weights is not None:
            class_weight_grad = np.zeros_like(model.class_weights)
    elif kind == SimilarityKind.INNER_PRODUCT:
        d_units = d_scores @ model.class_weights
        class_weight_grad = d_scores.T @ units
    else:
        w_norms = np.linalg.norm(model.class_weights, axis=1)
        w_units = model.class_weights / w_norms[:, None]
        d_units = d_scores @ w_units
        d_w_units = d_scores.T @ units
        radial = np.sum(d_w_units * w_units, axis=1)
        class_weight_grad = (d_w_units - radial[:, None] * w_units) / w_norms[:, None]

    layer_grads = model.backward(cache, d_units)

    return ParamGradients(
        loss=total_loss / n,
        layer_grads=layer_grads,
        class_weight_grad=class_weight_grad,
        mean_sp=float(np.mean(np.concatenate(sp_values))),
        mean_sn=float(np.mean(np.concatenate(sn_values))),
        n_anchors=n,
        hardest_pairs=np.asarray(hardest, dtype=np.float64),
        alphas=alphas,
    )


def batch_objective(
    model: EmbeddingModel,
    batch: Batch,
    loss_type: LossType,
    params: LossParams,
    paradigm: Paradigm,
    frozen_alphas: Optional[List[Tuple[np.ndarray, np.ndarray]]] = None,
) -> float:
    """Mean anchor loss of the batch, optionally with circle weights frozen.

    With `frozen_alphas` taken from `backprop_to_params` this is the scalar whose
    exact gradient `backprop_to_params` returns.
    """
    _, _, _, anchors = _anchor_groups(model, batch, paradigm, _params_kind(params))
    if not anchors:
        return 0.0

    freeze = frozen_alphas is not None and loss_type == LossType.CIRCLE

    total = 0.0
    for k, (_, _, _, group) in enumerate(anchors):
        if freeze:
            total += circle_loss_frozen(group, params, *frozen_alphas[k])
        else:
            total += evaluate_loss(loss_type, group, params)
    return total / len(anchors)
