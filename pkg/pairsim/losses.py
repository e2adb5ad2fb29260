"""Forward evaluation of the pair-similarity loss family.

Every loss here has the shape ``log(1 + sum_j exp(a_j) * sum_i exp(b_i))``
with between-class logits ``a`` and within-class logits ``b``. It is evaluated
as ``logaddexp(0, logsumexp(a) + logsumexp(b))`` so that large scale factors
never overflow and tiny losses stay strictly positive.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from pairsim.errors import InvalidParamsError
from pairsim.loss_type import LossType, SimilarityKind
from pairsim.similarity import SimilarityGroup

logger = logging.getLogger(__name__)

# hinge arguments within a few ulps of zero are treated as the kink itself
_HINGE_ULPS = 8.0


@dataclass(frozen=True)
class UnifiedParams:
    gamma: float
    m: float = 0.0
    kind: SimilarityKind = SimilarityKind.COSINE

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidParamsError(f"gamma must be positive and finite, got {self.gamma}")
        if not math.isfinite(self.m):
            raise InvalidParamsError(f"margin must be finite, got {self.m}")
        if self.kind == SimilarityKind.INNER_PRODUCT and (self.gamma != 1.0 or self.m != 0.0):
            raise InvalidParamsError(
                "inner_product similarity requires gamma=1 and m=0 (plain Softmax)"
            )


@dataclass(frozen=True)
class CircleParams:
    """Scale factor plus optima (Op, On) and margins (Dp, Dn).

    Reduced mode derives all four from the relaxation factor m:
    Op = 1+m, On = -m, Dp = 1-m, Dn = m. Use `CircleParams.reduced` and
    `CircleParams.general` instead of the constructor.
    """

    gamma: float
    Op: float
    On: float
    Dp: float
    Dn: float
    m: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidParamsError(f"gamma must be positive and finite, got {self.gamma}")
        for name in ("Op", "On", "Dp", "Dn"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParamsError(f"{name} must be finite")
        # reduced mode derives the ordering from m, and m < 0 swaps it
        if not self.is_reduced and (self.Op < self.Dp or self.Dn < self.On):
            raise InvalidParamsError(
                f"circle parameters need Op >= Dp and Dn >= On, got "
                f"Op={self.Op}, Dp={self.Dp}, On={self.On}, Dn={self.Dn}"
            )

    @classmethod
    def reduced(cls, gamma: float, m: float) -> "CircleParams":
        # negative relaxations are legal for sweeps; geometry checks the radius
        if not (math.isfinite(m) and -1.0 < m < 1.0):
            raise InvalidParamsError(f"reduced-mode m must lie in (-1, 1), got {m}")
        return cls(gamma=gamma, Op=1.0 + m, On=-m, Dp=1.0 - m, Dn=m, m=m)

    @classmethod
    def general(
        cls, gamma: float, Op: float, On: float, Dp: float = 0.0, Dn: float = 0.0
    ) -> "CircleParams":
        """Explicit optima and margins. Dp = Dn = 0 gives the marginless form."""
        return cls(gamma=gamma, Op=Op, On=On, Dp=Dp, Dn=Dn, m=None)

    @property
    def is_reduced(self) -> bool:
        return self.m is not None


LossParams = Union[UnifiedParams, CircleParams]


def _softplus_of_lse(neg_logits: np.ndarray, pos_logits: np.ndarray) -> float:
    combined = logsumexp(neg_logits) + logsumexp(pos_logits)
    return float(np.logaddexp(0.0, combined))


def unified_loss(g: SimilarityGroup, p: UnifiedParams) -> float:
    return _softplus_of_lse(p.gamma * (g.sn + p.m), -p.gamma * g.sp)


def am_softmax_loss(
    sp: float,
    sn: Sequence[float],
    p: UnifiedParams,
    kind: Optional[SimilarityKind] = None,
) -> float:
    """Additive-margin softmax cross-entropy for a single target score.

    Evaluated in the rearranged form ``log(1 + sum_j exp(gamma*(sn_j+m)) * exp(-gamma*sp))``
    which equals `unified_loss` with K=1. With m=0 this is NormFace; with
    inner products, gamma=1 and m=0 it is plain Softmax cross-entropy.
    """
    if kind is not None and kind != p.kind:
        p = UnifiedParams(p.gamma, p.m, kind)

    g = SimilarityGroup.from_scores([sp], sn)
    return unified_loss(g, p)


def _hinge_argument(g: SimilarityGroup, m: float) -> Tuple[float, int, int]:
    j = int(np.argmax(g.sn))
    i = int(np.argmin(g.sp))
    argument = (g.sn[j] - g.sp[i]) + m

    scale = abs(g.sn[j]) + abs(g.sp[i]) + abs(m)
    if abs(argument) <= _HINGE_ULPS * np.finfo(np.float64).eps * scale:
        argument = 0.0

    return float(argument), i, j


def triplet_hard_loss(g: SimilarityGroup, m: float) -> float:
    argument, _, _ = _hinge_argument(g, m)
    return max(0.0, argument)


def circle_weights(g: SimilarityGroup, p: CircleParams) -> Tuple[np.ndarray, np.ndarray]:
    alpha_p = np.maximum(p.Op - g.sp, 0.0)
    alpha_n = np.maximum(g.sn - p.On, 0.0)
    return alpha_p, alpha_n


def circle_logits(
    g: SimilarityGroup,
    p: CircleParams,
    alpha_p: Optional[np.ndarray] = None,
    alpha_n: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted between-class and within-class logits.

    Passing `alpha_p`/`alpha_n` freezes the weighting factors, which is how
    the loss looks to back-propagation.
    """
    if alpha_p is None or alpha_n is None:
        computed_p, computed_n = circle_weights(g, p)
        alpha_p = computed_p if alpha_p is None else alpha_p
        alpha_n = computed_n if alpha_n is None else alpha_n

    neg_logits = p.gamma * alpha_n * (g.sn - p.Dn)
    pos_logits = -p.gamma * alpha_p * (g.sp - p.Dp)
    return neg_logits, pos_logits


def circle_loss(g: SimilarityGroup, p: CircleParams) -> float:
    return _softplus_of_lse(*circle_logits(g, p))


def circle_loss_frozen(
    g: SimilarityGroup, p: CircleParams, alpha_p: np.ndarray, alpha_n: np.ndarray
) -> float:
    return _softplus_of_lse(*circle_logits(g, p, alpha_p, alpha_n))


def unified_to_triplet_gap(g: SimilarityGroup, m: float, gamma: float) -> float:
    """Distance between the gamma-scaled unified loss and its hard-mining limit.

    Bounded by log(1 + K*L) / gamma.
    """
    soft = unified_loss(g, UnifiedParams(gamma, m)) / gamma
    return abs(soft - triplet_hard_loss(g, m))


def make_params(loss_type: LossType, gamma: float, m: float) -> LossParams:
    """Parameter object a loss id expects. NormFace forces m=0, Softmax gamma=1 and m=0."""
    if loss_type == LossType.CIRCLE:
        return CircleParams.reduced(gamma, m)
    if loss_type == LossType.NORMFACE:
        return UnifiedParams(gamma, 0.0)
    if loss_type == LossType.SOFTMAX:
        if gamma != 1.0 or m != 0.0:
            logger.warning(
                "softmax ignores gamma=%s, m=%s and uses gamma=1, m=0", gamma, m
            )
        return UnifiedParams(1.0, 0.0, SimilarityKind.INNER_PRODUCT)
    return UnifiedParams(gamma, m)


def check_params(loss_type: LossType, params: LossParams) -> None:
    expected = CircleParams if loss_type == LossType.CIRCLE else UnifiedParams
    if not isinstance(params, expected):
        raise InvalidParamsError(
            f"{loss_type.value} loss expects {expected.__name__}, got {type(params).__name__}"
        )


def evaluate_loss(loss_type: LossType, g: SimilarityGroup, params: LossParams) -> float:
    check_params(loss_type, params)

    if loss_type == LossType.CIRCLE:
        return circle_loss(g, params)
    if loss_type == LossType.TRIPLET:
        return triplet_hard_loss(g, params.m)
    if loss_type in (LossType.AM_SOFTMAX, LossType.NORMFACE, LossType.SOFTMAX) and g.K == 1:
        return am_softmax_loss(g.sp[0], g.sn, params)

    # pair-wise AM-Softmax/NormFace keep every positive in the unified form
    return unified_loss(g, params)
