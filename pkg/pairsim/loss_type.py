from enum import Enum


class LossType(Enum):
    CIRCLE = "circle"
    AM_SOFTMAX = "am_softmax"
    NORMFACE = "normface"
    SOFTMAX = "softmax"
    TRIPLET = "triplet"
    UNIFIED = "unified"

    @classmethod
    def ids(cls) -> list:
        return [member.value for member in cls]


class Paradigm(Enum):
    CLASS_LEVEL = "class_level"
    PAIR_WISE = "pair_wise"


class SimilarityKind(Enum):
    COSINE = "cosine"
    INNER_PRODUCT = "inner_product"


class GradientMode(Enum):
    # FROZEN treats the circle weighting factors as constants while differentiating
    FROZEN = "frozen"
    FULL = "full"


class SweepAxis(Enum):
    GAMMA = "gamma"
    M = "m"
