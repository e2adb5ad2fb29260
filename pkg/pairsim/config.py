import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Dict, Optional, Tuple

from pairsim.errors import InvalidParamsError
from pairsim.loss_type import LossType, Paradigm

# learning rate multiplied by 0.1 at 50%, 70% and 90% of the iterations
DEFAULT_LR_SCHEDULE: Tuple[Tuple[float, float], ...] = ((0.5, 0.1), (0.7, 0.1), (0.9, 0.1))

# (gamma, m) per task family
CIRCLE_PRESETS: Dict[str, Tuple[float, float]] = {
    "face": (256.0, 0.25),
    "reid": (128.0, 0.25),
    "fine_grained": (80.0, 0.4),
}

GAMMA_SWEEP_VALUES = (32.0, 64.0, 128.0, 256.0, 512.0, 1024.0)
M_SWEEP_VALUES = tuple(round(-0.2 + 0.05 * k, 2) + 0.0 for k in range(11))


class LossDefaultsConfig:
    """(gamma, m) used when a run names a loss but not its hyper-parameters."""

    def __init__(self):

        self.defaults_per_loss: Dict[LossType, Tuple[float, float]] = dict()

        self.defaults_per_loss[LossType.CIRCLE] = CIRCLE_PRESETS["face"]
        self.defaults_per_loss[LossType.AM_SOFTMAX] = (64.0, 0.35)
        self.defaults_per_loss[LossType.UNIFIED] = (64.0, 0.35)
        self.defaults_per_loss[LossType.NORMFACE] = (64.0, 0.0)
        self.defaults_per_loss[LossType.SOFTMAX] = (1.0, 0.0)
        # gamma is unused by the hard-mining hinge
        self.defaults_per_loss[LossType.TRIPLET] = (1.0, 0.3)

    def get(self, loss: LossType) -> Tuple[float, float]:
        return self.defaults_per_loss[loss]


LOSS_DEFAULTS = LossDefaultsConfig()


@dataclass(frozen=True)
class ClusterSpec:
    n_classes: int = 16
    per_class: int = 20
    dim: int = 32
    center_scale: float = 0.5
    noise_sigma: float = 0.1
    seed: int = 7

    def __post_init__(self):
        if self.n_classes < 2:
            raise InvalidParamsError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.per_class < 1 or self.dim < 1:
            raise InvalidParamsError("per_class and dim must be positive")
        if not self.center_scale > 0:
            raise InvalidParamsError(f"center_scale must be positive, got {self.center_scale}")
        if not self.noise_sigma >= 0:
            raise InvalidParamsError(f"noise_sigma must be non-negative, got {self.noise_sigma}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid over the (sn, sp) plane."""

    sn_range: Tuple[float, float] = (0.0, 1.0)
    sp_range: Tuple[float, float] = (0.0, 1.0)
    resolution: int = 101

    def __post_init__(self):
        if self.resolution < 2:
            raise InvalidParamsError(
                f"grid resolution must be >= 2 per axis, got {self.resolution}"
            )
        for name, (low, high) in (("sn", self.sn_range), ("sp", self.sp_range)):
            if not -1.0 <= low < high <= 1.0:
                raise InvalidParamsError(
                    f"empty {name} range [{low}, {high}]; ranges must lie within [-1, 1]"
                )

    @classmethod
    def full(cls, resolution: int = 101) -> "GridSpec":
        return cls((-1.0, 1.0), (-1.0, 1.0), resolution)


@dataclass(frozen=True)
class TrainConfig:
    paradigm: Paradigm = Paradigm.PAIR_WISE
    loss: LossType = LossType.CIRCLE
    gamma: float = 256.0
    m: float = 0.25
    lr: float = 0.01
    lr_schedule: Tuple[Tuple[float, float], ...] = DEFAULT_LR_SCHEDULE
    iterations: int = 300
    batch_size: int = 64
    P: int = 16
    K: int = 5
    embed_dim: int = 32
    hidden: Optional[int] = None
    snapshot_every: int = 0
    seed: int = 0

    def __post_init__(self):
        if not self.lr > 0:
            raise InvalidParamsError(f"lr must be positive, got {self.lr}")
        if self.iterations < 0:
            raise InvalidParamsError(f"iterations must be non-negative, got {self.iterations}")
        if self.snapshot_every < 0:
            raise InvalidParamsError("snapshot_every must be non-negative")
        if self.paradigm == Paradigm.PAIR_WISE and (self.P < 2 or self.K < 2):
            raise InvalidParamsError(
                f"pair-wise batches need P >= 2 and K >= 2, got P={self.P}, K={self.K}"
            )
        if self.paradigm == Paradigm.CLASS_LEVEL and self.batch_size < 1:
            raise InvalidParamsError(f"batch_size must be positive, got {self.batch_size}")
        if self.loss == LossType.SOFTMAX and self.paradigm != Paradigm.CLASS_LEVEL:
            raise InvalidParamsError("softmax loss is only defined for class-level training")
        for fraction, multiplier in self.lr_schedule:
            if not (0.0 < fraction <= 1.0 and multiplier > 0.0):
                raise InvalidParamsError(
                    f"bad lr milestone ({fraction}, {multiplier}); need 0 < fraction <= 1, multiplier > 0"
                )

    def with_overrides(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        echo = asdict(self)
        echo["paradigm"] = self.paradigm.value
        echo["loss"] = self.loss.value
        echo["lr_schedule"] = [list(step) for step in self.lr_schedule]
        return echo

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParamsError(f"unknown train config keys: {sorted(unknown)}")

        values = dict(data)
        if "paradigm" in values:
            values["paradigm"] = Paradigm(values["paradigm"])
        if "loss" in values:
            values["loss"] = LossType(values["loss"])
        if "lr_schedule" in values:
            values["lr_schedule"] = tuple(tuple(step) for step in values["lr_schedule"])
        return cls(**values)


def config_hash(config: dict) -> str:
    """First 10 hex digits of the SHA-256 of the canonical JSON echo."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:10]
