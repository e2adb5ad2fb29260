"""Decision boundaries in the (sn, sp) plane and gradient-field tables."""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import pandas as pd

from pairsim.config import GridSpec
from pairsim.errors import DegenerateBoundaryError, InvalidParamsError
from pairsim.grads import loss_and_grad
from pairsim.loss_type import LossType
from pairsim.losses import CircleParams, LossParams
from pairsim.similarity import SimilarityGroup

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class BoundaryCircle:
    center_sn: float
    center_sp: float
    radius: float

    def contains(self, sn: ArrayLike, sp: ArrayLike) -> ArrayLike:
        return (np.asarray(sn) - self.center_sn) ** 2 + (
            np.asarray(sp) - self.center_sp
        ) ** 2 < self.radius**2

    def points(self, n: int = 512) -> Tuple[np.ndarray, np.ndarray]:
        """`n` points around the full circle, counter-clockwise from angle 0."""
        angles = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return (
            self.center_sn + self.radius * np.cos(angles),
            self.center_sp + self.radius * np.sin(angles),
        )


def decision_boundary(p: CircleParams) -> BoundaryCircle:
    """Circle on which the single-pair weighted logit vanishes.

    center ((On+Dn)/2, (Op+Dp)/2), radius^2 = ((On-Dn)^2 + (Op-Dp)^2) / 4.
    Reduced mode gives center (0, 1) and radius sqrt(2)*m.
    """
    if p.is_reduced and p.m <= 0.0:
        raise DegenerateBoundaryError(
            f"degenerate boundary: reduced mode needs m > 0, got {p.m}"
        )

    c = ((p.On - p.Dn) ** 2 + (p.Op - p.Dp) ** 2) / 4.0
    if not c > 0.0:
        raise DegenerateBoundaryError()

    return BoundaryCircle((p.On + p.Dn) / 2.0, (p.Op + p.Dp) / 2.0, math.sqrt(c))


def convergence_target(m: float) -> Tuple[float, float]:
    """Boundary point (m, 1-m) with the smallest gap sp - sn."""
    if not 0.0 < m < 1.0:
        raise InvalidParamsError(f"convergence target needs 0 < m < 1, got {m}")
    return m, 1.0 - m


def pair_logit(sn: ArrayLike, sp: ArrayLike, p: CircleParams) -> ArrayLike:
    """alpha_n*(sn - Dn) - alpha_p*(sp - Dp) for a single (sn, sp) pair.

    Negative on the loss-satisfied side of the circle boundary.
    """
    sn = np.asarray(sn, dtype=np.float64)
    sp = np.asarray(sp, dtype=np.float64)
    alpha_n = np.maximum(sn - p.On, 0.0)
    alpha_p = np.maximum(p.Op - sp, 0.0)
    return alpha_n * (sn - p.Dn) - alpha_p * (sp - p.Dp)


def on_boundary(sn: float, sp: float, p: CircleParams, tol: float = 1e-9) -> bool:
    if not tol > 0:
        raise InvalidParamsError(f"tolerance must be positive, got {tol}")
    return bool(abs(pair_logit(sn, sp, p)) <= tol)


def line_boundary_gap(sn: ArrayLike, sp: ArrayLike, m: float) -> ArrayLike:
    """sn - sp + m: zero on the straight boundary of the unified loss."""
    return np.asarray(sn) - np.asarray(sp) + m


def tangent_relaxation(am_margin: float) -> float:
    """Relaxation m whose reduced circle touches the line sp - sn = am_margin.

    The center (0, 1) lies (1 - am_margin)/sqrt(2) from the line, so the radius
    sqrt(2)*m matches it at m = (1 - am_margin)/2.
    """
    if not 0.0 < am_margin < 1.0:
        raise InvalidParamsError(f"additive margin must lie in (0, 1), got {am_margin}")
    return (1.0 - am_margin) / 2.0


def gradient_field(
    loss_type: LossType, params: LossParams, grid: GridSpec = GridSpec()
) -> pd.DataFrame:
    """Loss and score gradients of the single-pair (K = L = 1) case on a grid.

    Rows are emitted row-major: sp is the outer loop, sn the inner one.
    """
    sn_axis = np.linspace(grid.sn_range[0], grid.sn_range[1], grid.resolution)
    sp_axis = np.linspace(grid.sp_range[0], grid.sp_range[1], grid.resolution)

    rows = []
    for sp in sp_axis:
        for sn in sn_axis:
            result = loss_and_grad(loss_type, SimilarityGroup([sp], [sn]), params)
            rows.append((sn, sp, result.d_sn[0], result.d_sp[0], result.value))

    logger.debug(
        "gradient field for %s: %d x %d points", loss_type.value, grid.resolution, grid.resolution
    )
    return pd.DataFrame(rows, columns=["sn", "sp", "d_sn", "d_sp", "loss"])
