"""Supervision targets from point annotations and instance masks.

Point annotations expand into an extended Gaussian encoding over nearest-point
distance D: ``exp(-D^2 / 2 sigma^2)`` inside the nucleus radius ``r1``, 0 in
the background ring ``r1 < D <= r2``, and -1 (excluded from training) beyond
``r2``. Instance masks expand into a foreground mask plus horizontal/vertical
distance targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyPointSet
from .raster import PointSet, distance_to_points, instance_distance_maps

EXCLUDED = -1.0
FOREGROUND_WEIGHT = 10.0
BACKGROUND_WEIGHT = 1.0


@dataclass(frozen=True)
class EncodingParams:
    """Radii and spread of the extended Gaussian encoding (pixels)."""

    r1: float
    r2: float
    sigma: float
    tag: str = ""

    def __post_init__(self) -> None:
        if not (0 < self.r1 < self.r2):
            raise ValueError(f"need 0 < r1 < r2, got r1={self.r1}, r2={self.r2}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def gaussian_encode(
    points: PointSet,
    params: EncodingParams,
    shape: tuple[int, int] | None = None,
) -> np.ndarray:
    """Extended Gaussian encoding of point annotations.

    Values are ``exp(-D^2 / 2 sigma^2)`` where ``D <= r1``, 0 where
    ``r1 < D <= r2``, and -1 elsewhere (-1 pixels do not participate in
    training). D is the exact Euclidean distance to the nearest point.
    """
    if points.is_empty:
        raise EmptyPointSet("gaussian_encode requires at least one point")
    d = distance_to_points(points, shape)
    enc = np.full(d.shape, EXCLUDED, dtype=np.float64)
    ring = d <= params.r2
    enc[ring] = 0.0
    core = d <= params.r1
    enc[core] = np.exp(-np.square(d[core]) / (2.0 * params.sigma**2))
    return enc


def weight_map(
    points: PointSet,
    params: EncodingParams,
    shape: tuple[int, int] | None = None,
) -> np.ndarray:
    """Training weights for the detection loss.

    Weight 10 where ``D < r1`` (foreground emphasis), 1 where
    ``r1 <= D <= r2``, and 0 beyond ``r2`` (excluded). The pixel set with
    positive weight is the loss domain Omega.
    """
    if points.is_empty:
        raise EmptyPointSet("weight_map requires at least one point")
    d = distance_to_points(points, shape)
    w = np.zeros(d.shape, dtype=np.float64)
    w[d <= params.r2] = BACKGROUND_WEIGHT
    w[d < params.r1] = FOREGROUND_WEIGHT
    return w


def segmentation_targets(
    inst: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Foreground mask and hover targets for a pixel-level instance map."""
    inst = np.asarray(inst)
    fg = (inst > 0).astype(np.uint8)
    h_x, h_y = instance_distance_maps(inst)
    return fg, h_x, h_y
