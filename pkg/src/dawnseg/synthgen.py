"""Deterministic synthetic nuclei scenes: instance maps, centroid point
annotations, and a stain-like RGB texture for visual checks.

Scenes are ellipses placed by dart throwing with a bounded retry budget; all
randomness flows from the scene seed, so identical specs produce identical
scenes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import PlacementInfeasible
from .raster import PointSet


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of one synthetic scene."""

    width: int = 96
    height: int = 96
    count: int = 8
    radius_range: tuple[float, float] = (5.0, 8.0)
    ellipticity_range: tuple[float, float] = (0.0, 0.0)
    min_spacing: float = 24.0
    allow_overlap: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if self.radius_range[0] <= 0 or self.radius_range[0] > self.radius_range[1]:
            raise ValueError(f"bad radius range {self.radius_range}")
        if not (0.0 <= self.ellipticity_range[0] <= self.ellipticity_range[1] < 1.0):
            raise ValueError(f"ellipticity must stay in [0, 1), got {self.ellipticity_range}")
        if self.min_spacing < 0:
            raise ValueError("min_spacing must be >= 0")


def _rasterize_ellipse(
    inst: np.ndarray, inst_id: int, cx: float, cy: float, a: float, b: float, angle: float
) -> None:
    h, w = inst.shape
    r = int(np.ceil(a)) + 1
    y0, y1 = max(0, int(cy) - r), min(h, int(cy) + r + 1)
    x0, x1 = max(0, int(cx) - r), min(w, int(cx) + r + 1)
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx = xs - cx
    dy = ys - cy
    cos, sin = np.cos(angle), np.sin(angle)
    u = (dx * cos + dy * sin) / a
    v = (-dx * sin + dy * cos) / b
    inside = (u * u + v * v) <= 1.0
    patch = inst[y0:y1, x0:x1]
    patch[inside & (patch == 0)] = inst_id


def generate_scene(spec: SceneSpec) -> tuple[np.ndarray, PointSet]:
    """Place ``count`` ellipse nuclei and return (instance map, centroid points).

    Placement is dart throwing: candidates violating the spacing/overlap
    constraints are rejected, with a total retry budget of 10x count before
    PlacementInfeasible is raised. Each annotation point is the instance's
    rounded pixel centroid, snapped onto the instance if rounding leaves it.
    """
    inst = np.zeros((spec.height, spec.width), dtype=np.int32)
    if spec.count == 0:
        return inst, PointSet((), spec.width, spec.height)
    rng = np.random.default_rng(spec.seed)
    r_lo, r_hi = spec.radius_range
    margin = r_hi + 1.0
    if spec.width - 2 * margin < 1 or spec.height - 2 * margin < 1:
        raise PlacementInfeasible("image too small for the requested radii")
    placed: list[tuple[float, float, float]] = []
    attempts = 0
    budget = 10 * spec.count
    while len(placed) < spec.count:
        if attempts >= budget:
            raise PlacementInfeasible(
                f"placed {len(placed)}/{spec.count} nuclei in {budget} attempts"
            )
        attempts += 1
        cx = rng.uniform(margin, spec.width - 1 - margin)
        cy = rng.uniform(margin, spec.height - 1 - margin)
        a = rng.uniform(r_lo, r_hi)
        ell = rng.uniform(*spec.ellipticity_range)
        angle = rng.uniform(0.0, np.pi)
        if not spec.allow_overlap:
            ok = all(
                np.hypot(cx - px, cy - py) >= max(spec.min_spacing, a + pa + 1.0)
                for px, py, pa in placed
            )
        else:
            ok = all(
                np.hypot(cx - px, cy - py) >= spec.min_spacing for px, py, _ in placed
            )
        if not ok:
            continue
        b = a * (1.0 - ell)
        _rasterize_ellipse(inst, len(placed) + 1, cx, cy, a, b, angle)
        placed.append((cx, cy, a))

    pts: list[tuple[int, int]] = []
    for inst_id in range(1, spec.count + 1):
        ys, xs = np.nonzero(inst == inst_id)
        px = int(np.floor(xs.mean() + 0.5))
        py = int(np.floor(ys.mean() + 0.5))
        if inst[py, px] != inst_id:
            # rounding can leave a clipped/concave instance; snap to nearest pixel
            k = np.argmin((xs - px) ** 2 + (ys - py) ** 2)
            px, py = int(xs[k]), int(ys[k])
        pts.append((px, py))
    return inst, PointSet(tuple(pts), spec.width, spec.height)


def render_texture(inst: np.ndarray, seed: int = 0) -> np.ndarray:
    """Stain-like RGB rendering: pinkish background, purple nuclei with
    per-instance intensity jitter, mild noise and smoothing."""
    rng = np.random.default_rng(seed)
    h, w = inst.shape
    img = np.empty((h, w, 3), dtype=np.float64)
    img[:, :] = (231.0, 205.0, 222.0)
    base = np.array((120.0, 82.0, 158.0))
    for inst_id in np.unique(inst):
        if inst_id <= 0:
            continue
        jitter = rng.uniform(-18.0, 18.0, size=3)
        img[inst == inst_id] = base + jitter
    img += rng.normal(0.0, 4.0, size=img.shape)
    for c in range(3):
        img[:, :, c] = ndimage.gaussian_filter(img[:, :, c], sigma=0.6)
    return np.clip(img, 0, 255).astype(np.uint8)
