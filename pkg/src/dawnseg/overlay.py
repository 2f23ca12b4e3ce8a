"""Audit overlays: instance maps colored by id hash with annotation markers."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .raster import PointSet

# Knuth multiplicative hash; odd, so id -> color is bijective mod 2^24 and
# ids below 2^24 can never collide or map to black.
_HASH = 2654435761

POINT_COLOR = (255, 40, 40)


def id_color(inst_id: int) -> tuple[int, int, int]:
    v = (inst_id * _HASH) & 0xFFFFFF
    return (v >> 16) & 0xFF, (v >> 8) & 0xFF, v & 0xFF


def emit_overlay(
    image: np.ndarray | None,
    mask: np.ndarray,
    points: PointSet,
    out: str | Path,
) -> None:
    """Write a PNG of the mask/instance map with point markers.

    Instance ids get deterministic hash colors (solid on black; 50% blend when
    a background image is given); a binary mask renders as a single light
    gray. Points draw as 3x3 crosses.
    """
    mask = np.asarray(mask)
    h, w = mask.shape
    if image is not None:
        canvas = np.asarray(image, dtype=np.float64).copy()
        if canvas.shape[:2] != (h, w):
            raise ValueError(f"image {canvas.shape[:2]} vs mask {(h, w)}")
        if canvas.ndim == 2:
            canvas = np.repeat(canvas[:, :, None], 3, axis=2)
    else:
        canvas = np.zeros((h, w, 3), dtype=np.float64)

    ids = np.unique(mask)
    binary = set(ids.tolist()) <= {0, 1}
    for inst_id in ids:
        if inst_id <= 0:
            continue
        color = np.asarray(
            (210, 210, 210) if binary else id_color(int(inst_id)), dtype=np.float64
        )
        sel = mask == inst_id
        if image is None:
            canvas[sel] = color
        else:
            canvas[sel] = 0.5 * canvas[sel] + 0.5 * color

    out_img = np.clip(canvas, 0, 255).astype(np.uint8)
    for x, y in points.points:
        for dx, dy in ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)):
            px, py = x + dx, y + dy
            if 0 <= px < w and 0 <= py < h:
                out_img[py, px] = POINT_COLOR
    Image.fromarray(out_img, mode="RGB").save(out)
