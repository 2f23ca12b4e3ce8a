"""Raster primitives shared by the whole pipeline.

Conventions: rasters are 2-D numpy arrays indexed ``[row, col]`` (= ``[y, x]``).
Instance maps are integer arrays with 0 = background and ids 1..K; binary
masks hold {0, 1}; distance fields hold Euclidean pixel distances as float64.
Annotation points are integer ``(x, y)`` coordinates.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyPointSet, RasterTooSmall, ShapeMismatch

# 8-connectivity structuring element; nuclei are blob-like and diagonal necks
# must not split a component.
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

# 3x3 Sobel stencils (correlation orientation: positive response on a ramp
# increasing along the axis). x = columns, y = rows.
SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T.copy()


def ensure_same_shape(*rasters: np.ndarray) -> None:
    """Raise ShapeMismatch unless all rasters share one 2-D shape."""
    shapes = {r.shape for r in rasters}
    if len(shapes) > 1:
        raise ShapeMismatch(f"rasters disagree in shape: {sorted(shapes)}")


@dataclass(frozen=True)
class PointSet:
    """Integer (x, y) point annotations inside a raster of known bounds.

    Points must lie inside the raster (0 <= x < width, 0 <= y < height).
    Duplicate coordinates are rejected unless ``allow_duplicates`` is set at
    construction (instance centroids of concave shapes can legitimately
    collide after rounding).
    """

    points: tuple[tuple[int, int], ...]
    width: int
    height: int
    allow_duplicates: InitVar[bool] = False

    def __post_init__(self, allow_duplicates: bool) -> None:
        pts = tuple((int(x), int(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        if self.width < 1 or self.height < 1:
            raise ValueError("point-set bounds must be at least 1x1")
        for x, y in pts:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ValueError(
                    f"point ({x}, {y}) outside bounds {self.width}x{self.height}"
                )
        if not allow_duplicates and len(set(pts)) != len(pts):
            raise ValueError("duplicate point coordinates")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    @property
    def shape(self) -> tuple[int, int]:
        """Raster shape (height, width) these points index into."""
        return (self.height, self.width)

    def as_array(self) -> np.ndarray:
        """Points as an (N, 2) int array of (x, y) rows."""
        if not self.points:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.points, dtype=np.int64)

    @classmethod
    def from_array(
        cls, arr: np.ndarray, width: int, height: int, allow_duplicates: bool = False
    ) -> "PointSet":
        pts = tuple((int(x), int(y)) for x, y in np.asarray(arr).reshape(-1, 2))
        return cls(pts, width, height, allow_duplicates)


def label_components(mask: np.ndarray) -> np.ndarray:
    """Label 8-connected foreground components with contiguous ids from 1.

    Background stays 0. Two foreground pixels share an id iff they are
    connected through foreground under 8-connectivity.
    """
    labeled, _ = ndimage.label(np.asarray(mask) > 0, structure=EIGHT_CONNECTED)
    return labeled.astype(np.int32)


def relabel(inst: np.ndarray) -> np.ndarray:
    """Remap positive instance ids onto the contiguous set 1..K (ascending)."""
    inst = np.asarray(inst)
    ids = np.unique(inst)
    ids = ids[ids > 0]
    out = np.zeros_like(inst, dtype=np.int32)
    for new_id, old_id in enumerate(ids, start=1):
        out[inst == old_id] = new_id
    return out


def instance_areas(inst: np.ndarray) -> dict[int, int]:
    """Pixel count per positive instance id."""
    ids, counts = np.unique(np.asarray(inst), return_counts=True)
    return {int(i): int(c) for i, c in zip(ids, counts) if i > 0}


def _squared_dt_1d(f: np.ndarray) -> np.ndarray:
    """Exact 1-D squared distance transform via the lower envelope of parabolas.

    ``f`` holds squared vertical distances per column (np.inf where the column
    has no seed); at least one entry must be finite.
    """
    n = f.size
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1, dtype=np.float64)
    finite = np.nonzero(np.isfinite(f))[0]
    k = 0
    v[0] = finite[0]
    z[0] = -np.inf
    z[1] = np.inf
    for q in finite[1:]:
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    out = np.empty(n, dtype=np.float64)
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        out[q] = (q - v[k]) ** 2 + f[v[k]]
    return out


def distance_to_points(
    points: PointSet, shape: tuple[int, int] | None = None
) -> np.ndarray:
    """Exact Euclidean distance from every pixel to its nearest point.

    Two-pass transform: a per-column sweep collects vertical distances to
    seeds, then a per-row lower-envelope pass resolves the full 2-D squared
    distance. Exact (not chamfer) because downstream thresholds compare
    against it directly.
    """
    if points.is_empty:
        raise EmptyPointSet("distance_to_points requires at least one point")
    if shape is None:
        shape = points.shape
    elif shape != points.shape:
        raise ShapeMismatch(
            f"target raster {shape} does not match point bounds {points.shape}"
        )
    h, w = shape
    coords = points.as_array()

    # pass 1: per column, |row distance| to the nearest seed in that column
    g = np.full((h, w), np.inf)
    g[coords[:, 1], coords[:, 0]] = 0.0
    for i in range(1, h):
        np.minimum(g[i], g[i - 1] + 1.0, out=g[i])
    for i in range(h - 2, -1, -1):
        np.minimum(g[i], g[i + 1] + 1.0, out=g[i])

    # pass 2: per row, lower envelope over squared distances
    g2 = np.square(g)
    out = np.empty_like(g2)
    for i in range(h):
        out[i] = _squared_dt_1d(g2[i])
    return np.sqrt(out)


def instance_distance_maps(inst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-instance horizontal/vertical distance maps normalized to [-1, 1].

    Within each instance, values measure the offset from the instance centroid
    column (resp. row), scaled so the leftmost pixel maps to -1 and the
    rightmost to +1 (top/bottom for the vertical map). Background is 0;
    degenerate extents (single column/row) stay 0.
    """
    inst = np.asarray(inst)
    h_x = np.zeros(inst.shape, dtype=np.float64)
    h_y = np.zeros(inst.shape, dtype=np.float64)
    for inst_id in np.unique(inst):
        if inst_id <= 0:
            continue
        ys, xs = np.nonzero(inst == inst_id)
        dx = xs - xs.mean()
        dy = ys - ys.mean()
        for d in (dx, dy):
            neg = d < 0
            pos = d > 0
            if neg.any():
                d[neg] /= -d.min()
            if pos.any():
                d[pos] /= d.max()
        h_x[ys, xs] = dx
        h_y[ys, xs] = dy
    return h_x, h_y


def _correlate3(raster: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """3x3 correlation with replicate (edge) padding."""
    h, w = raster.shape
    padded = np.pad(raster, 1, mode="edge")
    out = np.zeros((h, w), dtype=np.float64)
    for a in range(3):
        for b in range(3):
            k = kernel[a, b]
            if k != 0.0:
                out += k * padded[a : a + h, b : b + w]
    return out


def _correlate3_adjoint(grad: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Adjoint of ``_correlate3`` (folds replicate-padding contributions back)."""
    h, w = grad.shape
    gp = np.zeros((h + 2, w + 2), dtype=np.float64)
    for a in range(3):
        for b in range(3):
            k = kernel[a, b]
            if k != 0.0:
                gp[a : a + h, b : b + w] += k * grad
    out = gp[1:-1, 1:-1].copy()
    out[0, :] += gp[0, 1:-1]
    out[-1, :] += gp[-1, 1:-1]
    out[:, 0] += gp[1:-1, 0]
    out[:, -1] += gp[1:-1, -1]
    out[0, 0] += gp[0, 0]
    out[0, -1] += gp[0, -1]
    out[-1, 0] += gp[-1, 0]
    out[-1, -1] += gp[-1, -1]
    return out


def sobel_gradients(raster: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Standard 3x3 Sobel responses along x and y, replicate-padded borders."""
    raster = np.asarray(raster, dtype=np.float64)
    if raster.ndim != 2 or min(raster.shape) < 3:
        raise RasterTooSmall(f"sobel needs at least 3x3, got {raster.shape}")
    return _correlate3(raster, SOBEL_X), _correlate3(raster, SOBEL_Y)
