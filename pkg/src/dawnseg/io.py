"""File formats: DWNR float rasters, PNG masks/instance maps, point CSVs, JSON.

DWNR is the raw float-raster interchange format: magic bytes ``DWNR``, then
little-endian u32 width, u32 height, u32 channels, then row-major
(channel-interleaved) float32 data. Instance maps travel as 16-bit
single-channel PNG, binary masks as 8-bit PNG (0/255), points as CSV with
header ``x,y``.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import RangeViolation
from .raster import PointSet

DWNR_MAGIC = b"DWNR"
_HEADER = struct.Struct("<4sIII")

SCHEMA_VERSION = 1


def write_dwnr(path: str | Path, array: np.ndarray) -> None:
    """Write a (H, W) or (H, W, C) float raster as DWNR."""
    arr = np.asarray(array, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"DWNR rasters are 2-D or 3-D, got shape {array.shape}")
    h, w, c = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DWNR_MAGIC, w, h, c))
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_dwnr(path: str | Path) -> np.ndarray:
    """Read a DWNR raster; single-channel data comes back as (H, W) float64."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise RangeViolation(f"{path}: truncated DWNR header")
        magic, w, h, c = _HEADER.unpack(header)
        if magic != DWNR_MAGIC:
            raise RangeViolation(f"{path}: bad magic {magic!r}")
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != w * h * c:
        raise RangeViolation(
            f"{path}: payload holds {data.size} floats, header implies {w * h * c}"
        )
    arr = data.reshape(h, w, c).astype(np.float64)
    return arr[:, :, 0] if c == 1 else arr


def write_instance_png(path: str | Path, inst: np.ndarray) -> None:
    """Write an instance map as 16-bit single-channel PNG."""
    inst = np.asarray(inst)
    if inst.min() < 0 or inst.max() > 0xFFFF:
        raise RangeViolation("instance ids must fit in uint16")
    Image.fromarray(inst.astype(np.uint16)).save(path)


def read_instance_png(path: str | Path) -> np.ndarray:
    img = Image.open(path)
    return np.asarray(img, dtype=np.int64).astype(np.int32)


def write_mask_png(path: str | Path, mask: np.ndarray) -> None:
    """Write a binary mask as 8-bit PNG (0/255)."""
    arr = (np.asarray(mask) > 0).astype(np.uint8) * 255
    Image.fromarray(arr, mode="L").save(path)


def read_mask_png(path: str | Path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("L"))
    return (arr > 127).astype(np.uint8)


def write_points_csv(path: str | Path, points: PointSet) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in points.points:
            writer.writerow([x, y])


def read_points_csv(path: str | Path, width: int, height: int) -> PointSet:
    """Read annotation points given the raster bounds they index into."""
    pts: list[tuple[int, int]] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["x", "y"]:
            raise ValueError(f"{path}: expected CSV header 'x,y'")
        for row in reader:
            pts.append((int(row["x"]), int(row["y"])))
    return PointSet(tuple(pts), width, height)


def dump_json(obj: object) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: str | Path, obj: object) -> None:
    Path(path).write_text(dump_json(obj))


def read_json(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)
