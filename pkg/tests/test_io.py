import numpy as np
import pytest

from dawnseg.errors import RangeViolation
from dawnseg.io import (
    dump_json,
    read_dwnr,
    read_instance_png,
    read_mask_png,
    read_points_csv,
    write_dwnr,
    write_instance_png,
    write_mask_png,
    write_points_csv,
)
from dawnseg.raster import PointSet


def test_dwnr_round_trip(tmp_path, rng):
    arr = rng.uniform(-2, 2, size=(7, 5)).astype(np.float32)
    path = tmp_path / "r.dwnr"
    write_dwnr(path, arr)
    back = read_dwnr(path)
    assert back.shape == (7, 5)
    assert np.allclose(back, arr)
    # header: magic + W,H,C little-endian
    raw = path.read_bytes()
    assert raw[:4] == b"DWNR"
    assert int.from_bytes(raw[4:8], "little") == 5
    assert int.from_bytes(raw[8:12], "little") == 7
    assert int.from_bytes(raw[12:16], "little") == 1


def test_dwnr_multichannel(tmp_path, rng):
    arr = rng.uniform(size=(4, 6, 3)).astype(np.float32)
    path = tmp_path / "c.dwnr"
    write_dwnr(path, arr)
    back = read_dwnr(path)
    assert back.shape == (4, 6, 3)
    assert np.allclose(back, arr)


def test_dwnr_truncated_payload(tmp_path):
    path = tmp_path / "bad.dwnr"
    write_dwnr(path, np.zeros((3, 3)))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(RangeViolation):
        read_dwnr(path)


def test_dwnr_bad_magic(tmp_path):
    path = tmp_path / "bad.dwnr"
    write_dwnr(path, np.zeros((3, 3)))
    data = bytearray(path.read_bytes())
    data[:4] = b"NOPE"
    path.write_bytes(bytes(data))
    with pytest.raises(RangeViolation):
        read_dwnr(path)


def test_instance_png_round_trip(tmp_path):
    inst = np.zeros((6, 4), dtype=np.int32)
    inst[1:3, 1:3] = 1
    inst[4, 2] = 700  # exercises 16-bit depth
    path = tmp_path / "inst.png"
    write_instance_png(path, inst)
    assert (read_instance_png(path) == inst).all()


def test_instance_png_rejects_wide_ids(tmp_path):
    with pytest.raises(RangeViolation):
        write_instance_png(tmp_path / "x.png", np.array([[70000]]))


def test_mask_png_round_trip(tmp_path):
    mask = np.array([[0, 1], [1, 0]], dtype=np.uint8)
    path = tmp_path / "m.png"
    write_mask_png(path, mask)
    assert (read_mask_png(path) == mask).all()


def test_points_csv_round_trip(tmp_path):
    ps = PointSet(((3, 4), (0, 0)), 10, 10)
    path = tmp_path / "pts.csv"
    write_points_csv(path, ps)
    assert path.read_text().splitlines()[0] == "x,y"
    back = read_points_csv(path, 10, 10)
    assert back.points == ps.points


def test_points_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("col,row\n1,2\n")
    with pytest.raises(ValueError):
        read_points_csv(path, 10, 10)


def test_dump_json_canonical():
    a = dump_json({"b": 1, "a": [1.5, 2]})
    b = dump_json({"a": [1.5, 2], "b": 1})
    assert a == b
    assert a.endswith("\n")
