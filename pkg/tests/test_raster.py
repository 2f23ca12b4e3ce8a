import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dawnseg.errors import EmptyPointSet, RasterTooSmall, ShapeMismatch
from dawnseg.raster import (
    SOBEL_X,
    SOBEL_Y,
    PointSet,
    distance_to_points,
    instance_distance_maps,
    label_components,
    relabel,
    sobel_gradients,
)
from oracles import canonical_labels, flood_fill_components, naive_sobel, nearest_point_scan


class TestPointSet:
    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            PointSet(((5, 0),), 5, 5)
        with pytest.raises(ValueError):
            PointSet(((-1, 0),), 5, 5)

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            PointSet(((1, 1), (1, 1)), 5, 5)
        ps = PointSet(((1, 1), (1, 1)), 5, 5, allow_duplicates=True)
        assert len(ps) == 2

    def test_array_round_trip(self):
        ps = PointSet(((1, 2), (3, 4)), 5, 5)
        assert ps.as_array().tolist() == [[1, 2], [3, 4]]


class TestLabelComponents:
    def test_all_zero(self):
        out = label_components(np.zeros((4, 4), dtype=np.uint8))
        assert out.max() == 0
        assert (out == 0).all()

    def test_diagonal_pixels_connect(self):
        mask = np.zeros((3, 3), dtype=np.uint8)
        mask[0, 0] = mask[1, 1] = 1
        out = label_components(mask)
        assert out.max() == 1
        assert out[0, 0] == out[1, 1] == 1

    def test_two_blocks(self):
        mask = np.zeros((5, 5), dtype=np.uint8)
        mask[0:2, 0:2] = 1
        mask[3:5, 3:5] = 1
        out = label_components(mask)
        assert out.max() == 2
        ids, counts = np.unique(out[out > 0], return_counts=True)
        assert sorted(counts.tolist()) == [4, 4]
        expected = flood_fill_components(mask)
        assert (canonical_labels(out) == canonical_labels(expected)).all()

    @settings(max_examples=150, deadline=None)
    @given(
        arrays(
            np.uint8,
            st.tuples(st.integers(1, 16), st.integers(1, 16)),
            elements=st.integers(0, 1),
        )
    )
    def test_matches_flood_fill_oracle(self, mask):
        ours = canonical_labels(label_components(mask))
        oracle = canonical_labels(flood_fill_components(mask))
        assert (ours == oracle).all()

    def test_relabel_contiguous(self):
        inst = np.array([[0, 5], [9, 5]])
        out = relabel(inst)
        assert sorted(np.unique(out).tolist()) == [0, 1, 2]


class TestDistanceToPoints:
    def test_three_four_five(self):
        ps = PointSet(((0, 0),), 5, 5)
        field = distance_to_points(ps)
        assert field[4, 3] == pytest.approx(5.0, abs=1e-9)

    def test_zero_at_seed(self):
        ps = PointSet(((2, 3),), 6, 6)
        assert distance_to_points(ps)[3, 2] == 0.0

    def test_two_points_takes_min(self, rng):
        ps = PointSet(((0, 0), (9, 0)), 10, 3)
        field = distance_to_points(ps)
        oracle = nearest_point_scan(list(ps.points), (3, 10))
        assert np.allclose(field, oracle, atol=1e-6)

    def test_empty_raises(self):
        with pytest.raises(EmptyPointSet):
            distance_to_points(PointSet((), 4, 4))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            distance_to_points(PointSet(((0, 0),), 4, 4), shape=(5, 5))

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_matches_exhaustive_scan(self, data):
        w = data.draw(st.integers(1, 32))
        h = data.draw(st.integers(1, 32))
        n = data.draw(st.integers(1, 8))
        coords = data.draw(
            st.lists(
                st.tuples(st.integers(0, w - 1), st.integers(0, h - 1)),
                min_size=n,
                max_size=n,
                unique=True,
            )
        )
        ps = PointSet(tuple(coords), w, h)
        field = distance_to_points(ps)
        oracle = nearest_point_scan(coords, (h, w))
        assert np.allclose(field, oracle, atol=1e-6)


class TestInstanceDistanceMaps:
    def test_single_pixel_instance(self):
        inst = np.zeros((5, 5), dtype=np.int32)
        inst[2, 2] = 1
        h_x, h_y = instance_distance_maps(inst)
        assert h_x[2, 2] == 0.0 and h_y[2, 2] == 0.0

    def test_horizontal_bar(self):
        inst = np.zeros((3, 5), dtype=np.int32)
        inst[1, :] = 1
        h_x, h_y = instance_distance_maps(inst)
        assert np.allclose(h_x[1], [-1.0, -0.5, 0.0, 0.5, 1.0])
        assert np.allclose(h_y, 0.0)

    def test_rotation_swaps_axes(self, rng):
        inst = np.zeros((9, 9), dtype=np.int32)
        ys, xs = np.mgrid[0:9, 0:9]
        inst[((ys - 4) ** 2) / 9 + ((xs - 4) ** 2) / 4 <= 1] = 1
        h_x, h_y = instance_distance_maps(inst)
        rx, ry = instance_distance_maps(np.rot90(inst))
        assert np.allclose(np.rot90(h_x), -ry, atol=1e-12)
        assert np.allclose(np.rot90(h_y), rx, atol=1e-12)

    def test_values_in_range_zero_on_background(self, rng):
        inst = np.zeros((12, 12), dtype=np.int32)
        inst[2:6, 3:9] = 1
        inst[8:11, 1:5] = 2
        h_x, h_y = instance_distance_maps(inst)
        for m in (h_x, h_y):
            assert m.min() >= -1.0 and m.max() <= 1.0
            assert (m[inst == 0] == 0.0).all()


class TestSobel:
    def test_constant_zero(self):
        gx, gy = sobel_gradients(np.full((5, 5), 3.7))
        assert np.allclose(gx, 0.0) and np.allclose(gy, 0.0)

    def test_ramp(self):
        ys, xs = np.mgrid[0:6, 0:6]
        gx, gy = sobel_gradients(xs.astype(float))
        assert np.allclose(gx[1:-1, 1:-1], 8.0)
        assert np.allclose(gy[1:-1, 1:-1], 0.0)

    def test_matches_naive_stencil(self, rng):
        r = rng.uniform(size=(5, 5))
        gx, gy = sobel_gradients(r)
        assert np.allclose(gx, naive_sobel(r, SOBEL_X), atol=1e-12)
        assert np.allclose(gy, naive_sobel(r, SOBEL_Y), atol=1e-12)

    def test_too_small(self):
        with pytest.raises(RasterTooSmall):
            sobel_gradients(np.zeros((2, 5)))
