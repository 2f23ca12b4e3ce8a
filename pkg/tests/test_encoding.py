import numpy as np
import pytest

from dawnseg.encoding import EncodingParams, gaussian_encode, segmentation_targets, weight_map
from dawnseg.errors import EmptyPointSet
from dawnseg.raster import PointSet, distance_to_points, instance_distance_maps

TNBC = EncodingParams(r1=11, r2=22, sigma=2.75, tag="TNBC")


def random_points(rng, w, h, n):
    pts = set()
    while len(pts) < n:
        pts.add((int(rng.integers(0, w)), int(rng.integers(0, h))))
    return PointSet(tuple(pts), w, h)


class TestParams:
    def test_invariants(self):
        with pytest.raises(ValueError):
            EncodingParams(r1=0, r2=22, sigma=2.75)
        with pytest.raises(ValueError):
            EncodingParams(r1=22, r2=11, sigma=2.75)
        with pytest.raises(ValueError):
            EncodingParams(r1=11, r2=22, sigma=0)


class TestGaussianEncode:
    def test_value_one_at_annotation(self):
        ps = PointSet(((5, 5),), 12, 12)
        enc = gaussian_encode(ps, TNBC)
        assert enc[5, 5] == 1.0

    def test_tnbc_spot_value_at_r1(self):
        # distance exactly 11 from the point: exp(-121 / (2 * 2.75^2)) = exp(-8)
        ps = PointSet(((0, 0),), 30, 30)
        enc = gaussian_encode(ps, TNBC)
        assert enc[0, 11] == pytest.approx(np.exp(-8.0), abs=1e-8)
        assert enc[0, 11] == pytest.approx(3.3546e-4, abs=1e-8)

    def test_band_boundaries(self):
        ps = PointSet(((0, 0),), 40, 40)
        enc = gaussian_encode(ps, TNBC)
        assert enc[0, 11] > 0.0  # D = r1 still in the Gaussian band
        assert enc[0, 12] == 0.0  # r1 < D <= r2
        assert enc[0, 22] == 0.0  # D = r2 still background ring
        assert enc[0, 23] == -1.0  # D > r2 excluded
        assert enc[1, 22] == -1.0  # D = sqrt(485) ~ 22.02 just over r2

    def test_empty_points(self):
        with pytest.raises(EmptyPointSet):
            gaussian_encode(PointSet((), 8, 8), TNBC)

    def test_radially_monotone_within_core(self):
        ps = PointSet(((0, 0),), 16, 16)
        enc = gaussian_encode(ps, TNBC)
        row = enc[0, :12]  # distances 0..11, all within r1
        assert (np.diff(row) < 0).all()

    def test_band_partition_matches_distance_field(self, rng):
        for _ in range(25):
            w = int(rng.integers(8, 40))
            h = int(rng.integers(8, 40))
            ps = random_points(rng, w, h, int(rng.integers(1, 6)))
            enc = gaussian_encode(ps, TNBC)
            d = distance_to_points(ps)
            assert ((enc > 0) == (d <= TNBC.r1)).all()
            assert ((enc == 0.0) == ((d > TNBC.r1) & (d <= TNBC.r2))).all()
            assert ((enc == -1.0) == (d > TNBC.r2)).all()

    def test_nearest_point_rules_overlaps(self):
        # two points closer than 2*r1: every pixel follows its nearest point
        ps = PointSet(((10, 10), (16, 10)), 32, 24)
        enc = gaussian_encode(ps, TNBC)
        d = distance_to_points(ps)
        core = d <= TNBC.r1
        assert np.allclose(enc[core], np.exp(-d[core] ** 2 / (2 * TNBC.sigma**2)))

    def test_translation_invariance_when_canvas_grows(self):
        small = gaussian_encode(PointSet(((4, 4),), 20, 20), TNBC)
        large = gaussian_encode(PointSet(((4, 4),), 40, 40), TNBC)
        assert np.allclose(small, large[:20, :20])


class TestWeightMap:
    def test_band_values(self):
        ps = PointSet(((0, 0),), 40, 40)
        w = weight_map(ps, TNBC)
        assert w[0, 0] == 10.0  # D = 0
        assert w[0, 10] == 10.0  # D < r1
        assert w[0, 11] == 1.0  # D = r1 goes to the background band
        assert w[0, 22] == 1.0  # D = r2 inclusive
        assert w[0, 23] == 0.0  # excluded

    def test_omega_matches_encoding_bands(self, rng):
        ps = random_points(rng, 30, 30, 3)
        w = weight_map(ps, TNBC)
        enc = gaussian_encode(ps, TNBC)
        assert ((w > 0) == (enc != -1.0)).all()


class TestSegmentationTargets:
    def test_empty_map(self):
        fg, h_x, h_y = segmentation_targets(np.zeros((6, 6), dtype=np.int32))
        assert fg.sum() == 0
        assert np.allclose(h_x, 0) and np.allclose(h_y, 0)

    def test_bar_matches_shared_kernel(self):
        inst = np.zeros((3, 5), dtype=np.int32)
        inst[1, :] = 1
        fg, h_x, h_y = segmentation_targets(inst)
        assert fg.sum() == 5
        ref_x, ref_y = instance_distance_maps(inst)
        assert np.allclose(h_x, ref_x) and np.allclose(h_y, ref_y)

    def test_per_instance_locality(self):
        inst = np.zeros((16, 16), dtype=np.int32)
        inst[2:6, 2:6] = 1
        inst[9:14, 9:14] = 2
        _, hx_before, hy_before = segmentation_targets(inst)
        edited = inst.copy()
        edited[2:6, 2:6] = 0
        edited[3:5, 2:7] = 1  # reshape instance 1 only
        _, hx_after, hy_after = segmentation_targets(edited)
        region_b = inst == 2
        assert np.allclose(hx_before[region_b], hx_after[region_b])
        assert np.allclose(hy_before[region_b], hy_after[region_b])
