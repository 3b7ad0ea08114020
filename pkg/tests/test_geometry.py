import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amodalseg.data.types import (
    build_spatial_map,
    compute_occlusion_rate,
    occlusion_pairs,
    tight_box,
)
from amodalseg.errors import GeometryError, ShapeError

from conftest import random_mask_pair


def brute_force_spatial_map(visible, amodal):
    """Independent per-pixel oracle: 1 on visible, 2 on amodal-not-visible, else 0."""
    h, w = visible.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for r in range(h):
        for c in range(w):
            if visible[r, c]:
                out[r, c] = 1
            elif amodal[r, c]:
                out[r, c] = 2
    return out


class TestOcclusionRate:
    def test_unoccluded_identity(self):
        m = np.zeros((5, 5), bool)
        m[1:3, 1:4] = True
        assert compute_occlusion_rate(m, m) == 0.0

    def test_fully_occluded_limit(self):
        amodal = np.zeros((5, 5), bool)
        amodal[2, 2] = True
        visible = np.zeros((5, 5), bool)
        assert compute_occlusion_rate(visible, amodal) == 1.0

    def test_half_occluded(self):
        # 4 visible of 8 amodal pixels, counted by hand.
        amodal = np.zeros((4, 4), bool)
        amodal[0:2, :] = True
        visible = np.zeros((4, 4), bool)
        visible[0, :] = True
        assert compute_occlusion_rate(visible, amodal) == 0.5

    def test_empty_amodal_rejected(self):
        empty = np.zeros((3, 3), bool)
        with pytest.raises(GeometryError, match="0 pixels"):
            compute_occlusion_rate(empty, empty)

    def test_subset_violation_names_pixel_count(self):
        visible = np.zeros((3, 3), bool)
        visible[0, 0] = True
        visible[1, 1] = True
        amodal = np.zeros((3, 3), bool)
        amodal[1, 1] = True
        with pytest.raises(GeometryError, match="1 pixel"):
            compute_occlusion_rate(visible, amodal)

    def test_scale_consistency_under_upscaling(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            visible, amodal = random_mask_pair(rng, 7, 9)
            r1 = compute_occlusion_rate(visible, amodal)
            up = lambda m: np.repeat(np.repeat(m, 2, axis=0), 2, axis=1)
            assert compute_occlusion_rate(up(visible), up(amodal)) == r1


class TestSpatialMap:
    def test_zero_occlusion_has_no_twos(self):
        m = np.zeros((4, 4), bool)
        m[1:3, 1:3] = True
        sp = build_spatial_map(m, m)
        assert np.array_equal(sp == 1, m)
        assert not (sp == 2).any()

    def test_half_occluded_rows(self):
        amodal = np.zeros((4, 4), bool)
        amodal[0:2, :] = True
        visible = np.zeros((4, 4), bool)
        visible[0, :] = True
        sp = build_spatial_map(visible, amodal)
        assert (sp[0] == 1).all()
        assert (sp[1] == 2).all()
        assert (sp[2:] == 0).all()

    def test_single_occluded_pixel(self):
        amodal = np.zeros((4, 5), bool)
        amodal[2, 3] = True
        sp = build_spatial_map(np.zeros((4, 5), bool), amodal)
        assert sp[2, 3] == 2
        assert np.count_nonzero(sp) == 1

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            build_spatial_map(np.zeros((2, 2), bool), np.zeros((3, 3), bool))

    def test_subset_violation(self):
        visible = np.ones((2, 2), bool)
        amodal = np.zeros((2, 2), bool)
        with pytest.raises(GeometryError):
            build_spatial_map(visible, amodal)

    def test_matches_brute_force_on_random_pairs(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            h, w = int(rng.integers(1, 12)), int(rng.integers(1, 12))
            visible, amodal = random_mask_pair(rng, h, w)
            assert np.array_equal(
                build_spatial_map(visible, amodal), brute_force_spatial_map(visible, amodal)
            )

    def test_partition_is_exact(self):
        rng = np.random.default_rng(23)
        visible, amodal = random_mask_pair(rng, 9, 6)
        sp = build_spatial_map(visible, amodal)
        assert np.array_equal(sp == 1, visible)
        assert np.array_equal(sp == 2, amodal & ~visible)
        assert np.array_equal(sp == 0, ~amodal)


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_rate_in_unit_interval_and_map_consistent(seed):
    rng = np.random.default_rng(seed)
    visible, amodal = random_mask_pair(rng, 6, 6)
    r = compute_occlusion_rate(visible, amodal)
    assert 0.0 <= r <= 1.0
    sp = build_spatial_map(visible, amodal)
    assert set(np.unique(sp)) <= {0, 1, 2}


def test_tight_box():
    m = np.zeros((6, 8), bool)
    m[2, 3] = True
    m[4, 6] = True
    assert tight_box(m) == (3, 2, 7, 5)
    assert tight_box(np.zeros((3, 3), bool)) is None


def test_occlusion_pairs(sample):
    assert occlusion_pairs(sample) == [("red-rectangle", "blue-rectangle")]
