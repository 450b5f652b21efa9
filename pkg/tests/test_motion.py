"""
Tests for mask-aware dense motion estimation and compensation.
"""

import numpy as np
import pytest

from nrs_video import motion
from nrs_video.models import DimensionError, FormatError, MeParams, MotionField
from nrs_video.motion import (
    _box_sum,
    candidate_order,
    compensate,
    estimate_dense_motion,
    load_motion_field,
    matching_cost,
    save_motion_field,
)
from nrs_video.sampling import apply_mask, generate_quadrant_mask
from nrs_video.video_io import make_texture


@pytest.fixture
def shifted_pair():
    """128x128 integer texture frames; content moves up by two rows from reference to current."""
    base = np.rint(make_texture(128, 130, seed=11))
    reference = base[0:128]
    current = base[2:130]
    return current, reference


def _interior(shape, border):
    inside = np.zeros(shape, dtype=bool)
    inside[border:-border, border:-border] = True
    return inside


def _window(values, valid, m, n, radius):
    """Patch centred on (m, n) with positions outside the frame invalid."""
    size = 2 * radius + 1
    patch = np.zeros((size, size))
    patch_valid = np.zeros((size, size), dtype=bool)
    height, width = values.shape
    for i in range(size):
        for j in range(size):
            y, x = m - radius + i, n - radius + j
            if 0 <= y < height and 0 <= x < width:
                patch[i, j] = values[y, x]
                patch_valid[i, j] = valid[y, x]
    return patch, patch_valid


class TestMatchingCost:
    """Test the masked window cost."""

    def test_mean_absolute_difference(self):
        """Only jointly valid positions count."""
        cur = np.array([[1.0, 2.0], [3.0, 4.0]])
        ref = np.array([[2.0, 2.0], [0.0, 100.0]])
        cur_valid = np.array([[True, True], [True, False]])
        ref_valid = np.ones((2, 2), dtype=bool)

        assert matching_cost(cur, cur_valid, ref, ref_valid) == pytest.approx((1 + 0 + 3) / 3)

    def test_insufficient_overlap(self):
        """Too few joint samples cost +inf."""
        ones = np.ones((2, 2))
        valid = np.array([[True, False], [False, False]])

        assert matching_cost(ones, valid, ones, valid, min_overlap=2) == float("inf")
        assert matching_cost(ones, valid, ones, ~valid) == float("inf")

    def test_shape_mismatch(self):
        """Patch sizes must agree."""
        with pytest.raises(DimensionError):
            matching_cost(np.ones((2, 2)), np.ones((2, 2), bool), np.ones((3, 3)), np.ones((3, 3), bool))


class TestHelpers:
    """Test window sums and candidate ordering."""

    def test_box_sum(self):
        """Integral-image window sums equal direct summation with zero padding."""
        rng = np.random.default_rng(0)
        values = rng.integers(0, 10, (9, 7)).astype(np.float64)

        sums = _box_sum(values, 2)

        padded = np.pad(values, 2)
        for m in range(9):
            for n in range(7):
                assert sums[m, n] == padded[m : m + 5, n : n + 5].sum()

    def test_box_sum_stack(self):
        """Leading axes are summed frame by frame."""
        values = np.arange(2 * 6 * 5, dtype=np.float64).reshape(2, 6, 5)

        sums = _box_sum(values, 1)

        assert np.array_equal(sums[1], _box_sum(values[1], 1))

    def test_candidate_order(self):
        """Smaller displacement first, then dn, then dm."""
        order = candidate_order(1)

        assert order[:5] == [(0, 0), (0, -1), (-1, 0), (1, 0), (0, 1)]
        assert len(order) == 9
        assert len(candidate_order(16)) == 33 * 33


class TestEstimateDenseMotion:
    """Test dense motion estimation."""

    def test_recovers_translation_full_frames(self, shifted_pair):
        """Nearly every interior pixel finds (+2, 0) between full frames."""
        current, reference = shifted_pair

        field = estimate_dense_motion(current, reference, MeParams(search_range=16))

        inside = _interior(current.shape, 16)
        exact = (field.dm == 2) & (field.dn == 0) & field.valid
        assert exact[inside].mean() >= 0.99

    def test_recovers_translation_masked_current(self, shifted_pair):
        """A 25% sampled current frame still matches its reconstructed reference."""
        current, reference = shifted_pair
        sampled = apply_mask(current, generate_quadrant_mask(128, 128, 1))

        field = estimate_dense_motion(sampled, reference, MeParams(search_range=16))

        inside = _interior(current.shape, 16)
        exact = (field.dm == 2) & (field.dn == 0) & field.valid
        assert exact[inside].mean() >= 0.95

    def test_matches_exhaustive_search(self):
        """Chosen vectors equal a brute-force masked search with first-minimum tie-break."""
        rng = np.random.default_rng(5)
        reference = rng.integers(0, 8, (20, 20)).astype(np.float64)
        current_full = np.roll(reference, (1, -1), axis=(0, 1))
        mask = generate_quadrant_mask(20, 20, 2)
        current = apply_mask(current_full, mask)
        params = MeParams(window=5, search_range=2, min_overlap=3)

        field = estimate_dense_motion(current, reference, params)

        ref_valid = np.ones((20, 20), dtype=bool)
        for m, n in [(0, 0), (3, 7), (10, 10), (19, 19), (5, 18), (12, 1), (17, 4), (0, 19)]:
            cur_patch, cur_ok = _window(current.frame, mask.acquired, m, n, 2)
            best, best_cost = None, float("inf")
            for dm, dn in candidate_order(2):
                ref_patch, ref_ok = _window(reference, ref_valid, m + dm, n + dn, 2)
                cost = matching_cost(cur_patch, cur_ok, ref_patch, ref_ok, params.min_overlap)
                if cost < best_cost:
                    best, best_cost = (dm, dn), cost

            if best is None or not (0 <= m + best[0] < 20 and 0 <= n + best[1] < 20):
                assert not field.valid[m, n]
                assert (field.dm[m, n], field.dn[m, n]) == (0, 0)
                continue
            assert field.valid[m, n]
            assert (field.dm[m, n], field.dn[m, n]) == best
            assert field.cost[m, n] == pytest.approx(best_cost)

    def test_content_entering_the_frame_is_invalid(self, shifted_pair):
        """Rows whose match lies beyond the reference get no vector instead of a wrong one."""
        current, reference = shifted_pair

        field = estimate_dense_motion(current, reference, MeParams(search_range=4))

        columns = slice(16, -16)
        assert not field.valid[-2:, columns].any()
        assert np.isinf(field.cost[-2:, columns]).all()
        assert (field.valid[-6:-2, columns] & (field.dm[-6:-2, columns] == 2)).all()

    def test_targets_always_inside_reference(self, shifted_pair):
        """Every valid vector lands inside the frame."""
        current, reference = shifted_pair
        sampled = apply_mask(current, generate_quadrant_mask(128, 128, 4))

        field = estimate_dense_motion(sampled, reference, MeParams(window=9, search_range=6))

        rows, cols = np.indices(field.shape)
        target_m = (rows + field.dm)[field.valid]
        target_n = (cols + field.dn)[field.valid]
        assert ((target_m >= 0) & (target_m < 128)).all()
        assert ((target_n >= 0) & (target_n < 128)).all()

    def test_independent_of_stack_size(self, shifted_pair, monkeypatch):
        """Evaluating one candidate at a time gives the same field."""
        current, reference = shifted_pair
        params = MeParams(window=5, search_range=3, min_overlap=4)
        stacked = estimate_dense_motion(current[:40, :40], reference[:40, :40], params)

        monkeypatch.setattr(motion, "STACK_ELEMENTS", 1)
        single = estimate_dense_motion(current[:40, :40], reference[:40, :40], params)

        assert np.array_equal(stacked.dm, single.dm)
        assert np.array_equal(stacked.dn, single.dn)
        assert np.array_equal(stacked.valid, single.valid)

    def test_insufficient_overlap_is_invalid(self):
        """Pixels without enough overlap get no vector."""
        frame = np.ones((4, 4))
        field = estimate_dense_motion(frame, frame, MeParams(window=3, search_range=1, min_overlap=20))

        assert not field.valid.any()
        assert np.isinf(field.cost).all()
        assert not field.dm.any()

    def test_zero_motion_prefers_origin(self):
        """Flat frames tie everywhere; the zero vector wins."""
        frame = np.full((16, 16), 9.0)

        field = estimate_dense_motion(frame, frame, MeParams(window=3, search_range=2, min_overlap=1))

        assert field.valid.all()
        assert not field.dm.any() and not field.dn.any()

    def test_shape_mismatch(self):
        """Frames must agree."""
        with pytest.raises(DimensionError):
            estimate_dense_motion(np.zeros((8, 8)), np.zeros((8, 6)))


class TestCompensate:
    """Test motion compensated projection."""

    def test_zero_field_keeps_acquired_samples(self):
        """Only the support frame's acquired samples are projected."""
        mask = generate_quadrant_mask(8, 8, 3)
        support = apply_mask(np.arange(64, dtype=np.float64).reshape(8, 8), mask)

        projection = compensate(support, MotionField.zeros(8, 8), distance=2)

        assert projection.distance == 2
        assert np.array_equal(projection.valid, mask.acquired)
        assert np.array_equal(projection.values[mask.acquired], support.frame[mask.acquired])

    def test_gathers_along_the_field(self, shifted_pair):
        """The estimated field reproduces the current frame from the reference."""
        current, reference = shifted_pair
        field = estimate_dense_motion(current, reference, MeParams(search_range=4))

        projection = compensate(reference, field)

        inside = _interior(current.shape, 16)
        hit = projection.valid & inside & (field.dm == 2) & (field.dn == 0)
        assert hit.mean() > 0.5 * inside.mean()
        assert np.array_equal(projection.values[hit], current[hit])

    def test_out_of_frame_targets_are_invalid(self):
        """Vectors pointing outside the reference are dropped."""
        field = MotionField.zeros(4, 4)
        field.dm[:] = 3

        projection = compensate(np.ones((4, 4)), field)

        assert projection.valid[0].all()
        assert not projection.valid[1:].any()

    def test_shape_mismatch(self):
        """Reference must match the field."""
        with pytest.raises(DimensionError):
            compensate(np.zeros((4, 4)), MotionField.zeros(2, 2))


class TestMotionFieldFiles:
    """Test motion field dumps."""

    def test_save_and_load(self, temp_dir):
        """A dumped field loads back with all components."""
        field = MotionField.zeros(3, 5)
        field.dm[1, 2] = -4
        field.dn[2, 4] = 7
        field.valid[0, 0] = False
        field.cost[0, 0] = np.inf
        path = temp_dir / "field.mvf"

        save_motion_field(field, path)
        loaded = load_motion_field(path)

        assert path.read_bytes().startswith(b"NRSMVF1\n5 3\n")
        assert np.array_equal(loaded.dm, field.dm)
        assert np.array_equal(loaded.dn, field.dn)
        assert np.array_equal(loaded.valid, field.valid)
        assert np.array_equal(loaded.cost, field.cost)

    def test_truncated(self, temp_dir):
        """Short payloads are rejected."""
        path = temp_dir / "field.mvf"
        path.write_bytes(b"NRSMVF1\n2 2\n\x00\x00")

        with pytest.raises(FormatError, match="truncated"):
            load_motion_field(path)
