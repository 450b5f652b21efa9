"""
Tests for the FSR-SF, FSR-MF and FSR-RMF pipelines.
"""

from unittest.mock import patch

import numpy as np
import pytest

from nrs_video.config import MfWindow, PipelineMode
from nrs_video.models import EmptyInputError, VideoBuffer
from nrs_video.motion import estimate_dense_motion
from nrs_video.pipeline import (
    ReconstructionPipeline,
    mf_references,
    reconstruct_mf,
    reconstruct_rmf,
    reconstruct_sf,
    rmf_references,
    run_pipeline,
    sample_video,
)
from nrs_video.video_io import make_texture


def _interior_mse(frame, truth):
    return float(np.mean((frame - truth)[8:-8, 8:-8] ** 2))


@pytest.fixture
def sampled_video(translate_video, mask64):
    """The translate fixture behind the 64x64 quadrant mask."""
    return sample_video(translate_video, mask64)


class TestReferences:
    """Test support frame selection."""

    def test_mf_symmetric(self):
        """K preceding and K succeeding frames, nearest first, preceding before succeeding."""
        assert mf_references(5, 10, 2) == [(4, 1), (6, 1), (3, 2), (7, 2)]

    def test_mf_symmetric_at_sequence_start(self):
        """Only existing frames are used."""
        assert mf_references(0, 10, 2) == [(1, 1), (2, 2)]
        assert mf_references(9, 10, 1) == [(8, 1)]

    def test_mf_total_window(self):
        """K frames in total, alternating around t."""
        assert mf_references(5, 10, 3, MfWindow.TOTAL) == [(4, 1), (6, 1), (3, 2)]
        assert mf_references(0, 10, 3, MfWindow.TOTAL) == [(1, 1), (2, 2), (3, 3)]

    def test_rmf_references(self):
        """Only preceding frames, at most K."""
        assert rmf_references(0, 5) == []
        assert rmf_references(2, 5) == [1, 0]
        assert rmf_references(9, 3) == [8, 7, 6]


class TestSamplingVideo:
    """Test applying the fixed mask to a sequence."""

    def test_every_frame_uses_the_same_mask(self, translate_video, mask64):
        """One mask for all frames."""
        sampled = sample_video(translate_video, mask64)

        assert len(sampled) == 10
        assert all(frame.mask is mask64 for frame in sampled)


class TestPipelines:
    """Test the three reconstruction pipelines."""

    @pytest.mark.parametrize("mode,support", [("sf", 0), ("mf", 2), ("rmf", 2)])
    def test_acquired_pixels_preserved(self, sampled_video, mask64, fast_config, mode, support):
        """Every output frame equals the sampled input on the acquired set."""
        frames = run_pipeline(sampled_video, fast_config(mode, support))

        assert len(frames) == len(sampled_video)
        for output, sampled in zip(frames, sampled_video):
            assert np.array_equal(output[mask64.acquired], sampled.frame[mask64.acquired])

    @pytest.mark.parametrize("prefix", [1, 3, 7])
    def test_rmf_is_causal(self, sampled_video, fast_config, prefix):
        """Reconstructing a prefix gives the same frames as the full run."""
        config = fast_config("rmf", 3)

        full = reconstruct_rmf(sampled_video, config)
        partial = reconstruct_rmf(sampled_video[:prefix], config)

        for a, b in zip(partial, full[:prefix]):
            assert np.array_equal(a, b)

    def test_rmf_first_frame_is_single_frame(self, sampled_video, fast_config):
        """Frame 0 has no predecessors."""
        rmf = reconstruct_rmf(sampled_video[:1], fast_config("rmf", 2))
        sf = reconstruct_sf(sampled_video[:1], fast_config())

        assert np.array_equal(rmf[0], sf[0])

    def test_results_independent_of_threads(self, sampled_video, fast_config):
        """Worker count never changes the output."""
        for mode, support in (("sf", 0), ("mf", 1), ("rmf", 2)):
            single = run_pipeline(sampled_video[:4], fast_config(mode, support, threads=1))
            pooled = run_pipeline(sampled_video[:4], fast_config(mode, support, threads=3))

            for a, b in zip(single, pooled):
                assert np.array_equal(a, b)

    def test_zero_support_is_single_frame(self, sampled_video, fast_config):
        """MF and RMF with K = 0 are FSR-SF."""
        config = fast_config("mf", 0)
        assert config.mode is PipelineMode.SF

        sf = reconstruct_sf(sampled_video[:2], fast_config())
        for frames in (
            reconstruct_mf(sampled_video[:2], config),
            reconstruct_rmf(sampled_video[:2], fast_config("rmf", 0)),
        ):
            for a, b in zip(frames, sf):
                assert np.array_equal(a, b)

    def test_multi_frame_improves_on_translation(self, translate_video, sampled_video, fast_config):
        """Projected samples bring the reconstruction closer to the original."""
        sf = run_pipeline(sampled_video, fast_config())
        rmf = run_pipeline(sampled_video, fast_config("rmf", 2))

        def error(frames):
            return np.mean([np.mean((a - b)[8:-8, 8:-8] ** 2) for a, b in zip(frames, translate_video.frames)])

        assert error(rmf) < error(sf)

    def test_mf_reuses_pre_reconstruction(self, sampled_video, fast_config):
        """A supplied FSR-SF result skips stage one."""
        pre = reconstruct_sf(sampled_video[:3], fast_config())

        with patch.object(ReconstructionPipeline, "reconstruct_sf") as stage_one:
            frames = reconstruct_mf(sampled_video[:3], fast_config("mf", 1), pre_reconstructed=pre)

        stage_one.assert_not_called()
        assert len(frames) == 3

    def test_pre_reconstruction_must_cover_video(self, sampled_video, fast_config):
        """Partial pre-reconstructions are rejected."""
        pre = reconstruct_sf(sampled_video[:2], fast_config())

        with pytest.raises(EmptyInputError):
            reconstruct_mf(sampled_video[:3], fast_config("mf", 1), pre_reconstructed=pre)

    def test_progress_callback(self, sampled_video, fast_config):
        """Every frame reports progress once."""
        seen = []

        run_pipeline(sampled_video[:3], fast_config("rmf", 1), progress=seen.append)

        assert sorted(seen) == [0, 1, 2]

    @pytest.mark.parametrize("mode", ["sf", "mf", "rmf"])
    def test_empty_video(self, fast_config, mode):
        """An empty video is an error in every mode."""
        with pytest.raises(EmptyInputError):
            run_pipeline([], fast_config(mode, 1))

    def test_mf_on_static_video_is_single_frame(self, mask64, fast_config):
        """With no motion the neighbours only repeat acquired positions, so MF equals SF."""
        still = np.rint(make_texture(64, 64, seed=4))
        video = sample_video(VideoBuffer(frames=[still] * 4), mask64)

        mf = reconstruct_mf(video, fast_config("mf", 1))
        sf = reconstruct_sf(video, fast_config())

        for a, b in zip(mf, sf):
            assert np.array_equal(a, b)

    def test_mf_beats_single_frame_on_translation(self, translate_video, sampled_video, fast_config):
        """One neighbour on each side already lowers the error of the middle frame."""
        mf = reconstruct_mf(sampled_video[:3], fast_config("mf", 1))
        sf = reconstruct_sf(sampled_video[:3], fast_config())

        truth = translate_video.frames[1]
        assert _interior_mse(mf[1], truth) < _interior_mse(sf[1], truth)

    def test_rmf_improves_with_support(self, translate_video, sampled_video, fast_config):
        """More support frames never make the recursive reconstruction worse."""
        errors = []
        for support in (1, 3):
            frames = reconstruct_rmf(sampled_video, fast_config("rmf", support))
            errors.append(np.mean([_interior_mse(a, b) for a, b in zip(frames, translate_video.frames)]))

        assert errors[1] <= errors[0]


class TestSupportSweeps:
    """Test running several K in one pass."""

    def test_rmf_sweep_matches_single_runs(self, sampled_video, fast_config):
        """Each K of a sweep equals its own run."""
        pipeline = ReconstructionPipeline(fast_config("rmf", 2))

        swept = pipeline.reconstruct_rmf_sweep(sampled_video[:5], [2, 1])

        assert sorted(swept) == [1, 2]
        for support in (1, 2):
            alone = reconstruct_rmf(sampled_video[:5], fast_config("rmf", support))
            for a, b in zip(swept[support], alone):
                assert np.allclose(a, b, rtol=0, atol=1e-9)

    def test_mf_sweep_matches_single_runs(self, sampled_video, fast_config):
        """Shared motion fields give the same frames as separate MF runs."""
        pre = reconstruct_sf(sampled_video[:6], fast_config())
        pipeline = ReconstructionPipeline(fast_config("mf", 2))

        swept = pipeline.reconstruct_mf_sweep(sampled_video[:6], [1, 2], pre)

        for support in (1, 2):
            alone = reconstruct_mf(sampled_video[:6], fast_config("mf", support), pre_reconstructed=pre)
            for a, b in zip(swept[support], alone):
                assert np.allclose(a, b, rtol=0, atol=1e-9)

    def test_motion_is_estimated_once_per_pair(self, sampled_video, fast_config):
        """Frame pairs shared by several K are matched only once."""
        pre = reconstruct_sf(sampled_video[:4], fast_config())
        pipeline = ReconstructionPipeline(fast_config("mf", 2))

        with patch("nrs_video.pipeline.estimate_dense_motion", wraps=estimate_dense_motion) as estimate:
            pipeline.reconstruct_mf_sweep(sampled_video[:4], [1, 2], pre)

        # K = 2 needs every ordered pair at distance 1 or 2 within 4 frames
        assert estimate.call_count == 10
