"""
Shared fixtures for the NRS video test suite.
"""

import os
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

# keep log files out of the working tree
os.environ.setdefault("NRS_LOG_DIR", tempfile.mkdtemp(prefix="nrs-logs-"))

from nrs_video.config import PipelineConfig  # noqa: E402
from nrs_video.models import FsrParams, MeParams, VideoBuffer  # noqa: E402
from nrs_video.sampling import generate_quadrant_mask  # noqa: E402
from nrs_video.video_io import make_texture, synthesize_sequence  # noqa: E402


@pytest.fixture
def temp_dir():
    """Create temporary directory for testing."""
    temp_dir = tempfile.mkdtemp()
    yield Path(temp_dir)
    shutil.rmtree(temp_dir)


@pytest.fixture
def fast_fsr():
    """Small FSR setup that keeps per-frame runtime well below a second."""
    return FsrParams(block_size=4, border_width=6, fft_size=16, iterations=20)


@pytest.fixture
def fast_me():
    """Small motion search."""
    return MeParams(window=7, search_range=3, min_overlap=4)


@pytest.fixture
def fast_config(fast_fsr, fast_me):
    """Factory for fast pipeline configurations."""

    def make(mode: str = "sf", support: int = 0, **kwargs) -> PipelineConfig:
        return PipelineConfig(mode=mode, support=support, fsr=fast_fsr, me=fast_me, **kwargs)

    return make


@pytest.fixture
def translate_video():
    """10 frames of 64x64 texture moving down by one pixel per frame, integer valued."""
    base = np.rint(make_texture(64, 64 + 9, seed=3))
    return synthesize_sequence("translate", base, frames=10, rate=1, shape=(64, 64))


@pytest.fixture
def small_video():
    """4 frames of 32x32 texture, two pixels per frame."""
    base = np.rint(make_texture(32, 32 + 6, seed=5))
    buffer = synthesize_sequence("translate", base, frames=4, rate=2, shape=(32, 32))
    return VideoBuffer(frames=buffer.frames, name="small")


@pytest.fixture
def mask64():
    """Quadrant mask for 64x64 frames."""
    return generate_quadrant_mask(64, 64, seed=7)
