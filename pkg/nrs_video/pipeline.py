"""
Reconstruction pipelines over a non-regularly sampled video.

- FSR-SF:  every frame reconstructed on its own.
- FSR-MF:  all frames pre-reconstructed by FSR-SF; motion between the
           pre-reconstructed frame t and its neighbours t-k / t+k projects the
           neighbours' acquired samples into frame t, the nearest frame wins,
           then FSR fills the rest.
- FSR-RMF: only preceding frames; motion is estimated between the raw
           sampled frame t and the already reconstructed frames t-k, all
           projections are merged with distance weights, then FSR. Each
           result immediately serves as a reference for later frames.
"""

import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

from .config import MfWindow, PipelineConfig, PipelineMode
from .fsr import reconstruct_frames_with_stats
from .logging_config import get_logger
from .logging_config import logger as app_logger
from .merge import make_schedule, merge_frames, merge_nearest, merged_to_sampled
from .models import EmptyInputError, Frame, Mask, MergedFrame, ProjectedFrame, SampledFrame, VideoBuffer
from .motion import compensate, estimate_dense_motion
from .sampling import apply_mask

logger = get_logger("pipeline")

ProgressCallback = Callable[[int], None]

# frames reconstructed together in one FSR pass; fixed so results never depend on threads
FRAME_BATCH = 4


def sample_video(buffer: VideoBuffer, mask: Mask) -> list[SampledFrame]:
    """Apply the fixed mask to every frame."""
    return [apply_mask(frame, mask) for frame in buffer.frames]


def mf_references(t: int, count: int, support: int, window: MfWindow = MfWindow.SYMMETRIC) -> list[tuple[int, int]]:
    """(frame index, temporal distance) of the FSR-MF references of frame t.

    Preceding frames come before succeeding ones of equal distance.
    """
    ordered = []
    reach = support if window is MfWindow.SYMMETRIC else count
    for k in range(1, reach + 1):
        ordered.extend((index, k) for index in (t - k, t + k) if 0 <= index < count)
    return ordered if window is MfWindow.SYMMETRIC else ordered[:support]


def rmf_references(t: int, support: int) -> list[int]:
    """Indices of the preceding reconstructed frames used for frame t."""
    return [t - k for k in range(1, min(support, t) + 1)]


def _require_frames(video: Sequence[SampledFrame]) -> None:
    if not video:
        raise EmptyInputError("Video has no frames")


def _batches(count: int) -> list[range]:
    return [range(start, min(start + FRAME_BATCH, count)) for start in range(0, count, FRAME_BATCH)]


class ReconstructionPipeline:
    """Runs one of the three pipelines under a fixed configuration.

    The `*_sweep` methods run several support sizes K that share every other
    setting in one pass, so motion fields and FSR batches are shared.
    """

    def __init__(self, config: PipelineConfig, progress: Optional[ProgressCallback] = None):
        self.config = config
        self.progress = progress

    def _done(self, mode: PipelineMode, support: int, index: int, seconds: float) -> None:
        app_logger.log_frame(mode.value, index, seconds, support=support)
        if self.progress:
            self.progress(index)

    def _fsr(self, frames: Sequence[SampledFrame], merged: Sequence[Optional[MergedFrame]]) -> list[Frame]:
        jobs = [
            (sampled, None) if support is None else merged_to_sampled(support, sampled)
            for sampled, support in zip(frames, merged)
        ]
        return [frame for frame, _ in reconstruct_frames_with_stats(jobs, self.config.fsr)]

    def run(self, video: Sequence[SampledFrame], pre_reconstructed: Optional[Sequence[Frame]] = None) -> list[Frame]:
        """Reconstruct the whole video with the configured mode."""
        _require_frames(video)
        logger.info(f"▶️ {self.config.label}: {len(video)} frames, {self.config.threads} thread(s)")
        if self.config.mode is PipelineMode.SF:
            return self.reconstruct_sf(video)
        if self.config.mode is PipelineMode.MF:
            return self.reconstruct_mf(video, pre_reconstructed)
        return self.reconstruct_rmf(video)

    def reconstruct_sf(self, video: Sequence[SampledFrame]) -> list[Frame]:
        """Independent FSR of every frame, in parallel batches of FRAME_BATCH frames."""
        _require_frames(video)

        def batch(indices: range) -> list[Frame]:
            started = time.perf_counter()
            frames = self._fsr([video[t] for t in indices], [None] * len(indices))
            seconds = (time.perf_counter() - started) / len(indices)
            for t in indices:
                self._done(PipelineMode.SF, 0, t, seconds)
            return frames

        with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
            return [frame for frames in pool.map(batch, _batches(len(video))) for frame in frames]

    def reconstruct_mf(
        self, video: Sequence[SampledFrame], pre_reconstructed: Optional[Sequence[Frame]] = None
    ) -> list[Frame]:
        """Bidirectional multi-frame reconstruction on top of an FSR-SF pass.

        `pre_reconstructed` may hand in an existing FSR-SF result.
        """
        return self.reconstruct_mf_sweep(video, [self.config.support], pre_reconstructed)[self.config.support]

    def reconstruct_mf_sweep(
        self,
        video: Sequence[SampledFrame],
        supports: Sequence[int],
        pre_reconstructed: Optional[Sequence[Frame]] = None,
    ) -> dict[int, list[Frame]]:
        """FSR-MF for every K in `supports`, sharing the motion fields between them."""
        _require_frames(video)
        if pre_reconstructed is None:
            pre_reconstructed = ReconstructionPipeline(
                self.config.model_copy(update={"mode": PipelineMode.SF, "support": 0})
            ).reconstruct_sf(video)
        elif len(pre_reconstructed) != len(video):
            raise EmptyInputError("Pre-reconstruction does not cover every frame")
        pre = pre_reconstructed
        supports = sorted(set(supports))
        window = self.config.mf_window
        references = {
            k: [mf_references(t, len(video), k, window) for t in range(len(video))] for k in supports
        }

        def batch(indices: range) -> list[list[Frame]]:
            started = time.perf_counter()
            pairs = sorted({(t, index) for k in supports for t in indices for index, _ in references[k][t]})
            fields = {(t, index): estimate_dense_motion(pre[t], pre[index], self.config.me) for t, index in pairs}

            frames, merged = [], []
            for k in supports:
                for t in indices:
                    projections = [
                        compensate(video[index], fields[(t, index)], distance)
                        for index, distance in references[k][t]
                    ]
                    frames.append(video[t])
                    merged.append(merge_nearest(video[t], projections))
            outputs = self._fsr(frames, merged)

            seconds = (time.perf_counter() - started) / len(outputs)
            for k in supports:
                for t in indices:
                    self._done(PipelineMode.MF, k, t, seconds)
            return [outputs[i : i + len(indices)] for i in range(0, len(outputs), len(indices))]

        results: dict[int, list[Frame]] = {k: [] for k in supports}
        with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
            for per_support in pool.map(batch, _batches(len(video))):
                for k, frames in zip(supports, per_support):
                    results[k].extend(frames)
        return results

    def reconstruct_rmf(self, video: Sequence[SampledFrame]) -> list[Frame]:
        """Recursive multi-frame reconstruction, strictly sequential over t."""
        return self.reconstruct_rmf_sweep(video, [self.config.support])[self.config.support]

    def reconstruct_rmf_sweep(self, video: Sequence[SampledFrame], supports: Sequence[int]) -> dict[int, list[Frame]]:
        """FSR-RMF for every K in `supports`, advanced frame by frame together.

        Each run only ever sees its own earlier outputs.
        """
        _require_frames(video)
        supports = sorted(set(supports))
        schedules = {k: make_schedule(max(1, k), self.config.schedule) for k in supports}
        outputs: dict[int, list[Frame]] = {k: [] for k in supports}

        with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
            for t, current in enumerate(video):
                started = time.perf_counter()
                jobs = [(k, index) for k in supports for index in rmf_references(t, k)]

                def project(job: tuple[int, int], t: int = t, current: SampledFrame = current) -> ProjectedFrame:
                    k, index = job
                    field = estimate_dense_motion(current, outputs[k][index], self.config.me)
                    return compensate(video[index], field, t - index)

                projections = list(pool.map(project, jobs))
                merged: list[Optional[MergedFrame]] = []
                for k in supports:
                    own = [projection for (owner, _), projection in zip(jobs, projections) if owner == k]
                    # no predecessors: plain FSR
                    merged.append(merge_frames(current, own, schedules[k], self.config.eq2_literal) if own else None)

                frames = self._fsr([current] * len(supports), merged)
                seconds = (time.perf_counter() - started) / len(supports)
                for k, frame in zip(supports, frames):
                    outputs[k].append(frame)
                    self._done(PipelineMode.RMF, k, t, seconds)

        return outputs


def reconstruct_sf(video: Sequence[SampledFrame], config: PipelineConfig) -> list[Frame]:
    """FSR-SF over a sampled video."""
    return ReconstructionPipeline(config).reconstruct_sf(video)


def reconstruct_mf(
    video: Sequence[SampledFrame],
    config: PipelineConfig,
    pre_reconstructed: Optional[Sequence[Frame]] = None,
) -> list[Frame]:
    """FSR-MF over a sampled video; K = 0 degenerates to FSR-SF."""
    if config.mode is PipelineMode.SF:
        return reconstruct_sf(video, config)
    return ReconstructionPipeline(config).reconstruct_mf(video, pre_reconstructed)


def reconstruct_rmf(video: Sequence[SampledFrame], config: PipelineConfig) -> list[Frame]:
    """FSR-RMF over a sampled video; K = 0 degenerates to FSR-SF."""
    if config.mode is PipelineMode.SF:
        return reconstruct_sf(video, config)
    return ReconstructionPipeline(config).reconstruct_rmf(video)


def run_pipeline(
    video: Sequence[SampledFrame],
    config: PipelineConfig,
    progress: Optional[ProgressCallback] = None,
    pre_reconstructed: Optional[Sequence[Frame]] = None,
) -> list[Frame]:
    """Dispatch on config.mode."""
    return ReconstructionPipeline(config, progress).run(video, pre_reconstructed)
