"""
Merging of motion compensated support frames into the current frame.

Only positions the sensor did not acquire receive projected values; the
acquired samples of the current frame pass through untouched.
"""

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Union

import numpy as np

from .models import (
    MergedFrame,
    ParameterError,
    PixelClass,
    ProjectedFrame,
    SampledFrame,
    WeightSchedule,
    WeightScheme,
    require_same_shape,
)
from .video_io import write_image

logger = logging.getLogger(__name__)


def make_schedule(support: int, scheme: Union[WeightScheme, str] = WeightScheme.EQUAL) -> WeightSchedule:
    """Weights w_k, k = 1..K: all ones, or (K - k + 1) / K."""
    if support < 1:
        raise ParameterError(f"Support frame count must be >= 1, got {support}")
    scheme = WeightScheme(scheme)
    if scheme is WeightScheme.EQUAL:
        weights = tuple(1.0 for _ in range(support))
    else:
        weights = tuple((support - k + 1) / support for k in range(1, support + 1))
    return WeightSchedule(scheme=scheme, weights=weights)


def _check_inputs(current: SampledFrame, projections: Sequence[ProjectedFrame]) -> None:
    if projections:
        require_same_shape(current.frame, *(p.values for p in projections))


def _gated(current: SampledFrame) -> tuple[np.ndarray, np.ndarray]:
    classes = np.where(current.mask.acquired, PixelClass.ACQUIRED, PixelClass.MISSING).astype(np.int8)
    return current.frame.copy(), classes


def merge_frames(
    current: SampledFrame,
    projections: Sequence[ProjectedFrame],
    schedule: WeightSchedule,
    literal: bool = False,
) -> MergedFrame:
    """Weighted merge of all valid projections at each missing position.

    The weights are normalized over the projections that actually reach a
    pixel. With `literal=True` the denominator is the full sum of w_k over
    the schedule instead.
    """
    _check_inputs(current, projections)
    if len(projections) > schedule.support:
        raise ParameterError(
            f"{len(projections)} projections exceed the schedule's {schedule.support} weights"
        )

    values, classes = _gated(current)
    counts = np.zeros(current.shape, dtype=np.int32)
    if not projections:
        return MergedFrame(values=values, classes=classes, contributor_count=counts)

    weights = np.array([schedule.weight(p.distance) for p in projections])
    valid = np.stack([p.valid for p in projections]) & current.mask.missing
    raw = np.where(valid, np.stack([p.values for p in projections]), 0.0)
    weighted = raw * weights[:, None, None]
    weight_mass = valid * weights[:, None, None]

    # sorting along the projection axis makes the sums order independent
    numerator = np.sort(weighted, axis=0).sum(axis=0)
    single = np.sort(raw, axis=0).sum(axis=0)
    counts = valid.sum(axis=0).astype(np.int32)
    if literal:
        denominator = np.full(current.shape, float(sum(schedule.weights)))
    else:
        denominator = np.sort(weight_mass, axis=0).sum(axis=0)

    projected = counts > 0
    if literal:
        merged = numerator / denominator
    else:
        merged = np.where(counts == 1, single, numerator / np.where(projected, denominator, 1.0))
    values[projected] = merged[projected]
    classes[projected] = PixelClass.PROJECTED

    logger.debug(
        f"Merged {len(projections)} projections: {projected.mean():.1%} of pixels projected"
    )
    return MergedFrame(values=values, classes=classes, contributor_count=counts)


def merge_nearest(current: SampledFrame, projections: Sequence[ProjectedFrame]) -> MergedFrame:
    """At each missing position take the valid projection with the smallest k.

    Projections with equal k keep their list order.
    """
    _check_inputs(current, projections)
    values, classes = _gated(current)
    counts = np.zeros(current.shape, dtype=np.int32)

    for projection in sorted(projections, key=lambda p: p.distance):
        take = projection.valid & (classes == PixelClass.MISSING)
        values[take] = projection.values[take]
        classes[take] = PixelClass.PROJECTED
        counts[take] = 1

    return MergedFrame(values=values, classes=classes, contributor_count=counts)


def merged_to_sampled(merged: MergedFrame, current: SampledFrame) -> tuple[SampledFrame, np.ndarray]:
    """FSR input of a merged frame: its values with the current mask, and the class prior."""
    return SampledFrame(frame=merged.values, mask=current.mask), merged.classes


def save_class_grid_pgm(merged: MergedFrame, path: Union[str, Path]) -> None:
    """Debug dump: 0 = missing, 128 = projected, 255 = acquired."""
    grey = np.zeros(merged.classes.shape, dtype=np.float64)
    grey[merged.classes == PixelClass.PROJECTED] = 128
    grey[merged.classes == PixelClass.ACQUIRED] = 255
    write_image(grey, path)
