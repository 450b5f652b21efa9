"""
Mask-aware dense motion estimation and motion compensated projection.

For every pixel of the current frame a window centred on it is matched
against displaced windows of the reference frame. Only positions that
carry a valid sample in BOTH frames take part in the comparison, so an
incomplete non-regularly sampled current frame can be matched directly
against a reconstructed reference.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .models import (
    DimensionError,
    FormatError,
    Frame,
    MeParams,
    MotionField,
    ProjectedFrame,
    SampledFrame,
)

logger = logging.getLogger(__name__)

FIELD_MAGIC = b"NRSMVF1"
FIELD_RECORD = np.dtype([("dm", "<i2"), ("dn", "<i2"), ("valid", "u1"), ("cost", "<f4")])

FrameLike = Union[SampledFrame, Frame]

# upper bound on the candidate stack evaluated at once
STACK_ELEMENTS = 1 << 21


def _values_and_validity(frame: FrameLike) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(frame, SampledFrame):
        return frame.frame, frame.mask.acquired
    values = np.asarray(frame, dtype=np.float64)
    return values, np.ones(values.shape, dtype=bool)


def matching_cost(
    cur_patch: np.ndarray,
    cur_valid: np.ndarray,
    ref_patch: np.ndarray,
    ref_valid: np.ndarray,
    min_overlap: int = 1,
) -> float:
    """Mean absolute difference over the jointly valid positions.

    Returns +inf when fewer than `min_overlap` positions are valid in both.
    """
    if not (cur_patch.shape == cur_valid.shape == ref_patch.shape == ref_valid.shape):
        raise DimensionError("Patches and validity masks must have the same size")
    joint = cur_valid & ref_valid
    count = int(joint.sum())
    if count == 0 or count < min_overlap:
        return float("inf")
    return float(np.abs(cur_patch[joint] - ref_patch[joint]).mean())


def _box_sum(values: np.ndarray, radius: int) -> np.ndarray:
    """Sum over the (2r+1)^2 window centred on each pixel, zero outside the frame.

    Leading axes are treated as a stack of independent frames.
    """
    padding = [(0, 0)] * (values.ndim - 2) + [(radius + 1, radius)] * 2
    table = np.pad(values, padding).cumsum(axis=-2).cumsum(axis=-1)
    span = 2 * radius + 1
    return (
        table[..., span:, span:]
        - table[..., :-span, span:]
        - table[..., span:, :-span]
        + table[..., :-span, :-span]
    )


def candidate_order(search_range: int) -> list[tuple[int, int]]:
    """All displacements, ordered by |dm|+|dn|, then dn, then dm."""
    span = range(-search_range, search_range + 1)
    return sorted(
        ((dm, dn) for dm in span for dn in span),
        key=lambda d: (abs(d[0]) + abs(d[1]), d[1], d[0]),
    )


def _candidate_ranks(search_range: int) -> np.ndarray:
    """Position of every (dm, dn) in candidate_order, indexed [dm + r, dn + r]."""
    span = 2 * search_range + 1
    ranks = np.empty((span, span), dtype=np.int64)
    for rank, (dm, dn) in enumerate(candidate_order(search_range)):
        ranks[dm + search_range, dn + search_range] = rank
    return ranks


def estimate_dense_motion(
    current: FrameLike, reference: FrameLike, params: MeParams = MeParams()
) -> MotionField:
    """Exhaustive per-pixel window matching ignoring invalid samples on either side.

    Displacements whose target lies outside the reference stay in the search,
    scored on the part of the window that still overlaps the frame. A pixel
    whose best displacement leaves the frame gets no vector.
    """
    cur_values, cur_valid = _values_and_validity(current)
    ref_values, ref_valid = _values_and_validity(reference)
    if cur_values.shape != ref_values.shape:
        raise DimensionError(f"Frame shapes differ: {cur_values.shape} vs {ref_values.shape}")

    height, width = cur_values.shape
    radius = params.window // 2
    reach = params.search_range
    span = 2 * reach + 1
    ref_padded = np.pad(ref_values, reach)
    ref_valid_padded = np.pad(ref_valid, reach, constant_values=False)
    ranks = _candidate_ranks(reach)
    # dn candidates evaluated together per dm, bounded in memory
    chunk = max(1, min(span, STACK_ELEMENTS // (height * width)))

    best_cost = np.full((height, width), np.inf)
    best_rank = np.full((height, width), span * span, dtype=np.int64)

    for dm in range(-reach, reach + 1):
        rows = slice(reach + dm, reach + dm + height)
        # (dn, m, n) views of the reference shifted by every dn
        shifted_all = np.moveaxis(sliding_window_view(ref_padded[rows], width, axis=1), 1, 0)
        valid_all = np.moveaxis(sliding_window_view(ref_valid_padded[rows], width, axis=1), 1, 0)

        for start in range(0, span, chunk):
            shifted = shifted_all[start : start + chunk]
            joint = cur_valid & valid_all[start : start + chunk]
            sad = _box_sum(np.where(joint, np.abs(cur_values - shifted), 0.0), radius)
            count = _box_sum(joint.astype(np.int64), radius)
            cost = np.where(count >= params.min_overlap, sad / np.maximum(count, 1), np.inf)

            # first minimum in candidate order: lowest cost, then lowest rank
            order = ranks[dm + reach, start : start + chunk][:, None, None]
            chunk_cost = cost.min(axis=0)
            chunk_rank = np.where(cost == chunk_cost, order, span * span).min(axis=0)
            better = (chunk_cost < best_cost) | ((chunk_cost == best_cost) & (chunk_rank < best_rank))
            best_cost[better] = chunk_cost[better]
            best_rank[better] = chunk_rank[better]

    candidates = np.array(candidate_order(reach), dtype=np.int16)
    best_dm = candidates[best_rank, 0]
    best_dn = candidates[best_rank, 1]

    target_m = np.arange(height)[:, None] + best_dm
    target_n = np.arange(width)[None, :] + best_dn
    inside = (target_m >= 0) & (target_m < height) & (target_n >= 0) & (target_n < width)
    matched = np.isfinite(best_cost)
    valid = matched & inside
    logger.debug(
        f"ME {width}x{height}: {valid.mean():.1%} valid vectors, "
        f"{(matched & ~inside).sum()} pointing outside, {span * span} candidates"
    )
    return MotionField(
        dm=np.where(valid, best_dm, 0).astype(np.int16),
        dn=np.where(valid, best_dn, 0).astype(np.int16),
        valid=valid,
        cost=np.where(valid, best_cost, np.inf).astype(np.float32),
    )


def compensate(reference: FrameLike, field: MotionField, distance: int = 1) -> ProjectedFrame:
    """Gather reference samples along the field into the current frame's grid."""
    ref_values, ref_valid = _values_and_validity(reference)
    if ref_values.shape != field.shape:
        raise DimensionError(f"Reference {ref_values.shape} does not match field {field.shape}")

    height, width = ref_values.shape
    rows, cols = np.indices((height, width))
    target_m = rows + field.dm
    target_n = cols + field.dn
    inside = (
        field.valid & (target_m >= 0) & (target_m < height) & (target_n >= 0) & (target_n < width)
    )
    target_m = np.clip(target_m, 0, height - 1)
    target_n = np.clip(target_n, 0, width - 1)

    valid = inside & ref_valid[target_m, target_n]
    assert np.all(ref_valid[target_m[valid], target_n[valid]])
    values = np.where(valid, ref_values[target_m, target_n], 0.0)
    return ProjectedFrame(values=values, valid=valid, distance=distance)


def save_motion_field(field: MotionField, path: Union[str, Path]) -> None:
    """Dump a field as NRSMVF1: magic, dims, then packed little-endian records."""
    height, width = field.shape
    records = np.empty(height * width, dtype=FIELD_RECORD)
    records["dm"] = field.dm.ravel()
    records["dn"] = field.dn.ravel()
    records["valid"] = field.valid.ravel()
    records["cost"] = field.cost.ravel()
    header = FIELD_MAGIC + b"\n" + f"{width} {height}\n".encode("ascii")
    Path(path).write_bytes(header + records.tobytes())


def load_motion_field(path: Union[str, Path]) -> MotionField:
    """Read a field written by save_motion_field."""
    data = Path(path).read_bytes()
    magic, _, rest = data.partition(b"\n")
    if magic != FIELD_MAGIC:
        raise FormatError(f"{path}: not an NRSMVF1 file")
    dims, _, payload = rest.partition(b"\n")
    try:
        width, height = (int(token) for token in dims.split())
    except ValueError as e:
        raise FormatError(f"{path}: bad field dimensions {dims!r}") from e
    if len(payload) != width * height * FIELD_RECORD.itemsize:
        raise FormatError(f"{path}: truncated motion field")

    records = np.frombuffer(payload, dtype=FIELD_RECORD).reshape(height, width)
    return MotionField(
        dm=records["dm"].astype(np.int16),
        dn=records["dn"].astype(np.int16),
        valid=records["valid"].astype(bool),
        cost=records["cost"].astype(np.float32),
    )
