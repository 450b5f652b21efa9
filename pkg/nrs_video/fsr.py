"""
Frequency selective reconstruction (FSR) of a single frame.

Each block of the frame is extrapolated from a surrounding fft_size x
fft_size area. A sparse model of two-dimensional Fourier basis functions

    phi_(k,l)[m,n] = exp(2j*pi*(k*m + l*n) / N)

is grown greedily: every iteration picks the basis function whose
projection onto the weighted residual is largest, estimates its weight by
weighted least squares over the real conjugate pair and adds gamma times
that estimate to the model. Only one forward FFT per block is needed
because the residual spectrum is updated with shifted copies of the window
spectrum.

Blocks whose areas cannot reach each other are grouped into wavefronts,
and every block of a wavefront (over all frames handed in together) runs
through the greedy iterations as one stacked array.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .models import (
    DimensionError,
    Frame,
    FsrModel,
    FsrParams,
    PixelClass,
    ReconstructionStats,
    SampledFrame,
    WeightWindow,
)

logger = logging.getLogger(__name__)

DEFAULT_PARAMS = FsrParams()

# smallest eigenvalue ratio of the pair system solved in closed form
SINGULAR_RATIO = 1e-10

# blocks modelled in one stacked array
BATCH_BLOCKS = 512


@lru_cache(maxsize=64)
def _center_distance(
    fft_size: int, border_width: int, block_h: int, block_w: int
) -> np.ndarray:
    """Euclidean distance of every area position to the center of the block."""
    center_m = border_width + (block_h - 1) / 2.0
    center_n = border_width + (block_w - 1) / 2.0
    m, n = np.indices((fft_size, fft_size), dtype=np.float64)
    distance = np.hypot(m - center_m, n - center_n)
    distance.setflags(write=False)
    return distance


def weight_window(
    area_classes: np.ndarray,
    params: FsrParams = DEFAULT_PARAMS,
    block_shape: Optional[tuple[int, int]] = None,
) -> WeightWindow:
    """Spatial weights: rho^d for acquired, delta*rho^d for reconstructed, 0 for missing."""
    size = params.fft_size
    if area_classes.shape != (size, size):
        raise DimensionError(f"Area must be {size}x{size}, got {area_classes.shape}")
    block_h, block_w = block_shape or (params.block_size, params.block_size)

    decay = params.rho ** _center_distance(size, params.border_width, block_h, block_w)
    weights = np.where(
        area_classes == PixelClass.ACQUIRED,
        decay,
        np.where(area_classes == PixelClass.RECONSTRUCTED, params.delta * decay, 0.0),
    )
    return WeightWindow(weights)


def _pair_increment(p: complex, q: complex, w0: float) -> complex:
    """Weighted LS coefficient of the real pair a*cos + b*sin, as a complex c.

    p = <w*r, phi>, q = <w, phi*phi>, w0 = <w, 1>; the pair c*phi + conj(c)*conj(phi)
    equals a*cos + b*sin with c = (a - jb) / 2. Singular systems get the
    minimum-norm solution.
    """
    gram = np.array(
        [[(w0 + q.real) / 2.0, -q.imag / 2.0], [-q.imag / 2.0, (w0 - q.real) / 2.0]]
    )
    rhs = np.array([p.real, -p.imag])
    (a, b), *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    return complex(a, -b) / 2.0


def _pair_increments(p: np.ndarray, q: np.ndarray, w0: np.ndarray, real_basis: np.ndarray) -> np.ndarray:
    """_pair_increment for a stack of blocks, closed form where the 2x2 system is regular.

    Real basis functions (DC, Nyquist) get p.real / w0.
    """
    # eigenvalues of the gram matrix are (w0 +- |q|) / 2
    magnitude = np.abs(q)
    regular = ~real_basis & (w0 - magnitude > SINGULAR_RATIO * (w0 + magnitude))
    det = np.where(regular, (w0 * w0 - magnitude * magnitude) / 4.0, 1.0)
    g11, g22, g12 = (w0 + q.real) / 2.0, (w0 - q.real) / 2.0, -q.imag / 2.0
    a = (g22 * p.real + g12 * p.imag) / det
    b = (-g11 * p.imag - g12 * p.real) / det
    increments = np.where(real_basis, p.real / w0, (a - 1j * b) / 2.0)

    for index in np.flatnonzero(~real_basis & ~regular):
        increments[index] = _pair_increment(complex(p[index]), complex(q[index]), float(w0[index]))
    return increments


@dataclass
class _GreedyResult:
    coefficients: np.ndarray
    picks: np.ndarray
    supported: np.ndarray
    energy: list[np.ndarray]


def _greedy_models(
    areas: np.ndarray, weights: np.ndarray, params: FsrParams, trace: bool = False
) -> _GreedyResult:
    """Greedy selection run on a stack of independent areas at once.

    `picks[i, b]` is the (u, v) chosen for block b in iteration i. Blocks
    without any weight keep all-zero coefficients.
    """
    count, size, _ = areas.shape
    half = size // 2 + 1
    blocks = np.arange(count)

    # zero-weight positions never contribute, whatever they store
    areas = np.where(weights > 0, areas, 0.0)
    window_spectrum = np.fft.fft2(weights)
    # the residual of a real signal is Hermitian: columns 0..N/2 carry all of it
    residual = np.fft.rfft2(weights * areas)
    # shifted[b, s, t] is window_spectrum[b] rolled by (-s, -t), cut to the kept columns
    shifted = sliding_window_view(np.tile(window_spectrum, (1, 2, 2)), (size, half), axis=(1, 2))
    w0 = window_spectrum[:, 0, 0].real.copy()
    supported = w0 > 0.0
    w0[~supported] = 1.0

    coefficients = np.zeros((count, size, size), dtype=np.complex128)
    picks = np.empty((params.iterations, count, 2), dtype=np.int64)
    energy: list[np.ndarray] = []

    for iteration in range(params.iterations):
        power = residual.real**2 + residual.imag**2
        u, v = np.divmod(power.reshape(count, -1).argmax(axis=1), half)
        cu, cv = (-u) % size, (-v) % size
        real_basis = (u == cu) & (v == cv)
        p = residual[blocks, u, v]
        q = window_spectrum[blocks, (2 * u) % size, (2 * v) % size]

        step = params.gamma * _pair_increments(p, q, w0, real_basis)
        step[~supported] = 0.0
        mirror = np.where(real_basis, 0.0, step.conj())

        coefficients[blocks, u, v] += step
        coefficients[blocks, cu, cv] += mirror
        residual -= step[:, None, None] * shifted[blocks, cu, cv]
        residual -= mirror[:, None, None] * shifted[blocks, u, v]
        picks[iteration, :, 0] = u
        picks[iteration, :, 1] = v

        if trace:
            model = (size * size * np.fft.ifft2(coefficients)).real
            energy.append(np.sum(weights * (areas - model) ** 2, axis=(1, 2)))

    return _GreedyResult(coefficients, picks, supported, energy)


def generate_block_model(
    area: np.ndarray,
    window: WeightWindow,
    params: FsrParams = DEFAULT_PARAMS,
    trace: bool = False,
) -> FsrModel:
    """Greedy sparse Fourier model of one extrapolation area.

    With trace=True the weighted residual energy after every iteration is
    recorded in `FsrModel.residual_energy`.
    """
    size = params.fft_size
    weights = window.weights
    if area.shape != (size, size) or weights.shape != (size, size):
        raise DimensionError(f"Area and window must be {size}x{size}")
    if float(weights.sum()) <= 0.0:
        return FsrModel.empty(size)

    result = _greedy_models(area[None], weights[None], params, trace)
    coefficients = result.coefficients[0]
    selected = {
        min((u, v), ((-u) % size, (-v) % size)) for u, v in result.picks[:, 0].tolist()
    }
    model = size * size * np.fft.ifft2(coefficients)
    return FsrModel(
        coefficients=coefficients,
        selected=frozenset(selected),
        model=model.real.copy(),
        residual_energy=[float(e[0]) for e in result.energy],
    )


def initial_classes(sampled: SampledFrame, prior: Optional[np.ndarray] = None) -> np.ndarray:
    """Class grid of a frame: acquired from the mask, reconstructed from the prior."""
    classes = np.full(sampled.shape, PixelClass.MISSING, dtype=np.int8)
    if prior is not None:
        if prior.shape != sampled.shape:
            raise DimensionError(f"Prior shape {prior.shape} does not match {sampled.shape}")
        classes[prior >= PixelClass.RECONSTRUCTED] = PixelClass.RECONSTRUCTED
    classes[sampled.mask.acquired] = PixelClass.ACQUIRED
    return classes


def wavefronts(height: int, width: int, params: FsrParams = DEFAULT_PARAMS) -> list[list[tuple[int, int]]]:
    """Block origins (by, bx) grouped into waves that may be modelled together.

    Block (i, j) goes to wave j + (r + 1) * i with r = ceil(border / block).
    A block's area only reaches blocks at most r rows or columns away; all
    of those that precede it in raster order land on earlier waves and all
    that follow it on later ones. Processing the waves in order therefore
    reproduces raster order exactly.
    """
    block = params.block_size
    reach = -(-params.border_width // block)
    rows, cols = -(-height // block), -(-width // block)
    waves: list[list[tuple[int, int]]] = [[] for _ in range(cols - 1 + (reach + 1) * (rows - 1) + 1)]
    for i in range(rows):
        for j in range(cols):
            waves[j + (reach + 1) * i].append((i * block, j * block))
    return waves


@dataclass
class _FrameState:
    classes: np.ndarray
    values: np.ndarray
    padded_classes: np.ndarray
    stats: ReconstructionStats


def reconstruct_frames_with_stats(
    frames: Sequence[tuple[SampledFrame, Optional[np.ndarray]]],
    params: FsrParams = DEFAULT_PARAMS,
    max_value: float = 255.0,
) -> list[tuple[Frame, ReconstructionStats]]:
    """Block-wise FSR of several equally sized frames.

    Every frame is processed in raster order. The blocks of one wave, across
    all frames, are modelled in a single batch.
    """
    if not frames:
        return []
    height, width = frames[0][0].shape
    if any(sampled.shape != (height, width) for sampled, _ in frames):
        raise DimensionError("Frames reconstructed together must share one size")
    block, border, size = params.block_size, params.border_width, params.fft_size
    if height < block or width < block:
        raise DimensionError(f"Frame {width}x{height} is smaller than block size {block}")

    pad = size
    states = []
    for sampled, prior in frames:
        classes = initial_classes(sampled, prior)
        stats = ReconstructionStats(mask_all_false=not sampled.mask.acquired.any())
        if stats.mask_all_false:
            logger.warning("Mask has no acquired pixels; reconstruction yields zeros")
        values = np.pad(np.where(classes != PixelClass.MISSING, sampled.frame, 0.0), pad)
        padded = np.pad(classes, pad, constant_values=PixelClass.MISSING)
        states.append(_FrameState(classes, values, padded, stats))

    for wave in wavefronts(height, width, params):
        jobs = []
        areas, weights = [], []
        for state in states:
            for by, bx in wave:
                block_h, block_w = min(block, height - by), min(block, width - bx)
                state.stats.blocks_total += 1
                rows = slice(by + pad, by + pad + block_h)
                cols = slice(bx + pad, bx + pad + block_w)
                targets = state.padded_classes[rows, cols] == PixelClass.MISSING
                if not targets.any():
                    continue

                top, left = by + pad - border, bx + pad - border
                areas.append(state.values[top : top + size, left : left + size])
                window = weight_window(
                    state.padded_classes[top : top + size, left : left + size], params, (block_h, block_w)
                )
                weights.append(window.weights)
                jobs.append((state, rows, cols, targets))
        if not jobs:
            continue

        models, support = [], []
        for start in range(0, len(jobs), BATCH_BLOCKS):
            chunk = slice(start, start + BATCH_BLOCKS)
            result = _greedy_models(np.stack(areas[chunk]), np.stack(weights[chunk]), params)
            models.append((size * size * np.fft.ifft2(result.coefficients)).real)
            support.append(result.supported)
        for (state, rows, cols, targets), model, supported in zip(
            jobs, np.concatenate(models), np.concatenate(support)
        ):
            state.stats.blocks_modelled += 1
            if not supported:
                state.stats.blocks_without_support += 1
            estimate = model[border : border + targets.shape[0], border : border + targets.shape[1]]
            state.values[rows, cols][targets] = estimate[targets]
            state.padded_classes[rows, cols][targets] = PixelClass.RECONSTRUCTED

    outputs = []
    for state in states:
        output = state.values[pad : pad + height, pad : pad + width].copy()
        filled = state.classes == PixelClass.MISSING
        output[filled] = np.clip(output[filled], 0.0, max_value)
        logger.debug(
            f"FSR {width}x{height}: {state.stats.blocks_modelled}/{state.stats.blocks_total} blocks modelled, "
            f"{state.stats.blocks_without_support} without support"
        )
        outputs.append((output, state.stats))
    return outputs


def reconstruct_frame_with_stats(
    sampled: SampledFrame,
    prior: Optional[np.ndarray] = None,
    params: FsrParams = DEFAULT_PARAMS,
    max_value: float = 255.0,
) -> tuple[Frame, ReconstructionStats]:
    """Block-wise FSR of one frame in raster order, plus bookkeeping."""
    return reconstruct_frames_with_stats([(sampled, prior)], params, max_value)[0]


def reconstruct_frame(
    sampled: SampledFrame,
    prior: Optional[np.ndarray] = None,
    params: FsrParams = DEFAULT_PARAMS,
    max_value: float = 255.0,
) -> Frame:
    """Reconstruct all missing pixels of one frame.

    Acquired pixels are returned bit-identical; pixels marked reconstructed
    in `prior` (merged projections) are support and are kept as given.
    """
    output, _ = reconstruct_frame_with_stats(sampled, prior, params, max_value)
    return output
