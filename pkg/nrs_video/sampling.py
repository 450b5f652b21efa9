"""
Quadrant-based non-regular sampling masks.

Every aligned 2x2 cell of the high resolution grid corresponds to one low
resolution pixel of which exactly one quadrant is light sensitive. The
quadrant is drawn from a counter-based SplitMix64 generator so that a seed
reproduces the same mask bit-exactly on every platform:

    z = splitmix64(seed * 2**32 + cell_index)     (uint64 wraparound)
    quadrant = z >> 62                            0=TL, 1=TR, 2=BL, 3=BR

Cells are indexed row-major over the (height/2) x (width/2) cell grid.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from .models import DimensionError, FormatError, Frame, Mask, SampledFrame

logger = logging.getLogger(__name__)

MASK_MAGIC = b"NRSMASK1"
_U64 = 0xFFFFFFFFFFFFFFFF

PathLike = Union[str, Path]


def _splitmix64(counter: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 counter array."""
    with np.errstate(over="ignore"):
        z = counter + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def quadrant_choices(cells: int, seed: int) -> np.ndarray:
    """Quadrant index 0..3 for each of `cells` consecutive cells."""
    base = np.uint64(((seed & _U64) << 32) & _U64)
    with np.errstate(over="ignore"):
        counter = base + np.arange(cells, dtype=np.uint64)
    return (_splitmix64(counter) >> np.uint64(62)).astype(np.int64)


def generate_quadrant_mask(width: int, height: int, seed: int) -> Mask:
    """Generate the fixed quadrant mask: one acquired pixel per 2x2 cell."""
    if width <= 0 or height <= 0 or width % 2 or height % 2:
        raise DimensionError(f"Mask dimensions must be even and positive, got {width}x{height}")

    cells_y, cells_x = height // 2, width // 2
    quadrant = quadrant_choices(cells_y * cells_x, seed).reshape(cells_y, cells_x)

    acquired = np.zeros((height, width), dtype=bool)
    cy, cx = np.indices((cells_y, cells_x))
    acquired[2 * cy + (quadrant >> 1), 2 * cx + (quadrant & 1)] = True

    logger.debug(f"Generated {width}x{height} quadrant mask for seed {seed}")
    return Mask(acquired)


def apply_mask(full: Frame, mask: Mask) -> SampledFrame:
    """Keep acquired samples, zero everything else."""
    full = np.asarray(full, dtype=np.float64)
    if full.shape != mask.shape:
        raise DimensionError(f"Frame shape {full.shape} does not match mask shape {mask.shape}")
    return SampledFrame(frame=np.where(mask.acquired, full, 0.0), mask=mask)


def mask_density(mask: Mask) -> float:
    """Fraction of acquired pixels."""
    return float(mask.acquired.mean())


def save_mask(mask: Mask, path: PathLike) -> None:
    """Write the packed binary NRSMASK1 format (row-major, MSB first)."""
    header = MASK_MAGIC + b"\n" + f"{mask.width} {mask.height}\n".encode("ascii")
    payload = np.packbits(mask.acquired.ravel(), bitorder="big").tobytes()
    Path(path).write_bytes(header + payload)


def load_mask(path: PathLike) -> Mask:
    """Read a mask written by save_mask."""
    data = Path(path).read_bytes()
    magic, _, rest = data.partition(b"\n")
    if magic != MASK_MAGIC:
        raise FormatError(f"{path}: not an NRSMASK1 file")
    dims, _, payload = rest.partition(b"\n")
    try:
        width, height = (int(token) for token in dims.split())
    except ValueError as e:
        raise FormatError(f"{path}: bad mask dimensions {dims!r}") from e

    count = width * height
    if len(payload) != (count + 7) // 8:
        raise FormatError(f"{path}: expected {(count + 7) // 8} mask bytes, got {len(payload)}")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=count, bitorder="big")
    return Mask(bits.reshape(height, width).astype(bool))


def save_mask_pbm(mask: Mask, path: PathLike) -> None:
    """Write a human-readable PBM (P1) with 1 marking acquired pixels."""
    rows = "\n".join(" ".join("1" if bit else "0" for bit in row) for row in mask.acquired)
    Path(path).write_text(f"P1\n{mask.width} {mask.height}\n{rows}\n", encoding="ascii")


def load_mask_pbm(path: PathLike) -> Mask:
    """Read a P1 PBM mask, ignoring comments."""
    tokens: list[str] = []
    for line in Path(path).read_text(encoding="ascii").splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P1":
        raise FormatError(f"{path}: not a P1 PBM file")
    try:
        width, height = int(tokens[1]), int(tokens[2])
    except (IndexError, ValueError) as e:
        raise FormatError(f"{path}: bad PBM header") from e

    # P1 allows bits without separators
    bits = "".join(tokens[3:])
    if len(bits) != width * height or set(bits) - {"0", "1"}:
        raise FormatError(f"{path}: expected {width * height} bits")
    return Mask(np.frombuffer(bits.encode("ascii"), dtype=np.uint8).reshape(height, width) == ord("1"))
