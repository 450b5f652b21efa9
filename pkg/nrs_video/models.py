"""
Data models for the NRS video reconstruction toolkit.

This module defines the core data structures used throughout the system:
masks, sampled frames, reconstruction parameters, motion fields, merged
frames and metric reports. Frames themselves are plain 2-D float64 arrays.
"""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional

import numpy as np
import pandas as pd
from numpy.typing import NDArray

Frame = NDArray[np.float64]


class NrsError(ValueError):
    """Base class for all toolkit errors."""


class DimensionError(NrsError):
    """Odd, zero or mismatched frame/mask dimensions."""


class ParameterError(NrsError):
    """Invalid reconstruction, motion or schedule parameters."""


class FormatError(NrsError):
    """Malformed or truncated file contents."""


class EmptyInputError(NrsError):
    """Empty video, empty frame or empty evaluation region."""


class PixelClass(IntEnum):
    """Per-pixel class of an extrapolation area or merged frame."""

    MISSING = 0
    RECONSTRUCTED = 1
    ACQUIRED = 2
    # merged pixels enter FSR with the reconstructed weight class
    PROJECTED = 1


def _frozen(array: np.ndarray, dtype: type) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def require_same_shape(*arrays: np.ndarray) -> None:
    """Raise DimensionError unless all arrays share one shape."""
    shapes = {a.shape for a in arrays}
    if len(shapes) > 1:
        raise DimensionError(f"Dimension mismatch: {sorted(shapes)}")


@dataclass(frozen=True, eq=False)
class Mask:
    """Boolean grid of acquired positions (set A true, set B false)."""

    acquired: np.ndarray

    def __post_init__(self):
        """Validate the mask and freeze its storage."""
        array = np.asarray(self.acquired)
        if array.ndim != 2:
            raise DimensionError("Mask must be two-dimensional")
        height, width = array.shape
        if width == 0 or height == 0 or width % 2 or height % 2:
            raise DimensionError(f"Mask dimensions must be even and positive, got {width}x{height}")
        object.__setattr__(self, "acquired", _frozen(array, bool))

    @property
    def width(self) -> int:
        return int(self.acquired.shape[1])

    @property
    def height(self) -> int:
        return int(self.acquired.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def missing(self) -> np.ndarray:
        return ~self.acquired

    def is_quadrant_mask(self) -> bool:
        """Check that every aligned 2x2 cell holds exactly one acquired pixel."""
        cells = self.acquired.reshape(self.height // 2, 2, self.width // 2, 2).sum(axis=(1, 3))
        return bool(np.all(cells == 1))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.acquired, other.acquired))

    def __hash__(self) -> int:
        return hash((self.shape, np.packbits(self.acquired).tobytes()))


@dataclass(frozen=True)
class SampledFrame:
    """Sensor output: frame values plus the mask of acquired positions.

    Values at non-acquired positions are zero and never read as signal.
    """

    frame: Frame
    mask: Mask

    def __post_init__(self):
        """Validate dimensions."""
        frame = np.asarray(self.frame, dtype=np.float64)
        if frame.shape != self.mask.shape:
            raise DimensionError(
                f"Frame shape {frame.shape} does not match mask shape {self.mask.shape}"
            )
        object.__setattr__(self, "frame", frame)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape


@dataclass(frozen=True)
class FsrParams:
    """Frequency selective reconstruction parameters (defaults: 4/14/32/100/0.7/0.5/0.5)."""

    block_size: int = 4
    border_width: int = 14
    fft_size: int = 32
    iterations: int = 100
    rho: float = 0.7
    gamma: float = 0.5
    delta: float = 0.5

    def __post_init__(self):
        """Validate parameter ranges."""
        if self.block_size < 1 or self.border_width < 0:
            raise ParameterError("block_size must be >= 1 and border_width >= 0")
        if self.block_size + 2 * self.border_width != self.fft_size:
            raise ParameterError(
                f"block_size + 2*border_width must equal fft_size "
                f"({self.block_size} + 2*{self.border_width} != {self.fft_size})"
            )
        if self.fft_size & (self.fft_size - 1):
            raise ParameterError(f"fft_size must be a power of two, got {self.fft_size}")
        if self.iterations < 1:
            raise ParameterError("iterations must be >= 1")
        if not 0.0 < self.rho < 1.0:
            raise ParameterError("rho must lie in (0, 1)")
        if not 0.0 < self.gamma <= 1.0:
            raise ParameterError("gamma must lie in (0, 1]")
        if not 0.0 <= self.delta <= 1.0:
            raise ParameterError("delta must lie in [0, 1]")


@dataclass(frozen=True)
class WeightWindow:
    """Nonnegative sample weights over one fft_size x fft_size area."""

    weights: np.ndarray


@dataclass
class FsrModel:
    """Sparse Fourier model of one extrapolation area."""

    coefficients: np.ndarray
    selected: frozenset[tuple[int, int]]
    model: Frame
    residual_energy: list[float] = field(default_factory=list)

    @classmethod
    def empty(cls, size: int) -> "FsrModel":
        """Zero model with no selected basis functions."""
        return cls(
            coefficients=np.zeros((size, size), dtype=np.complex128),
            selected=frozenset(),
            model=np.zeros((size, size), dtype=np.float64),
        )


@dataclass
class ReconstructionStats:
    """Bookkeeping of one reconstruct_frame call."""

    blocks_total: int = 0
    blocks_modelled: int = 0
    blocks_without_support: int = 0
    mask_all_false: bool = False


@dataclass(frozen=True)
class MeParams:
    """Dense motion estimation parameters."""

    window: int = 17
    search_range: int = 16
    min_overlap: int = 16

    def __post_init__(self):
        """Validate parameter ranges."""
        if self.window < 3 or self.window % 2 == 0:
            raise ParameterError(f"window must be odd and >= 3, got {self.window}")
        if self.search_range < 0:
            raise ParameterError("search_range must be >= 0")
        if self.min_overlap < 1:
            raise ParameterError("min_overlap must be >= 1")


@dataclass
class MotionField:
    """Per-pixel integer displacement from the current frame into the reference."""

    dm: np.ndarray
    dn: np.ndarray
    valid: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        """Validate dimensions."""
        require_same_shape(self.dm, self.dn, self.valid, self.cost)

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(self.dm.shape)  # type: ignore[return-value]

    @classmethod
    def zeros(cls, height: int, width: int) -> "MotionField":
        """All-valid zero-motion field."""
        return cls(
            dm=np.zeros((height, width), dtype=np.int16),
            dn=np.zeros((height, width), dtype=np.int16),
            valid=np.ones((height, width), dtype=bool),
            cost=np.zeros((height, width), dtype=np.float32),
        )


@dataclass
class ProjectedFrame:
    """Support frame samples motion compensated into the current frame."""

    values: np.ndarray
    valid: np.ndarray
    distance: int = 1

    def __post_init__(self):
        """Validate the projection."""
        require_same_shape(self.values, self.valid)
        if self.distance < 1:
            raise ParameterError("Temporal distance k must be >= 1")
        if not np.all(np.isfinite(self.values[self.valid])):
            raise ParameterError("Valid projected values must be finite")


class WeightScheme(str, Enum):
    """Weighting of projections by temporal distance."""

    EQUAL = "equal"
    LINEAR_DECREASING = "linear"


@dataclass(frozen=True)
class WeightSchedule:
    """Weights w_k for k = 1..K."""

    scheme: WeightScheme
    weights: tuple[float, ...]

    def __post_init__(self):
        """Validate weights."""
        if not self.weights or any(w <= 0 for w in self.weights):
            raise ParameterError("A schedule needs at least one positive weight")

    @property
    def support(self) -> int:
        return len(self.weights)

    def weight(self, distance: int) -> float:
        """Weight of the projection at temporal distance k."""
        if not 1 <= distance <= self.support:
            raise ParameterError(f"Distance {distance} outside schedule 1..{self.support}")
        return self.weights[distance - 1]


@dataclass
class MergedFrame:
    """Current frame densified with projected pixels."""

    values: Frame
    classes: np.ndarray
    contributor_count: np.ndarray

    @property
    def mask(self) -> np.ndarray:
        return self.classes == PixelClass.ACQUIRED

    @property
    def projected(self) -> np.ndarray:
        return self.classes == PixelClass.PROJECTED


@dataclass
class VideoBuffer:
    """Ordered luma frames of one sequence."""

    frames: list[Frame]
    name: str = "sequence"
    fps: tuple[int, int] = (30, 1)

    def __post_init__(self):
        """Validate constant dimensions."""
        if self.frames:
            require_same_shape(*self.frames)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> tuple[int, int]:
        if not self.frames:
            raise EmptyInputError("Video buffer is empty")
        return tuple(self.frames[0].shape)  # type: ignore[return-value]


@dataclass
class MetricReport:
    """Per-frame PSNR/SSIM of one reconstruction run."""

    sequence: str
    mode: str
    support: int
    psnr: list[float] = field(default_factory=list)
    ssim: list[float] = field(default_factory=list)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean(self.psnr)) if self.psnr else float("nan")

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim)) if self.ssim else float("nan")

    def to_frame(self) -> pd.DataFrame:
        """Rows in the `sequence,frame,mode,K,psnr_db,ssim` layout."""
        return pd.DataFrame(
            {
                "sequence": self.sequence,
                "frame": np.arange(len(self.psnr)),
                "mode": self.mode,
                "K": self.support,
                "psnr_db": self.psnr,
                "ssim": self.ssim,
            }
        )


@dataclass
class RunResult:
    """Reconstructed frames plus their report."""

    frames: list[Frame]
    report: MetricReport
    seconds: Optional[float] = None
