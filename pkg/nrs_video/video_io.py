"""
Video and still-image input/output plus synthetic test sequences.

All processing works on real-valued luma; quantization to 8 bit happens only
when a file is written. Supported containers:

- Y4M (YUV4MPEG2), luma read from 4:2:0, 4:2:2, 4:4:4 and mono streams
- planar raw YUV with explicit dimensions
- binary PGM (P5, maxval 255) for single frames
"""

import logging
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from .models import (
    DimensionError,
    EmptyInputError,
    FormatError,
    Frame,
    ParameterError,
    VideoBuffer,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

Y4M_MAGIC = b"YUV4MPEG2"
# colorspace tag -> (horizontal, vertical) chroma subsampling, None for mono
_Y4M_CHROMA: dict[str, Optional[tuple[int, int]]] = {
    "420": (2, 2),
    "420jpeg": (2, 2),
    "420paldv": (2, 2),
    "420mpeg2": (2, 2),
    "422": (2, 1),
    "444": (1, 1),
    "mono": None,
}


def quantize(frame: Frame) -> np.ndarray:
    """Round and clip to 8 bit."""
    return np.clip(np.rint(frame), 0, 255).astype(np.uint8)


def _chroma_bytes(width: int, height: int, chroma: str) -> int:
    if chroma not in _Y4M_CHROMA:
        raise FormatError(f"Unsupported chroma format: {chroma}")
    factors = _Y4M_CHROMA[chroma]
    if factors is None:
        return 0
    fx, fy = factors
    return 2 * math.ceil(width / fx) * math.ceil(height / fy)


def _parse_y4m_header(line: bytes) -> dict[str, str]:
    tokens = line.decode("ascii", errors="replace").split()
    if not tokens or tokens[0] != Y4M_MAGIC.decode():
        raise FormatError("Not a YUV4MPEG2 stream")
    header = {"C": "420", "F": "30:1"}
    for token in tokens[1:]:
        tag, value = token[0], token[1:]
        if tag not in "WHFIACX":
            raise FormatError(f"Unsupported Y4M header token: {token}")
        if tag == "C" and value not in _Y4M_CHROMA:
            raise FormatError(f"Unsupported Y4M colorspace: {value}")
        if tag != "X":
            header[tag] = value
    if "W" not in header or "H" not in header:
        raise FormatError("Y4M header lacks W or H")
    return header


def _dimensions(width: Union[str, bytes], height: Union[str, bytes], path: PathLike) -> tuple[int, int]:
    """Positive integer frame size from header fields."""
    try:
        size = int(width), int(height)
    except ValueError as e:
        raise FormatError(f"{path}: bad frame size {width!r} x {height!r}") from e
    if min(size) < 1:
        raise FormatError(f"{path}: frame size must be positive, got {size[0]}x{size[1]}")
    return size


def _parse_fps(value: str) -> tuple[int, int]:
    try:
        num, den = (int(part) for part in value.split(":"))
    except ValueError as e:
        raise FormatError(f"Bad Y4M frame rate: {value}") from e
    return num, den


def read_y4m(path: PathLike) -> VideoBuffer:
    """Read the luma planes of a Y4M file."""
    data = Path(path).read_bytes()
    end = data.find(b"\n")
    if end < 0:
        raise FormatError(f"{path}: missing Y4M header")
    header = _parse_y4m_header(data[:end])
    width, height = _dimensions(header["W"], header["H"], path)
    luma = width * height
    chroma = _chroma_bytes(width, height, header["C"])

    frames: list[Frame] = []
    offset = end + 1
    while offset < len(data):
        index = len(frames)
        marker_end = data.find(b"\n", offset)
        if marker_end < 0 or not data[offset:marker_end].startswith(b"FRAME"):
            raise FormatError(f"{path}: frame {index} has no FRAME marker")
        start = marker_end + 1
        if start + luma + chroma > len(data):
            raise FormatError(f"{path}: frame {index} is truncated")
        plane = np.frombuffer(data, dtype=np.uint8, count=luma, offset=start)
        frames.append(plane.reshape(height, width).astype(np.float64))
        offset = start + luma + chroma

    logger.debug(f"Read {len(frames)} frames of {width}x{height} from {path}")
    return VideoBuffer(frames=frames, name=Path(path).stem, fps=_parse_fps(header["F"]))


def write_y4m(buffer: VideoBuffer, path: PathLike, chroma: str = "420jpeg") -> None:
    """Write luma frames into a Y4M file with constant (128) chroma."""
    if not buffer.frames:
        raise EmptyInputError("Cannot write an empty video")
    height, width = buffer.shape
    chroma_plane = bytes([128]) * _chroma_bytes(width, height, chroma)
    num, den = buffer.fps
    with open(path, "wb") as handle:
        handle.write(f"YUV4MPEG2 W{width} H{height} F{num}:{den} Ip A1:1 C{chroma}\n".encode("ascii"))
        for frame in buffer.frames:
            handle.write(b"FRAME\n")
            handle.write(quantize(frame).tobytes())
            handle.write(chroma_plane)


def read_yuv(path: PathLike, width: int, height: int, chroma: str = "420") -> VideoBuffer:
    """Read planar raw YUV with explicit dimensions."""
    data = Path(path).read_bytes()
    luma = width * height
    frame_bytes = luma + _chroma_bytes(width, height, chroma)
    count, remainder = divmod(len(data), frame_bytes)
    if remainder:
        raise FormatError(f"{path}: frame {count} is truncated")
    frames = [
        np.frombuffer(data, dtype=np.uint8, count=luma, offset=i * frame_bytes)
        .reshape(height, width)
        .astype(np.float64)
        for i in range(count)
    ]
    return VideoBuffer(frames=frames, name=Path(path).stem)


def write_yuv(buffer: VideoBuffer, path: PathLike, chroma: str = "420") -> None:
    """Write planar raw YUV with constant (128) chroma."""
    if not buffer.frames:
        raise EmptyInputError("Cannot write an empty video")
    height, width = buffer.shape
    chroma_plane = bytes([128]) * _chroma_bytes(width, height, chroma)
    with open(path, "wb") as handle:
        for frame in buffer.frames:
            handle.write(quantize(frame).tobytes())
            handle.write(chroma_plane)


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """First `count` header tokens of a PNM file and the offset after them."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.find(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("Truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates header and raster
    return tokens, pos + 1


def read_image(path: PathLike) -> VideoBuffer:
    """Read a binary PGM (P5, maxval 255) as a one-frame buffer."""
    data = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: only binary PGM (P5) is supported")
    width, height = _dimensions(tokens[1], tokens[2], path)
    try:
        maxval = int(tokens[3])
    except ValueError as e:
        raise FormatError(f"{path}: bad PGM maxval {tokens[3]!r}") from e
    if maxval != 255:
        raise FormatError(f"{path}: maxval {maxval} unsupported, expected 255")
    if len(data) - offset < width * height:
        raise FormatError(f"{path}: truncated PGM raster")
    plane = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=offset)
    return VideoBuffer(frames=[plane.reshape(height, width).astype(np.float64)], name=Path(path).stem)


def write_image(frame: Frame, path: PathLike) -> None:
    """Write one frame as binary PGM."""
    height, width = frame.shape
    Path(path).write_bytes(f"P5\n{width} {height}\n255\n".encode("ascii") + quantize(frame).tobytes())


def read_video(
    path: PathLike,
    format: Optional[str] = None,
    width: Optional[int] = None,
    height: Optional[int] = None,
) -> VideoBuffer:
    """Read a Y4M, raw YUV or PGM file; the format defaults to the extension."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input not found: {path}")
    kind = (format or path.suffix.lstrip(".")).lower()
    if kind == "y4m":
        return read_y4m(path)
    if kind == "yuv":
        if not width or not height:
            raise FormatError("Raw YUV input needs explicit width and height")
        return read_yuv(path, width, height)
    if kind == "pgm":
        return read_image(path)
    raise FormatError(f"Unsupported video format: {kind}")


def write_video(buffer: VideoBuffer, path: PathLike, format: Optional[str] = None) -> None:
    """Write a buffer as Y4M, raw YUV or (single frame) PGM."""
    path = Path(path)
    kind = (format or path.suffix.lstrip(".")).lower()
    if not buffer.frames:
        raise EmptyInputError("Cannot write an empty video")
    if kind == "y4m":
        write_y4m(buffer, path)
    elif kind == "yuv":
        write_yuv(buffer, path)
    elif kind == "pgm":
        if len(buffer) != 1:
            raise FormatError("PGM output holds exactly one frame")
        write_image(buffer.frames[0], path)
    else:
        raise FormatError(f"Unsupported video format: {kind}")


def make_texture(width: int, height: int, seed: int = 0) -> Frame:
    """Deterministic natural-looking texture in 0..255 (multi-scale filtered noise)."""
    rng = np.random.default_rng(seed)
    texture = np.zeros((height, width))
    for sigma, gain in ((1.0, 0.35), (2.5, 0.6), (6.0, 1.0), (14.0, 1.2)):
        layer = ndimage.gaussian_filter(rng.standard_normal((height, width)), sigma, mode="wrap")
        texture += gain * layer / (layer.std() or 1.0)
    texture -= texture.min()
    return 16.0 + 223.0 * texture / (texture.max() or 1.0)


def _even(value: int) -> int:
    return value - value % 2


def _sample(base: Frame, rows: np.ndarray, cols: np.ndarray) -> Frame:
    height, width = base.shape
    if rows.min() < 0 or cols.min() < 0 or rows.max() > height - 1 or cols.max() > width - 1:
        raise DimensionError("Requested motion exceeds the base image extent")
    return ndimage.map_coordinates(base, [rows, cols], order=1, mode="nearest")


def synthesize_sequence(
    kind: str,
    base: Frame,
    frames: int,
    rate: float,
    shape: Optional[tuple[int, int]] = None,
    direction: tuple[int, int] = (1, 0),
) -> VideoBuffer:
    """Synthetic sequence with translation, zoom or rotation.

    translate: frame i is the base cropped at offset i*rate*direction
               (integer rate, (row, col) direction).
    zoom:      frame i is the base magnified by rate**i about its centre.
    rotate:    frame i is the base rotated by i*rate degrees about its centre.
    """
    if frames < 1:
        raise ParameterError("A sequence needs at least one frame")
    base = np.asarray(base, dtype=np.float64)
    height, width = base.shape

    if kind == "translate":
        if rate != int(rate) or rate < 0:
            raise ParameterError("Translation rate must be a non-negative integer")
        dy, dx = (int(rate) * d for d in direction)
        reach_y, reach_x = abs(dy) * (frames - 1), abs(dx) * (frames - 1)
        out_h, out_w = shape or (_even(height - reach_y), _even(width - reach_x))
        if out_h <= 0 or out_w <= 0 or out_h + reach_y > height or out_w + reach_x > width:
            raise DimensionError("Requested motion exceeds the base image extent")
        start_y = reach_y if dy < 0 else 0
        start_x = reach_x if dx < 0 else 0
        sequence = [
            base[start_y + i * dy : start_y + i * dy + out_h, start_x + i * dx : start_x + i * dx + out_w].copy()
            for i in range(frames)
        ]
        return VideoBuffer(frames=sequence, name=f"translate_{int(rate)}")

    if kind == "zoom":
        out_h, out_w = shape or (height, width)
    elif kind == "rotate":
        side = _even(int(min(height, width) / math.sqrt(2)))
        out_h, out_w = shape or (side, side)
    else:
        raise ParameterError(f"Unknown motion kind: {kind}")

    center_y, center_x = (height - 1) / 2.0, (width - 1) / 2.0
    grid_y, grid_x = np.indices((out_h, out_w), dtype=np.float64)
    grid_y -= (out_h - 1) / 2.0
    grid_x -= (out_w - 1) / 2.0

    sequence = []
    for i in range(frames):
        if kind == "zoom":
            scale = rate**i
            rows, cols = grid_y / scale, grid_x / scale
        else:
            angle = math.radians(rate * i)
            rows = math.cos(angle) * grid_y - math.sin(angle) * grid_x
            cols = math.sin(angle) * grid_y + math.cos(angle) * grid_x
        sequence.append(_sample(base, rows + center_y, cols + center_x))
    return VideoBuffer(frames=sequence, name=f"{kind}_{rate:g}")

