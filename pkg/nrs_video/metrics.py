"""
PSNR/SSIM evaluation and gain aggregation against a baseline reconstruction.

Both metrics ignore a border margin (4 pixels by default) of every frame.
SSIM follows the usual parameterization: 11x11 Gaussian window with
sigma 1.5, C1 = (0.01*255)^2, C2 = (0.03*255)^2.
"""

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
from scipy import ndimage

from .models import DimensionError, EmptyInputError, Frame, MetricReport, NrsError

logger = logging.getLogger(__name__)

MAX_VALUE = 255.0
DEFAULT_MARGIN = 4
SSIM_SIGMA = 1.5
SSIM_TRUNCATE = 3.5
SSIM_WINDOW = 11
C1 = (0.01 * MAX_VALUE) ** 2
C2 = (0.03 * MAX_VALUE) ** 2

FRAME_COLUMNS = ["sequence", "frame", "mode", "K", "psnr_db", "ssim"]
GAIN_COLUMNS = ["K", "psnr_gain_db", "ssim_gain"]

# average gains over FSR-SF on the 720p reference set, K = 1..5
REFERENCE_GAINS = pd.DataFrame(
    {
        "mode": ["mf"] * 5 + ["rmf"] * 5,
        "K": list(range(1, 6)) * 2,
        "reference_psnr_gain_db": [0.30, 0.48, 0.62, 0.73, 0.82, 0.34, 0.63, 0.84, 1.00, 1.13],
        "reference_ssim_gain": [
            0.94e-3, 1.60e-3, 2.33e-3, 2.91e-3, 3.42e-3,
            1.08e-3, 2.24e-3, 3.19e-3, 3.98e-3, 4.63e-3,
        ],
    }
)


def crop_margin(frame: Frame, margin: int) -> Frame:
    """Inner region without `margin` pixels on every side."""
    height, width = frame.shape
    if margin < 0 or 2 * margin >= min(height, width):
        raise EmptyInputError(f"Margin {margin} leaves no region inside {width}x{height}")
    return frame[margin : height - margin, margin : width - margin]


def _pair(reference: Frame, test: Frame, margin: int) -> tuple[Frame, Frame]:
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape:
        raise DimensionError(f"Frame shapes differ: {reference.shape} vs {test.shape}")
    return crop_margin(reference, margin), crop_margin(test, margin)


def psnr(reference: Frame, test: Frame, margin: int = DEFAULT_MARGIN) -> float:
    """Peak signal-to-noise ratio in dB; inf for identical regions."""
    x, y = _pair(reference, test, margin)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(MAX_VALUE**2 / mse))


def _ssim_maps(x: Frame, y: Frame, window: str) -> tuple[np.ndarray, np.ndarray]:
    """Luminance and contrast-structure maps, cropped to fully covered positions."""
    if min(x.shape) < SSIM_WINDOW:
        raise EmptyInputError(f"Region {x.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    if window == "gaussian":
        def smooth(a: np.ndarray) -> np.ndarray:
            return ndimage.gaussian_filter(a, sigma=SSIM_SIGMA, truncate=SSIM_TRUNCATE, mode="reflect")
    elif window == "uniform":
        def smooth(a: np.ndarray) -> np.ndarray:
            return ndimage.uniform_filter(a, size=SSIM_WINDOW, mode="reflect")
    else:
        raise NrsError(f"Unknown SSIM window: {window}")

    mu_x, mu_y = smooth(x), smooth(y)
    var_x = smooth(x * x) - mu_x * mu_x
    var_y = smooth(y * y) - mu_y * mu_y
    cov = smooth(x * y) - mu_x * mu_y

    luminance = (2 * mu_x * mu_y + C1) / (mu_x * mu_x + mu_y * mu_y + C1)
    contrast_structure = (2 * cov + C2) / (var_x + var_y + C2)

    pad = (SSIM_WINDOW - 1) // 2
    inner = (slice(pad, -pad), slice(pad, -pad))
    return luminance[inner], contrast_structure[inner]


def ssim(reference: Frame, test: Frame, margin: int = DEFAULT_MARGIN, window: str = "gaussian") -> float:
    """Mean structural similarity over the margin-cropped region."""
    x, y = _pair(reference, test, margin)
    if np.array_equal(x, y):
        if min(x.shape) < SSIM_WINDOW:
            raise EmptyInputError(f"Region {x.shape} is smaller than the SSIM window")
        return 1.0
    luminance, contrast_structure = _ssim_maps(x, y, window)
    return float(np.mean(luminance * contrast_structure))


def ssim_components(
    reference: Frame, test: Frame, margin: int = DEFAULT_MARGIN, window: str = "gaussian"
) -> dict[str, float]:
    """Mean luminance and contrast-structure terms of SSIM."""
    x, y = _pair(reference, test, margin)
    luminance, contrast_structure = _ssim_maps(x, y, window)
    return {
        "luminance": float(np.mean(luminance)),
        "contrast_structure": float(np.mean(contrast_structure)),
    }


def evaluate(
    originals: Sequence[Frame],
    reconstructed: Sequence[Frame],
    sequence: str,
    mode: str,
    support: int = 0,
    margin: int = DEFAULT_MARGIN,
    ssim_window: str = "gaussian",
) -> MetricReport:
    """Per-frame PSNR and SSIM of a reconstructed video against its original."""
    if len(originals) != len(reconstructed):
        raise DimensionError(
            f"Frame counts differ: {len(originals)} originals vs {len(reconstructed)} reconstructed"
        )
    if not originals:
        raise EmptyInputError("Nothing to evaluate")
    report = MetricReport(sequence=sequence, mode=mode, support=support)
    for original, frame in zip(originals, reconstructed):
        report.psnr.append(psnr(original, frame, margin))
        report.ssim.append(ssim(original, frame, margin, ssim_window))
    return report


def frame_table(reports: Sequence[MetricReport]) -> pd.DataFrame:
    """All per-frame rows of the given reports."""
    if not reports:
        return pd.DataFrame(columns=FRAME_COLUMNS)
    return pd.concat([r.to_frame() for r in reports], ignore_index=True)[FRAME_COLUMNS]


def gain_table(reports: Sequence[MetricReport], baseline: str = "sf") -> pd.DataFrame:
    """Mean PSNR/SSIM gain per (mode, K) over all frames of all sequences."""
    frames = frame_table(reports)
    base = frames[frames["mode"] == baseline][["sequence", "frame", "psnr_db", "ssim"]]
    if base.empty:
        raise NrsError(f"No reports for baseline '{baseline}'")
    base_keys = set(zip(base["sequence"], base["frame"]))

    for (mode, support), rows in frames.groupby(["mode", "K"], sort=False):
        if set(zip(rows["sequence"], rows["frame"])) != base_keys:
            raise NrsError(f"Run {mode} K={support} covers other frames than baseline '{baseline}'")

    paired = frames.merge(base, on=["sequence", "frame"], suffixes=("", "_base"))
    with np.errstate(invalid="ignore"):
        paired["psnr_gain_db"] = paired["psnr_db"] - paired["psnr_db_base"]
    paired["ssim_gain"] = paired["ssim"] - paired["ssim_base"]
    # identical inf/inf pairs are no gain
    same = paired["psnr_db"] == paired["psnr_db_base"]
    paired.loc[same, "psnr_gain_db"] = 0.0

    gains = (
        paired.groupby(["mode", "K"], sort=True)[["psnr_gain_db", "ssim_gain"]]
        .mean()
        .reset_index()
    )
    return gains


def annotate_reference(gains: pd.DataFrame) -> pd.DataFrame:
    """Add the 720p reference gains and the deviation from them, where K matches."""
    annotated = gains.merge(REFERENCE_GAINS, on=["mode", "K"], how="left")
    annotated["psnr_deviation_db"] = annotated["psnr_gain_db"] - annotated["reference_psnr_gain_db"]
    annotated["ssim_deviation"] = annotated["ssim_gain"] - annotated["reference_ssim_gain"]
    return annotated


def write_frame_csv(reports: Sequence[MetricReport], path: Union[str, Path]) -> None:
    """CSV with header sequence,frame,mode,K,psnr_db,ssim; inf PSNR written as `inf`."""
    frame_table(reports).to_csv(path, index=False, float_format="%.6f")


def write_gain_csv(gains: pd.DataFrame, mode: str, path: Union[str, Path]) -> None:
    """CSV with header K,psnr_gain_db,ssim_gain for one mode."""
    rows = gains[gains["mode"] == mode][GAIN_COLUMNS]
    rows.to_csv(path, index=False, float_format="%.8f")
