"""
NRS Video Reconstruction Toolkit

Reconstructs video captured by a non-regular (quadrant) sampling sensor with
single-frame, multi-frame and recursive multi-frame frequency selective
reconstruction, and measures the gains in PSNR and SSIM.
"""

__version__ = "1.0.0"
__author__ = "NRS Video Team"

from .fsr import generate_block_model, reconstruct_frame
from .merge import make_schedule, merge_frames, merge_nearest
from .metrics import psnr, ssim
from .models import FsrParams, Mask, MeParams, SampledFrame, VideoBuffer
from .motion import compensate, estimate_dense_motion
from .pipeline import reconstruct_mf, reconstruct_rmf, reconstruct_sf, run_pipeline
from .sampling import apply_mask, generate_quadrant_mask
from .video_io import read_video, write_video

__all__ = [
    "FsrParams",
    "Mask",
    "MeParams",
    "SampledFrame",
    "VideoBuffer",
    "apply_mask",
    "compensate",
    "estimate_dense_motion",
    "generate_block_model",
    "generate_quadrant_mask",
    "make_schedule",
    "merge_frames",
    "merge_nearest",
    "psnr",
    "read_video",
    "reconstruct_frame",
    "reconstruct_mf",
    "reconstruct_rmf",
    "reconstruct_sf",
    "run_pipeline",
    "ssim",
    "write_video",
]
