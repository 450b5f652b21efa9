"""
Gain-sweep experiment driver.

Runs FSR-SF once per input and FSR-MF / FSR-RMF for every K of the
support range against the same fixed mask, evaluates all runs and writes
the result tree: frames.csv, runs.csv, gains.csv, gains_<mode>.csv,
gains.dat (gnuplot columns `K mf rmf`, plus one pair per input when
there are several), report.md and the mask used.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import pandas as pd

from .config import ExperimentSpec, PipelineMode
from .logging_config import logger as app_logger
from .metrics import evaluate, frame_table, gain_table, write_frame_csv, write_gain_csv
from .models import DimensionError, Frame, MetricReport, VideoBuffer
from .pipeline import ReconstructionPipeline, run_pipeline, sample_video
from .report_generator import SweepReportGenerator
from .sampling import generate_quadrant_mask, save_mask
from .video_io import read_video

logger = logging.getLogger(__name__)

RunCallback = Callable[[str, int], None]


@dataclass
class SweepResult:
    """Reports of every run of a sweep."""

    reports: list[MetricReport] = field(default_factory=list)
    sequences: list[str] = field(default_factory=list)

    def runs(self) -> pd.DataFrame:
        """One row per run: mode, K, mean PSNR and SSIM over all frames."""
        frames = frame_table(self.reports)
        runs = frames.groupby(["mode", "K"], sort=False)[["psnr_db", "ssim"]].mean().reset_index()
        return runs.rename(columns={"psnr_db": "mean_psnr_db", "ssim": "mean_ssim"})

    def gains(self) -> pd.DataFrame:
        return gain_table(self.reports, baseline=PipelineMode.SF.value)


class ExperimentRunner:
    """Runs a gain sweep described by an ExperimentSpec."""

    def __init__(self, spec: ExperimentSpec, on_run: Optional[RunCallback] = None):
        self.spec = spec
        self.on_run = on_run

    def run_plan(self) -> list[tuple[PipelineMode, int]]:
        """(mode, K) of every run: SF once, then each multi-frame mode per K."""
        plan = [(PipelineMode.SF, 0)]
        for support in self.spec.supports:
            plan.extend((mode, support) for mode in self.spec.modes if mode is not PipelineMode.SF)
        return plan

    def run_sequence(self, buffer: VideoBuffer, result: SweepResult) -> None:
        """All runs of the plan on one input.

        MF and RMF run every K of the plan in one pass per mode; the reports
        still follow the plan order.
        """
        height, width = buffer.shape
        if width % 2 or height % 2:
            raise DimensionError(f"{buffer.name}: frame size {width}x{height} must be even")
        mask = generate_quadrant_mask(width, height, self.spec.mask_seed)
        sampled = sample_video(buffer, mask)
        supports = list(self.spec.supports)

        started = time.perf_counter()
        single_frame = run_pipeline(sampled, self.spec.pipeline(PipelineMode.SF))
        outputs: dict[tuple[PipelineMode, int], list[Frame]] = {(PipelineMode.SF, 0): single_frame}
        app_logger.log_performance(f"{buffer.name} sf", time.perf_counter() - started)

        for mode in self.spec.modes:
            if mode is PipelineMode.SF:
                continue
            started = time.perf_counter()
            pipeline = ReconstructionPipeline(self.spec.pipeline(mode, max(supports)))
            if mode is PipelineMode.MF:
                frames_by_support = pipeline.reconstruct_mf_sweep(sampled, supports, single_frame)
            else:
                frames_by_support = pipeline.reconstruct_rmf_sweep(sampled, supports)
            outputs.update(((mode, k), frames) for k, frames in frames_by_support.items())
            app_logger.log_performance(
                f"{buffer.name} {mode.value}", time.perf_counter() - started, {"K": supports}
            )

        for mode, support in self.run_plan():
            config = self.spec.pipeline(mode, support)
            frames = outputs[(mode, support)]
            report = evaluate(
                buffer.frames,
                frames,
                sequence=buffer.name,
                mode=mode.value,
                support=support,
                margin=self.spec.margin,
                ssim_window=self.spec.ssim_window,
            )
            result.reports.append(report)
            logger.info(
                f"{buffer.name} {config.label}: mean PSNR {report.mean_psnr:.2f} dB, "
                f"mean SSIM {report.mean_ssim:.4f}"
            )
            if self.on_run:
                self.on_run(config.label, len(frames))

    def run(self) -> SweepResult:
        """Run the sweep on every input, then write all outputs."""
        buffers = [read_video(path) for path in self.spec.inputs]
        result = SweepResult(sequences=[b.name for b in buffers])
        for buffer in buffers:
            self.run_sequence(buffer, result)
        self.write_outputs(result, buffers)
        return result

    def write_outputs(self, result: SweepResult, buffers: list[VideoBuffer]) -> None:
        """Write the full result tree into the output directory."""
        out = self.spec.output_dir
        out.mkdir(parents=True, exist_ok=True)

        height, width = buffers[0].shape
        save_mask(generate_quadrant_mask(width, height, self.spec.mask_seed), out / "mask.nrsm")

        runs = result.runs()
        gains = result.gains()
        write_frame_csv(result.reports, out / "frames.csv")
        runs.to_csv(out / "runs.csv", index=False, float_format="%.6f")
        gains.to_csv(out / "gains.csv", index=False, float_format="%.8f")
        for mode in self.spec.modes:
            if mode is not PipelineMode.SF:
                write_gain_csv(gains, mode.value, out / f"gains_{mode.value}.csv")
        per_sequence = None
        if len(result.sequences) > 1:
            per_sequence = {
                name: gain_table([r for r in result.reports if r.sequence == name], PipelineMode.SF.value)
                for name in result.sequences
            }
        write_gnuplot_data(gains, out / "gains.dat", per_sequence)

        SweepReportGenerator(out).generate(
            runs, gains, result.sequences, sum(len(b) for b in buffers)
        )
        app_logger.log_file_operation("Wrote sweep results", str(out), {"runs": len(runs)})


def _gain_columns(gains: pd.DataFrame) -> pd.DataFrame:
    table = gains.pivot(index="K", columns="mode", values="psnr_gain_db")
    return table.reindex(columns=["mf", "rmf"]).drop(index=0, errors="ignore")


def write_gnuplot_data(
    gains: pd.DataFrame, path: Path, per_sequence: Optional[dict[str, pd.DataFrame]] = None
) -> None:
    """Whitespace columns `K mf rmf` of the mean PSNR gain; missing runs as NaN.

    `per_sequence` adds an mf/rmf column pair for every named gain table.
    """
    mean = _gain_columns(gains)
    columns = {"mf_psnr_gain_db": mean["mf"], "rmf_psnr_gain_db": mean["rmf"]}
    for name, sequence_gains in (per_sequence or {}).items():
        own = _gain_columns(sequence_gains)
        label = "_".join(name.split())
        columns[f"{label}_mf"] = own["mf"]
        columns[f"{label}_rmf"] = own["rmf"]
    table = pd.DataFrame(columns)

    lines = ["# K " + " ".join(table.columns)]
    for support, row in table.iterrows():
        lines.append(" ".join([str(support)] + [f"{value:.6f}" for value in row]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
