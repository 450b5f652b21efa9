"""
Command Line Interface for the NRS video reconstruction toolkit.

Subcommands: mask, synth, run, eval, sweep. Diagnostics and progress go to
stderr; results are written to files.
"""

import math
from pathlib import Path
from typing import Optional

import typer
from dotenv import load_dotenv
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from .config import (
    ExperimentSpec,
    MfWindow,
    PipelineConfig,
    PipelineMode,
    load_params,
    parse_support_range,
    resolve_threads,
)
from .experiment import ExperimentRunner
from .logging_config import log_command, logger
from .metrics import evaluate, write_frame_csv
from .models import NrsError, VideoBuffer, WeightScheme
from .pipeline import run_pipeline, sample_video
from .sampling import generate_quadrant_mask, load_mask, mask_density, save_mask, save_mask_pbm
from .video_io import make_texture, read_image, read_video, synthesize_sequence, write_video

load_dotenv()

app = typer.Typer(
    name="nrs",
    help="🎞️ Non-regular sampling video reconstruction: FSR-SF, FSR-MF and FSR-RMF",
    add_completion=False,
    rich_markup_mode="rich",
)

console = Console(stderr=True)

# ValidationError and the header parsers' failures are ValueErrors
EXPECTED_ERRORS = (NrsError, ValidationError, ValueError, OSError)
SSIM_WINDOWS = ("gaussian", "uniform")


def _fail(action: str, error: Exception) -> None:
    logger.log_error(error, action)
    console.print(f"❌ Error {action}: {escape(str(error))}")
    raise typer.Exit(1)


@app.command()
@log_command
def mask(
    width: int = typer.Option(..., "--width", "-w", help="Frame width in pixels (even)"),
    height: int = typer.Option(..., "--height", "-h", help="Frame height in pixels (even)"),
    seed: int = typer.Option(0, "--seed", "-s", help="Mask seed"),
    out: Path = typer.Option(..., "--out", "-o", help="Output .nrsm file"),
    pbm: Optional[Path] = typer.Option(None, "--pbm", help="Also write an ASCII PBM copy"),
):
    """Generate the fixed quadrant sampling mask."""
    try:
        generated = generate_quadrant_mask(width, height, seed)
        save_mask(generated, out)
        if pbm:
            save_mask_pbm(generated, pbm)
        logger.log_file_operation("Wrote mask", str(out), {"seed": seed})
        console.print(
            f"✅ Mask {width}x{height} (seed {seed}, density {mask_density(generated):.2%}) saved to {out}"
        )
    except EXPECTED_ERRORS as e:
        _fail("generating mask", e)


@app.command()
@log_command
def synth(
    kind: str = typer.Option("translate", "--kind", "-k", help="translate, zoom or rotate"),
    frames: int = typer.Option(20, "--frames", "-n", help="Number of frames"),
    rate: float = typer.Option(2.0, "--rate", "-r", help="px/frame, scale/frame or degrees/frame"),
    width: int = typer.Option(128, "--width", "-w", help="Output frame width"),
    height: int = typer.Option(128, "--height", "-h", help="Output frame height"),
    seed: int = typer.Option(0, "--seed", "-s", help="Texture seed"),
    base: Optional[Path] = typer.Option(None, "--base", help="Base PGM image instead of a texture"),
    out: Path = typer.Option(..., "--out", "-o", help="Output .y4m file"),
):
    """Write a synthetic translate/zoom/rotate test sequence."""
    try:
        if base:
            base_frame = read_image(base).frames[0]
        elif kind == "translate":
            base_frame = make_texture(width, height + int(rate) * (frames - 1), seed)
        elif kind == "rotate":
            side = 2 * math.ceil(max(width, height) * math.sqrt(2) / 2) + 2
            base_frame = make_texture(side, side, seed)
        else:
            base_frame = make_texture(width, height, seed)

        buffer = synthesize_sequence(kind, base_frame, frames, rate, shape=(height, width))
        write_video(buffer, out)
        console.print(f"✅ {frames} {kind} frames of {width}x{height} saved to {out}")
    except EXPECTED_ERRORS as e:
        _fail("synthesizing sequence", e)


def _progress() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        console=console,
    )


@app.command()
@log_command
def run(
    mode: PipelineMode = typer.Option(PipelineMode.RMF, "--mode", "-m", help="sf, mf or rmf"),
    support: int = typer.Option(5, "--support", "-K", help="Support frames K"),
    input_path: Path = typer.Option(..., "--in", "-i", help="Original video (.y4m/.pgm)"),
    out: Path = typer.Option(..., "--out", "-o", help="Reconstructed video"),
    mask_path: Optional[Path] = typer.Option(None, "--mask", help="Mask file (.nrsm)"),
    seed: int = typer.Option(0, "--seed", "-s", help="Mask seed when no mask file is given"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Parameter file"),
    report: Optional[Path] = typer.Option(None, "--report", help="Per-frame metrics CSV"),
    schedule: WeightScheme = typer.Option(WeightScheme.EQUAL, "--schedule", help="equal or linear"),
    eq2_literal: bool = typer.Option(False, "--eq2-literal", help="Normalize by the full weight sum"),
    mf_window: MfWindow = typer.Option(MfWindow.SYMMETRIC, "--mf-window", help="symmetric or total"),
    margin: int = typer.Option(4, "--margin", help="Border excluded from metrics"),
    ssim_window: str = typer.Option("gaussian", "--ssim-window", help="gaussian or uniform"),
    threads: Optional[int] = typer.Option(None, "--threads", "-t", envvar="NRS_THREADS", help="Worker threads"),
    block_size: Optional[int] = typer.Option(None, "--block-size"),
    border_width: Optional[int] = typer.Option(None, "--border-width"),
    fft_size: Optional[int] = typer.Option(None, "--fft-size"),
    iterations: Optional[int] = typer.Option(None, "--iterations"),
    rho: Optional[float] = typer.Option(None, "--rho"),
    gamma: Optional[float] = typer.Option(None, "--gamma"),
    delta: Optional[float] = typer.Option(None, "--delta"),
    search_range: Optional[int] = typer.Option(None, "--search-range"),
    me_window: Optional[int] = typer.Option(None, "--me-window"),
    min_overlap: Optional[int] = typer.Option(None, "--min-overlap"),
):
    """Sample a video with the mask and reconstruct it."""
    try:
        if ssim_window not in SSIM_WINDOWS:
            raise NrsError(f"Unknown SSIM window: {ssim_window}")
        fsr, me = load_params(
            config,
            {
                "block_size": block_size, "border_width": border_width, "fft_size": fft_size,
                "iterations": iterations, "rho": rho, "gamma": gamma, "delta": delta,
                "search_range": search_range, "me_window": me_window, "min_overlap": min_overlap,
            },
        )
        pipeline_config = PipelineConfig(
            mode=mode, support=support, fsr=fsr, me=me, schedule=schedule,
            eq2_literal=eq2_literal, mf_window=mf_window, threads=resolve_threads(threads),
        )
        original = read_video(input_path)
        height, width = original.shape
        sampling_mask = load_mask(mask_path) if mask_path else generate_quadrant_mask(width, height, seed)
        sampled = sample_video(original, sampling_mask)

        with _progress() as progress:
            task = progress.add_task(f"Reconstructing ({pipeline_config.label})...", total=len(sampled))
            frames = run_pipeline(sampled, pipeline_config, lambda _: progress.advance(task))

        metrics = None
        if report:
            metrics = evaluate(
                original.frames, frames, original.name, pipeline_config.mode.value,
                pipeline_config.support, margin, ssim_window,
            )

        write_video(VideoBuffer(frames=frames, name=original.name, fps=original.fps), out)
        if report and metrics is not None:
            write_frame_csv([metrics], report)
            console.print(f"📊 Mean PSNR {metrics.mean_psnr:.2f} dB, mean SSIM {metrics.mean_ssim:.4f}")
        console.print(f"✅ Reconstruction saved to {out}")
    except EXPECTED_ERRORS as e:
        _fail("running reconstruction", e)


@app.command(name="eval")
@log_command
def eval_command(
    original: Path = typer.Option(..., "--original", help="Pristine original video"),
    recon: Path = typer.Option(..., "--recon", help="Reconstructed video"),
    out: Path = typer.Option(..., "--out", "-o", help="Per-frame metrics CSV"),
    mode: str = typer.Option("unknown", "--mode", "-m", help="Label written to the CSV"),
    support: int = typer.Option(0, "--support", "-K", help="K written to the CSV"),
    margin: int = typer.Option(4, "--margin", help="Border excluded from metrics"),
    ssim_window: str = typer.Option("gaussian", "--ssim-window", help="gaussian or uniform"),
):
    """Compare a reconstruction against its original and write the CSV report."""
    try:
        reference = read_video(original)
        test = read_video(recon)
        metrics = evaluate(reference.frames, test.frames, reference.name, mode, support, margin, ssim_window)
        write_frame_csv([metrics], out)

        table = Table(title=f"📊 {reference.name}")
        table.add_column("Frames", style="cyan")
        table.add_column("Mean PSNR [dB]", style="green")
        table.add_column("Mean SSIM", style="yellow")
        table.add_row(str(len(metrics.psnr)), f"{metrics.mean_psnr:.3f}", f"{metrics.mean_ssim:.5f}")
        console.print(table)
    except EXPECTED_ERRORS as e:
        _fail("evaluating reconstruction", e)


@app.command()
@log_command
def sweep(
    inputs: list[Path] = typer.Option(..., "--in", "-i", help="Original videos (repeatable)"),
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
    modes: str = typer.Option("sf,mf,rmf", "--modes", help="Comma separated modes"),
    support: str = typer.Option("1..5", "--support", "-K", help="K range, e.g. 1..5 or 1,3"),
    max_support: int = typer.Option(5, "--max-support", help="Largest K allowed"),
    seed: int = typer.Option(0, "--seed", "-s", help="Mask seed shared by all runs"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Parameter file"),
    schedule: WeightScheme = typer.Option(WeightScheme.EQUAL, "--schedule", help="equal or linear"),
    eq2_literal: bool = typer.Option(False, "--eq2-literal", help="Normalize by the full weight sum"),
    mf_window: MfWindow = typer.Option(MfWindow.SYMMETRIC, "--mf-window", help="symmetric or total"),
    margin: int = typer.Option(4, "--margin", help="Border excluded from metrics"),
    ssim_window: str = typer.Option("gaussian", "--ssim-window", help="gaussian or uniform"),
    threads: Optional[int] = typer.Option(None, "--threads", "-t", envvar="NRS_THREADS", help="Worker threads"),
    iterations: Optional[int] = typer.Option(None, "--iterations"),
    search_range: Optional[int] = typer.Option(None, "--search-range"),
    me_window: Optional[int] = typer.Option(None, "--me-window"),
):
    """Run SF once and MF/RMF for every K; write per-mode gain tables."""
    try:
        fsr, me = load_params(
            config, {"iterations": iterations, "search_range": search_range, "me_window": me_window}
        )
        spec = ExperimentSpec(
            inputs=inputs,
            output_dir=out,
            mask_seed=seed,
            modes=[PipelineMode(m.strip()) for m in modes.split(",") if m.strip()],
            supports=parse_support_range(support),
            max_support=max_support,
            schedule=schedule,
            fsr=fsr,
            me=me,
            eq2_literal=eq2_literal,
            mf_window=mf_window,
            margin=margin,
            ssim_window=ssim_window,
            threads=resolve_threads(threads),
        )
        for path in spec.inputs:
            if not path.exists():
                raise FileNotFoundError(f"Input not found: {path}")

        runner = ExperimentRunner(spec)
        with _progress() as progress:
            task = progress.add_task("Sweeping...", total=len(runner.run_plan()) * len(spec.inputs))
            runner.on_run = lambda label, _: progress.update(
                task, advance=1, description=f"Finished {label}"
            )
            result = runner.run()

        console.print(f"✅ {len(result.runs())} runs written to {out}")
    except EXPECTED_ERRORS as e:
        _fail("running sweep", e)


if __name__ == "__main__":
    app()
