"""
Markdown report generator for gain sweeps.
"""

import logging
from pathlib import Path
from typing import Union

import pandas as pd
from tabulate import tabulate

from .metrics import annotate_reference

logger = logging.getLogger(__name__)


class SweepReportGenerator:
    """Generate markdown summaries of a gain sweep."""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)

    def generate(self, runs: pd.DataFrame, gains: pd.DataFrame, sequences: list[str], frames: int) -> Path:
        """Write report.md next to the CSV outputs and return its path."""
        report_path = self.output_dir / "report.md"
        report_path.write_text(self.build_report(runs, gains, sequences, frames), encoding="utf-8")
        logger.info(f"Sweep report saved to {report_path}")
        return report_path

    def build_report(self, runs: pd.DataFrame, gains: pd.DataFrame, sequences: list[str], frames: int) -> str:
        """Build the report content."""
        annotated = annotate_reference(gains[gains["mode"] != "sf"])
        runs_table = tabulate(
            runs.to_records(index=False).tolist(),
            headers=list(runs.columns),
            tablefmt="github",
            floatfmt=".4f",
        )
        gains_table = tabulate(
            annotated[
                ["mode", "K", "psnr_gain_db", "reference_psnr_gain_db", "psnr_deviation_db",
                 "ssim_gain", "reference_ssim_gain"]
            ].to_records(index=False).tolist(),
            headers=["mode", "K", "PSNR gain [dB]", "720p ref [dB]", "deviation [dB]",
                     "SSIM gain", "720p ref"],
            tablefmt="github",
            floatfmt=".4f",
            missingval="-",
        )

        return f"""# Reconstruction Gain Sweep

## 🎞️ Input

- **Sequences**: {', '.join(sequences)}
- **Frames evaluated per run**: {frames}

## 📊 Runs

{runs_table}

## 📈 Gains over FSR-SF

{gains_table}

Reference columns hold the average gains measured on the 720p reference
sequences with their own sampling mask. At other scales and on other content
the deviation is informational only.
"""
