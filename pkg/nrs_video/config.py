"""
Configuration surfaces: parameter files, pipeline and experiment settings.

Parameter files are flat key-value text::

    # FSR
    block_size = 4
    border_width = 14
    fft_size = 32
    iterations = 100
    rho = 0.7
    gamma = 0.5
    delta = 0.5
    # motion estimation
    me_window = 17
    search_range = 16
    min_overlap = 16

`key value` and `key: value` are accepted as well. Missing keys keep their
defaults; unknown keys are an error.
"""

import os
from dataclasses import asdict, replace
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .models import FormatError, FsrParams, MeParams, ParameterError, WeightScheme

FSR_KEYS = {
    "block_size": int,
    "border_width": int,
    "fft_size": int,
    "iterations": int,
    "rho": float,
    "gamma": float,
    "delta": float,
}
ME_KEYS = {"me_window": ("window", int), "search_range": ("search_range", int), "min_overlap": ("min_overlap", int)}

DEFAULT_MAX_SUPPORT = 5


class PipelineMode(str, Enum):
    """Reconstruction pipeline."""

    SF = "sf"
    MF = "mf"
    RMF = "rmf"


class MfWindow(str, Enum):
    """How FSR-MF counts its K support frames."""

    SYMMETRIC = "symmetric"  # K preceding and K succeeding
    TOTAL = "total"  # K in total, alternating t-1, t+1, t-2, ...


class PipelineConfig(BaseModel):
    """Settings of one reconstruction run."""

    model_config = ConfigDict(frozen=True)

    mode: PipelineMode = PipelineMode.SF
    support: int = Field(0, ge=0)
    fsr: FsrParams = Field(default_factory=FsrParams)
    me: MeParams = Field(default_factory=MeParams)
    schedule: WeightScheme = WeightScheme.EQUAL
    eq2_literal: bool = False
    mf_window: MfWindow = MfWindow.SYMMETRIC
    threads: int = Field(1, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _degenerate_to_single_frame(cls, data: Any) -> Any:
        """Multi-frame modes without support frames are single-frame runs."""
        if not isinstance(data, dict) or data.get("mode") is None:
            return data
        if PipelineMode(data["mode"]) is not PipelineMode.SF and not data.get("support"):
            data = {**data, "mode": PipelineMode.SF, "support": 0}
        return data

    @property
    def label(self) -> str:
        return self.mode.value if self.mode is PipelineMode.SF else f"{self.mode.value}-K{self.support}"


class ExperimentSpec(BaseModel):
    """A gain sweep: SF once, MF and RMF for every K of the range."""

    inputs: list[Path]
    output_dir: Path
    mask_seed: int = 0
    modes: list[PipelineMode] = Field(
        default_factory=lambda: [PipelineMode.SF, PipelineMode.MF, PipelineMode.RMF]
    )
    supports: list[int] = Field(default_factory=lambda: list(range(1, DEFAULT_MAX_SUPPORT + 1)))
    max_support: int = Field(DEFAULT_MAX_SUPPORT, ge=1)
    schedule: WeightScheme = WeightScheme.EQUAL
    fsr: FsrParams = Field(default_factory=FsrParams)
    me: MeParams = Field(default_factory=MeParams)
    eq2_literal: bool = False
    mf_window: MfWindow = MfWindow.SYMMETRIC
    margin: int = Field(4, ge=0)
    ssim_window: Literal["gaussian", "uniform"] = "gaussian"
    threads: int = Field(1, ge=1)

    @field_validator("inputs")
    @classmethod
    def _has_inputs(cls, inputs: list[Path]) -> list[Path]:
        if not inputs:
            raise ValueError("An experiment needs at least one input video")
        return inputs

    @model_validator(mode="after")
    def _supports_in_range(self) -> "ExperimentSpec":
        if not self.supports:
            raise ValueError("Support range is empty")
        bad = [k for k in self.supports if not 1 <= k <= self.max_support]
        if bad:
            raise ValueError(f"Support frame counts {bad} outside 1..{self.max_support}")
        return self

    def pipeline(self, mode: PipelineMode, support: int = 0) -> PipelineConfig:
        """Pipeline settings for one run of the sweep."""
        return PipelineConfig(
            mode=mode,
            support=0 if mode is PipelineMode.SF else support,
            fsr=self.fsr,
            me=self.me,
            schedule=self.schedule,
            eq2_literal=self.eq2_literal,
            mf_window=self.mf_window,
            threads=self.threads,
        )


def parse_support_range(text: str) -> list[int]:
    """'1..5' -> [1, 2, 3, 4, 5]; '1,3' -> [1, 3]; '2' -> [2]."""
    try:
        if ".." in text:
            low, high = (int(part) for part in text.split("..", 1))
            return list(range(low, high + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ParameterError(f"Bad support range: {text!r}") from e


def _split_line(line: str) -> Optional[tuple[str, str]]:
    line = line.split("#", 1)[0].strip()
    if not line:
        return None
    for separator in ("=", ":"):
        if separator in line:
            key, value = line.split(separator, 1)
            return key.strip(), value.strip()
    parts = line.split(None, 1)
    if len(parts) != 2:
        raise FormatError(f"Cannot parse parameter line: {line!r}")
    return parts[0], parts[1].strip()


def read_param_file(path: Union[str, Path]) -> dict[str, Union[int, float]]:
    """Raw typed values of a flat key-value parameter file."""
    values: dict[str, Union[int, float]] = {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        item = _split_line(line)
        if item is None:
            continue
        key, raw = item
        if key in FSR_KEYS:
            cast: Any = FSR_KEYS[key]
        elif key in ME_KEYS:
            cast = ME_KEYS[key][1]
        else:
            raise FormatError(f"{path}:{number}: unknown parameter '{key}'")
        try:
            values[key] = cast(raw)
        except ValueError as e:
            raise FormatError(f"{path}:{number}: bad value for {key}: {raw!r}") from e
    return values


def build_params(
    values: dict[str, Union[int, float]],
    fsr: FsrParams = FsrParams(),
    me: MeParams = MeParams(),
) -> tuple[FsrParams, MeParams]:
    """Apply overrides (param-file or CLI keys) on top of given parameters."""
    fsr_updates = {k: v for k, v in values.items() if k in FSR_KEYS and v is not None}
    me_updates = {ME_KEYS[k][0]: v for k, v in values.items() if k in ME_KEYS and v is not None}
    return replace(fsr, **fsr_updates), replace(me, **me_updates)


def load_params(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> tuple[FsrParams, MeParams]:
    """Defaults, then the parameter file, then explicit overrides."""
    values: dict[str, Any] = read_param_file(path) if path else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_params(values)


def params_to_text(fsr: FsrParams, me: MeParams) -> str:
    """Serialize parameters in the flat key-value format."""
    lines = [f"{key} = {value}" for key, value in asdict(fsr).items()]
    lines += [f"{file_key} = {getattr(me, attr)}" for file_key, (attr, _) in ME_KEYS.items()]
    return "\n".join(lines) + "\n"


def resolve_threads(threads: Optional[int] = None) -> int:
    """Explicit value, else NRS_THREADS (environment or .env), else 1."""
    if threads:
        return max(1, threads)
    load_dotenv()
    raw = os.getenv("NRS_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError as e:
        raise ParameterError(f"NRS_THREADS must be an integer, got {raw!r}") from e
