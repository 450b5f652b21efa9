"""
Centralized logging configuration for the NRS video reconstruction toolkit.

Provides detailed logging for:
- Command execution
- Per-frame reconstruction progress and timing
- Motion estimation and merging statistics
- File input/output
- Error tracking and debugging
"""

import json
import logging
import os
from datetime import datetime
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Optional, TypeVar

import typer
from dotenv import load_dotenv

F = TypeVar("F", bound=Callable[..., Any])


class NrsLogger:
    """Centralized logging system for the reconstruction toolkit."""

    def __init__(self, log_dir: Optional[str] = None):
        """Initialize the logging system."""
        load_dotenv()
        self.log_dir = Path(log_dir or os.getenv("NRS_LOG_DIR", "logs"))
        self.log_dir.mkdir(parents=True, exist_ok=True)

        # Create loggers for different components
        self.commands_logger = self._setup_logger("commands", "command_execution.log")
        self.fsr_logger = self._setup_logger("fsr", "fsr.log")
        self.motion_logger = self._setup_logger("motion", "motion.log")
        self.pipeline_logger = self._setup_logger("pipeline", "pipeline.log")
        self.io_logger = self._setup_logger("io", "io.log")
        self.debug_logger = self._setup_logger("debug", "debug.log")

        # Main application logger
        self.app_logger = self._setup_logger("app", "nrs_video.log")

    def _setup_logger(self, name: str, filename: str) -> logging.Logger:
        """Setup a logger with file and console handlers."""
        logger = logging.getLogger(f"nrs_video.{name}")
        logger.setLevel(logging.DEBUG)
        logger.propagate = False

        # Clear existing handlers
        logger.handlers.clear()

        file_handler = logging.FileHandler(self.log_dir / filename, mode="a", encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)

        # Console handler writes to stderr; results go to files/stdout only
        console_handler = logging.StreamHandler()
        console_handler.setLevel(logging.INFO)

        formatter = logging.Formatter(
            "%(asctime)s | %(name)s | %(levelname)s | %(message)s", datefmt="%Y-%m-%d %H:%M:%S"
        )
        file_handler.setFormatter(formatter)
        console_handler.setFormatter(formatter)

        logger.addHandler(file_handler)
        logger.addHandler(console_handler)

        return logger

    def log_command_start(self, command: str, args: Optional[dict[str, Any]] = None) -> None:
        """Log the start of a command execution."""
        self.commands_logger.info(f"🚀 Starting command: {command}")
        if args:
            self.commands_logger.debug(
                f"Command arguments: {json.dumps(args, indent=2, default=str)}"
            )

    def log_command_end(
        self, command: str, success: bool = True, duration: Optional[float] = None
    ) -> None:
        """Log the end of a command execution."""
        status = "✅ SUCCESS" if success else "❌ FAILED"
        duration_str = f" (took {duration:.2f}s)" if duration else ""
        self.commands_logger.info(f"🏁 Command completed: {command} - {status}{duration_str}")

    def log_frame(
        self,
        mode: str,
        index: int,
        duration: float,
        psnr_db: Optional[float] = None,
        support: int = 0,
    ) -> None:
        """Log one reconstructed frame."""
        psnr_str = f", PSNR {psnr_db:.2f} dB" if psnr_db is not None else ""
        self.pipeline_logger.info(
            f"🎞️ {mode.upper()} K={support} frame {index} done in {duration:.2f}s{psnr_str}"
        )

    def log_file_operation(self, operation: str, file_path: str, details: Optional[dict] = None) -> None:
        """Log a read or write of a mask, video or report file."""
        self.io_logger.info(f"📁 {operation}: {file_path}")
        if details:
            self.io_logger.debug(f"Details: {json.dumps(details, indent=2, default=str)}")

    def log_error(self, error: Exception, context: Optional[str] = None) -> None:
        """Log errors with context."""
        self.debug_logger.error(f"💥 Error: {error}")
        if context:
            self.debug_logger.error(f"Context: {context}")
        self.debug_logger.debug("Full traceback:", exc_info=error)

    def log_performance(self, operation: str, duration: float, details: Optional[dict] = None) -> None:
        """Log performance metrics."""
        self.debug_logger.info(f"⏱️ Performance: {operation} took {duration:.2f}s")
        if details:
            self.debug_logger.debug(
                f"Performance details: {json.dumps(details, indent=2, default=str)}"
            )


# Global logger instance
logger = NrsLogger()


def get_logger(component: str = "app") -> logging.Logger:
    """Get a logger for a specific component."""
    return getattr(logger, f"{component}_logger", logger.app_logger)


def log_command(func: F) -> F:
    """Decorator to automatically log command execution."""

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        start_time = datetime.now()
        command_name = func.__name__

        logger.log_command_start(command_name, kwargs)

        try:
            result = func(*args, **kwargs)
            duration = (datetime.now() - start_time).total_seconds()
            logger.log_command_end(command_name, success=True, duration=duration)
            return result
        except Exception as e:
            duration = (datetime.now() - start_time).total_seconds()
            logger.log_command_end(command_name, success=False, duration=duration)
            # typer.Exit carries the exit code, not a failure to report
            if not isinstance(e, typer.Exit):
                logger.log_error(e, f"Command: {command_name}")
            raise

    return wrapper  # type: ignore[return-value]
