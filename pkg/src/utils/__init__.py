"""Utility exports."""

from .csv_output import build_frame, render_csv, write_csv_atomic
from .logger import configure_logging, get_logger
from .seeding import stream

__all__ = [
    "build_frame",
    "configure_logging",
    "get_logger",
    "render_csv",
    "stream",
    "write_csv_atomic",
]
