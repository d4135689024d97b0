"""Atomic CSV emission with a units comment line."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd

UNITS_COMMENT = "# units: information columns in bits (internal nats converted by log2(e))"


def build_frame(rows: List[Dict[str, Any]], columns: Sequence[str]) -> pd.DataFrame:
    missing = [column for rowdict in rows for column in columns if column not in rowdict]
    if missing:
        raise KeyError(f"rows missing columns: {sorted(set(missing))}")
    return pd.DataFrame.from_records(rows, columns=list(columns))


def render_csv(frame: pd.DataFrame, significant_digits: int = 12) -> str:
    body = frame.to_csv(index=False, float_format=f"%.{significant_digits}g", lineterminator="\n")
    return f"{UNITS_COMMENT}\n{body}"


def write_csv_atomic(
    path: Path, frame: pd.DataFrame, significant_digits: int = 12
) -> Path:
    """Write ``frame`` to ``path`` through a sibling temp file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = render_csv(frame, significant_digits)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


__all__ = ["UNITS_COMMENT", "build_frame", "render_csv", "write_csv_atomic"]
