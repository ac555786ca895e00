"""Small shared helpers: UTC millisecond clocks and JSON-friendly dumping."""

import dataclasses
import enum
import time
from datetime import datetime, timezone
from pathlib import Path


def utc_now_ms() -> int:
    """Current UTC time as integer milliseconds since the epoch."""
    return time.time_ns() // 1_000_000


def iso_utc_ms(ms: int) -> str:
    """Render epoch milliseconds as ISO-8601 UTC with ms precision.

    Example: 1745000000123 -> '2025-04-18T18:13:20.123Z'
    """
    dt = datetime.fromtimestamp(ms / 1000.0, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ms % 1000:03d}Z"


def compact_utc_ms(ms: int) -> str:
    """Filesystem-safe timestamp, e.g. '20250418T181320123Z'."""
    dt = datetime.fromtimestamp(ms / 1000.0, tz=timezone.utc)
    return dt.strftime("%Y%m%dT%H%M%S") + f"{ms % 1000:03d}Z"


def to_jsonable(obj):
    """Recursively convert dataclasses/enums/paths into plain JSON types."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, bytes):
        return obj.decode("utf-8", "replace")
    return obj
