"""Application-level operational log.

Classic `[ time stamp ]: message` lines, appended to a session log file and
optionally teed to the console. Components log through the sink explicitly;
no stream hijacking.
"""

from __future__ import annotations

import sys
import threading
from pathlib import Path

from .errors import StorageError
from .util import iso_utc_ms, utc_now_ms

DEFAULT_LOG_NAME = "ftklipse.application.log"


class LogSink:
    """Append-only log file; lines are newline-terminated and atomic per call."""

    def __init__(self, path, echo_console: bool = False):
        self.path = Path(path)
        self.echo_console = echo_console
        self._lock = threading.Lock()
        self._last_ms = 0
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"cannot open log file {self.path}: {exc}") from exc

    def log(self, message: str) -> None:
        # one logical line per call; embedded newlines become literal escapes
        sanitized = message.replace("\r\n", "\\n").replace("\n", "\\n").replace("\r", "\\n")
        with self._lock:
            ts = max(utc_now_ms(), self._last_ms)
            self._last_ms = ts
            line = f"[ {iso_utc_ms(ts)} ]: {sanitized}"
            try:
                self._fh.write(line + "\n")
                self._fh.flush()
            except OSError as exc:
                raise StorageError(f"log write failed for {self.path}: {exc}") from exc
            if self.echo_console:
                sys.stdout.write(line + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_log(path, echo_console: bool = False) -> LogSink:
    """Create (if absent) and open a log file for append."""
    return LogSink(path, echo_console=echo_console)
