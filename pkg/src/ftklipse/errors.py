"""Exception hierarchy shared by every layer.

The CLI maps families to exit codes (validation=1, integrity=2, I/O=3) and
the HTTP service maps them to status codes (400/404/409/500), so new
exceptions should subclass one of the four families below.
"""


class FtklipseError(Exception):
    """Base class for all workbench errors."""

    code = "internal"


class ValidationError(FtklipseError):
    """Caller supplied arguments that violate an operation's preconditions."""

    code = "validation"


class NotFoundError(FtklipseError):
    """A referenced case, evidence, note, tool or run does not exist."""

    code = "not_found"


class IntegrityError(FtklipseError):
    """Evidence or stored-record integrity cannot be established."""

    code = "integrity"


class StorageError(FtklipseError):
    """An I/O level failure (unwritable path, failed copy, ...)."""

    code = "storage"


class UsageError(FtklipseError):
    """API misuse, e.g. operating on a closed store handle."""

    code = "usage"


class StoreOpenError(StorageError):
    code = "store_open"


class CorruptRecordError(IntegrityError):
    """A stored record failed its magic/version/length/CRC checks.

    Always names the offending file so the operator can inspect it; no
    silent repair is ever attempted.
    """

    code = "corrupt_record"


class DecodeError(IntegrityError):
    """A case payload has an unknown version or malformed structure."""

    code = "decode"


class MissingEvidenceError(IntegrityError):
    """The managed file backing an evidence record is gone."""

    code = "missing_evidence"


class ManifestError(ValidationError):
    """A tool manifest is malformed; message names the offending field."""

    code = "manifest"


class PlatformError(ValidationError):
    """Tool manifest platform does not match the running host."""

    code = "platform"


class UnsupportedFormatError(ValidationError):
    code = "unsupported_format"


class GenerationError(StorageError):
    """Report generation failed, e.g. an excerpt's file is unreadable."""

    code = "generation"


class ToolchainMissingError(StorageError):
    """External toolchain (LaTeX) is not installed."""

    code = "toolchain_missing"


class ToolExecutionError(FtklipseError):
    """A tool run failed to launch or timed out.

    Carries the partial ToolRunResult (custody event and post-run
    verification were still recorded before this was raised).
    """

    code = "tool_execution"

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ToolLaunchError(ToolExecutionError):
    code = "tool_launch"


class ToolTimeoutError(ToolExecutionError):
    code = "tool_timeout"
