"""Pure, read-only rendering of evidence byte ranges as hex, ASCII or text.

Nothing here touches the store or the custody journal; callers that want a
`viewed` event recorded do so at the service boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import MissingEvidenceError, ValidationError

RENDER_WINDOW_CAP = 1024 * 1024  # bytes per request; page with offset/length

FORMATS = ("hex", "ascii", "unicode")

# exposed label -> python codec
UNICODE_ENCODINGS = {
    "utf-8": "utf-8",
    "utf-16le": "utf-16-le",
    "utf-16be": "utf-16-be",
}

BYTES_PER_ROW = 16
_HEX_FIELD_WIDTH = 48  # two groups of 8 pairs + double-space separator


@dataclass
class RenderRequest:
    format: str
    offset: int
    length: int
    encoding: str | None = None

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValidationError(f"unknown render format {self.format!r}; use one of {FORMATS}")
        if self.offset < 0 or self.length < 0:
            raise ValidationError("offset and length must be non-negative")
        if self.length > RENDER_WINDOW_CAP:
            raise ValidationError(f"render window capped at {RENDER_WINDOW_CAP} bytes, got {self.length}")
        if self.format == "unicode":
            if self.encoding is None:
                raise ValidationError("unicode rendering requires an encoding")
            if self.encoding not in UNICODE_ENCODINGS:
                raise ValidationError(
                    f"unsupported encoding {self.encoding!r}; supported: {sorted(UNICODE_ENCODINGS)}"
                )
        elif self.encoding is not None:
            raise ValidationError("encoding only applies to unicode rendering")


def slice_evidence(data_root, evidence, offset: int, length: int) -> bytes:
    """Exactly the requested window of the managed file; file unchanged."""
    if offset < 0 or length < 0:
        raise ValidationError("offset and length must be non-negative")
    if offset + length > evidence.size_bytes:
        raise ValidationError(
            f"window {offset}+{length} out of range for evidence of {evidence.size_bytes} bytes"
        )
    path = Path(data_root) / evidence.managed_path
    if not path.is_file():
        raise MissingEvidenceError(f"managed file missing for evidence {evidence.id}: {path}")
    with open(path, "rb") as fh:
        fh.seek(offset)
        return fh.read(length)


def render_hex(data: bytes, base_offset: int = 0) -> str:
    """Canonical hex dump, 16 bytes per row.

    Row: 8-hex-digit offset, two spaces, byte pairs in two groups of eight
    separated by a double space, two spaces, |-delimited ASCII gutter.
    Short final rows pad the hex field with spaces so gutters align.
    """
    lines = []
    for row_start in range(0, len(data), BYTES_PER_ROW):
        row = data[row_start:row_start + BYTES_PER_ROW]
        pairs = [f"{b:02x}" for b in row]
        left = " ".join(pairs[:8])
        right = " ".join(pairs[8:])
        hex_field = left + "  " + right if right else left
        gutter = "".join(chr(b) if 0x20 <= b <= 0x7E else "." for b in row)
        lines.append(f"{base_offset + row_start:08x}  {hex_field.ljust(_HEX_FIELD_WIDTH)}  |{gutter}|\n")
    return "".join(lines)


def render_ascii(data: bytes) -> str:
    """Printable 0x20..0x7E plus newline/tab pass through, everything else
    becomes '.'. Output length in characters equals input length in bytes."""
    return "".join(
        chr(b) if 0x20 <= b <= 0x7E or b in (0x09, 0x0A) else "." for b in data
    )


def render_unicode(data: bytes, encoding: str) -> str:
    """Decode with U+FFFD replacement; never errors on content."""
    codec = UNICODE_ENCODINGS.get(encoding)
    if codec is None:
        raise ValidationError(
            f"unsupported encoding {encoding!r}; supported: {sorted(UNICODE_ENCODINGS)}"
        )
    return data.decode(codec, errors="replace")


def render(data_root, evidence, request: RenderRequest) -> str:
    """Slice evidence and render per the request; dispatcher used by the
    service and CLI."""
    data = slice_evidence(data_root, evidence, request.offset, request.length)
    if request.format == "hex":
        return render_hex(data, base_offset=request.offset)
    if request.format == "ascii":
        return render_ascii(data)
    return render_unicode(data, request.encoding)
