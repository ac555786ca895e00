"""Independent reference implementations used to check engine output.

These deliberately share no code with the package: the hex parser walks the
dump text, the slicer reads files directly.
"""

import re

ROW_RE = re.compile(
    r"^(?P<offset>[0-9a-f]{8})  (?P<hex>[0-9a-f ]{48})  \|(?P<gutter>[\x20-\x7e]{1,16})\|$"
)


def parse_hex_dump(text: str) -> bytes:
    """Recover the original bytes from a canonical hex dump."""
    out = bytearray()
    for line in text.splitlines():
        m = ROW_RE.match(line)
        assert m, f"row does not match canonical layout: {line!r}"
        for pair in m.group("hex").split():
            out.append(int(pair, 16))
    return bytes(out)


def read_slice(path, offset: int, length: int) -> bytes:
    with open(path, "rb") as fh:
        fh.seek(offset)
        return fh.read(length)
