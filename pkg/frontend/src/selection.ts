// Byte-range selection geometry over the canonical hex dump text.
//
// Row layout: 8-digit offset, 2 spaces, 48-char hex field (pairs at columns
// 10+3k for k<8 and 35+3(k-8) for k>=8), 2 spaces, '|', gutter, '|'.
// Click-drag over either the hex pairs or the gutter selects bytes; the
// mapping here converts character positions in the dump into byte offsets.

import type { ByteRange } from "./types.js";

const GUTTER_START = 61;

/** Bytes in a row, derived from its gutter width. */
function rowByteCount(line: string): number {
  const close = line.lastIndexOf("|");
  return close <= GUTTER_START - 1 ? 0 : close - GUTTER_START;
}

/** Byte index within one row for a column, or null on separators/offset. */
export function columnToByte(line: string, col: number): number | null {
  const bytes = rowByteCount(line);
  if (col >= GUTTER_START && col < GUTTER_START + bytes) {
    return col - GUTTER_START;
  }
  if (col >= 10 && col < 33) {
    const k = Math.floor((col - 10) / 3);
    if ((col - 10) % 3 === 2) return null; // space between pairs
    return k < bytes ? k : null;
  }
  if (col >= 35 && col < 58) {
    const k = 8 + Math.floor((col - 35) / 3);
    if ((col - 35) % 3 === 2) return null;
    return k < bytes ? k : null;
  }
  return null;
}

/** Byte index within the rendered window for a character index into the
 * dump text, or null when the character is not over a byte. */
export function charToByte(dump: string, charIndex: number): number | null {
  if (charIndex < 0 || charIndex >= dump.length) return null;
  const lines = dump.split("\n");
  let consumed = 0;
  for (let row = 0; row < lines.length; row++) {
    const lineLen = lines[row].length + 1; // +1 for the newline
    if (charIndex < consumed + lineLen) {
      const byteInRow = columnToByte(lines[row], charIndex - consumed);
      return byteInRow === null ? null : row * 16 + byteInRow;
    }
    consumed += lineLen;
  }
  return null;
}

/** Inclusive drag selection between two characters of the dump, as a byte
 * range relative to the rendered window. Null unless both ends sit on
 * bytes. */
export function selectionToRange(dump: string, anchorChar: number, focusChar: number): ByteRange | null {
  const a = charToByte(dump, anchorChar);
  const b = charToByte(dump, focusChar);
  if (a === null || b === null) return null;
  const lo = Math.min(a, b);
  const hi = Math.max(a, b);
  return { offset: lo, length: hi - lo + 1 };
}
