"""Domain core: cases, evidence import/verification, extraction, duplication,
notes, and the append-only chain-of-custody journal.

Evidence files are immutable after import — operations only ever create new
files — and every mutating operation appends exactly one custody event to
the evidence it touches. Cases serialize to a versioned canonical binary
encoding (fields in declaration order, fixed-width little-endian integers,
u32-length-prefixed UTF-8 text, u32-count-prefixed lists) so byte-level
round-trip and checksum properties are exact.
"""

from __future__ import annotations

import enum
import hashlib
import os
import struct
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .datastore import CaseRecord, StoreHandle
from .errors import (
    DecodeError,
    IntegrityError,
    MissingEvidenceError,
    NotFoundError,
    StorageError,
    ValidationError,
)
from .util import utc_now_ms

HASH_ALGORITHM = "sha256"
HASH_CHUNK = 1024 * 1024
DETAIL_MAX_CHARS = 1024
CASE_FORMAT_VERSION = 1


class Operation(str, enum.Enum):
    IMPORTED = "imported"
    VERIFIED = "verified"
    VIEWED = "viewed"
    EXTRACTED = "extracted"
    DUPLICATED = "duplicated"
    NOTE_ADDED = "note_added"
    TOOL_RUN = "tool_run"
    EXPORTED_TO_REPORT = "exported_to_report"


_OP_CODES = {op: i + 1 for i, op in enumerate(Operation)}
_OPS_BY_CODE = {i: op for op, i in _OP_CODES.items()}


@dataclass
class CustodyEvent:
    seq: int
    principal: str
    timestamp: int
    operation: Operation
    detail: str


@dataclass
class Region:
    offset: int
    length: int


@dataclass
class Note:
    id: int
    author: str
    created_at: int
    text: str
    region: Region | None = None


@dataclass
class Evidence:
    id: int
    case_id: int
    original_name: str
    managed_path: str
    size_bytes: int
    hash_algorithm: str
    reference_hash: str
    imported_at: int
    parent_evidence_id: int | None = None
    notes: list[Note] = field(default_factory=list)
    custody: list[CustodyEvent] = field(default_factory=list)


@dataclass
class FrontMatter:
    executive_summary: str = ""
    introduction: str = ""
    conclusion: str = ""


@dataclass
class Case:
    id: int
    title: str
    created_at: int
    investigator: str
    evidences: list[Evidence] = field(default_factory=list)
    front_matter: FrontMatter = field(default_factory=FrontMatter)


@dataclass
class VerificationResult:
    ok: bool
    expected_hash: str
    actual_hash: str
    checked_at: int


# --- hashing -----------------------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(HASH_CHUNK), b""):
            h.update(chunk)
    return h.hexdigest()


def sanitize_filename(name: str) -> str:
    """Replace path separators and control characters with '_'."""
    cleaned = []
    for ch in name:
        if ch in ("/", "\\") or ord(ch) < 0x20 or ord(ch) == 0x7F:
            cleaned.append("_")
        else:
            cleaned.append(ch)
    out = "".join(cleaned)
    return out if out else "_"


# --- custody -----------------------------------------------------------------

def _append_custody(evidence: Evidence, principal: str, operation: Operation, detail: str) -> CustodyEvent:
    ts = utc_now_ms()
    if evidence.custody:
        ts = max(ts, evidence.custody[-1].timestamp)
    event = CustodyEvent(
        seq=len(evidence.custody) + 1,
        principal=principal,
        timestamp=ts,
        operation=operation,
        detail=detail[:DETAIL_MAX_CHARS],
    )
    evidence.custody.append(event)
    return event


def list_custody(evidence: Evidence) -> list[CustodyEvent]:
    """Events in seq order; a copy, so callers cannot mutate the journal."""
    return list(evidence.custody)


def record_view(store: StoreHandle, case: Case, evidence: Evidence, principal: str, detail: str) -> None:
    """Append a `viewed` event; called by the service/CLI boundary, never by
    the rendering module itself."""
    with store.lock_for(case.id):
        _append_custody(evidence, principal, Operation.VIEWED, detail)
        save_case(store, case)


# --- persistence glue ----------------------------------------------------------

def allocate_id(store: StoreHandle) -> int:
    """Next global id; persisted eagerly so ids never repeat within a store."""
    return store.allocate_id()


def save_case(store: StoreHandle, case: Case) -> None:
    store.put_case_record(CaseRecord(case_id=case.id, payload=serialize_case(case)))


def load_case(store: StoreHandle, case_id: int) -> Case:
    return deserialize_case(store.get_case_record(case_id).payload)


def iter_cases(store: StoreHandle):
    for case_id in store.list_case_ids():
        yield load_case(store, case_id)


def find_evidence(store: StoreHandle, evidence_id: int) -> tuple[Case, Evidence]:
    for case in iter_cases(store):
        for ev in case.evidences:
            if ev.id == evidence_id:
                return case, ev
    raise NotFoundError(f"no evidence with id {evidence_id}")


@contextmanager
def evidence_mutation(store: StoreHandle, evidence_id: int):
    """Per-case exclusive writer for callers that look evidence up by id.

    Locks the owning case, reloads it fresh under the lock (a snapshot read
    before the lock could lose concurrent custody appends), and yields
    (case, evidence)."""
    case_hint, _ = find_evidence(store, evidence_id)
    with store.lock_for(case_hint.id):
        case, evidence = find_evidence(store, evidence_id)
        yield case, evidence


def evidence_path(store: StoreHandle, evidence: Evidence) -> Path:
    return store.root_path / evidence.managed_path


# --- operations ----------------------------------------------------------------

def create_case(store: StoreHandle, title: str, investigator: str) -> Case:
    if not title.strip():
        raise ValidationError("case title must be non-empty")
    case_id = allocate_id(store)
    case = Case(id=case_id, title=title, created_at=utc_now_ms(), investigator=investigator)
    store.case_dir(case_id).mkdir(parents=True, exist_ok=True)
    save_case(store, case)
    return case


def set_front_matter(
    store: StoreHandle,
    case: Case,
    executive_summary: str | None = None,
    introduction: str | None = None,
    conclusion: str | None = None,
) -> Case:
    with store.lock_for(case.id):
        if executive_summary is not None:
            case.front_matter.executive_summary = executive_summary
        if introduction is not None:
            case.front_matter.introduction = introduction
        if conclusion is not None:
            case.front_matter.conclusion = conclusion
        save_case(store, case)
    return case


def _copy_hashed(src: Path, dest: Path) -> tuple[str, int]:
    """Copy src to dest, returning (sha256 of the bytes read, byte count)."""
    h = hashlib.sha256()
    size = 0
    try:
        with open(src, "rb") as rf, open(dest, "wb") as wf:
            for chunk in iter(lambda: rf.read(HASH_CHUNK), b""):
                h.update(chunk)
                size += len(chunk)
                wf.write(chunk)
            wf.flush()
            os.fsync(wf.fileno())
    except OSError as exc:
        dest.unlink(missing_ok=True)
        raise StorageError(f"copy failed: {exc}") from exc
    return h.hexdigest(), size


def import_evidence(
    store: StoreHandle,
    case: Case,
    source,
    principal: str,
    original_name: str | None = None,
    parent_evidence_id: int | None = None,
    source_label: str | None = None,
) -> Evidence:
    """Copy a file into the case directory and register it as evidence.

    The copy's digest is recomputed from disk and compared with the digest
    of the source bytes before anything is committed; on mismatch the copy
    is removed and nothing is recorded.
    """
    src = Path(source)
    if not src.is_file() or not os.access(src, os.R_OK):
        raise StorageError(f"source not readable: {src}")
    with store.lock_for(case.id):
        evidence_id = allocate_id(store)
        name = original_name if original_name is not None else src.name
        managed_rel = f"{case.id}/{evidence_id}_{sanitize_filename(name)}"
        dest = store.root_path / managed_rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        source_digest, size = _copy_hashed(src, dest)
        copy_digest = sha256_file(dest)
        if copy_digest != source_digest:
            dest.unlink(missing_ok=True)
            raise IntegrityError(
                f"import of {src} aborted: copy digest {copy_digest} != source digest {source_digest}"
            )
        evidence = Evidence(
            id=evidence_id,
            case_id=case.id,
            original_name=name,
            managed_path=managed_rel,
            size_bytes=size,
            hash_algorithm=HASH_ALGORITHM,
            reference_hash=copy_digest,
            imported_at=utc_now_ms(),
            parent_evidence_id=parent_evidence_id,
        )
        _append_custody(evidence, principal, Operation.IMPORTED, source_label or str(source))
        case.evidences.append(evidence)
        save_case(store, case)
    return evidence


def verify_evidence(store: StoreHandle, case: Case, evidence: Evidence, principal: str) -> VerificationResult:
    """Recompute the digest of the managed file and journal the outcome.

    Never mutates the file. A missing file is journalled, then raised."""
    path = evidence_path(store, evidence)
    with store.lock_for(case.id):
        if not path.is_file():
            _append_custody(evidence, principal, Operation.VERIFIED, "file missing")
            save_case(store, case)
            raise MissingEvidenceError(f"managed file missing for evidence {evidence.id}: {path}")
        actual = sha256_file(path)
        ok = actual == evidence.reference_hash
        detail = "ok" if ok else f"MISMATCH expected={evidence.reference_hash} actual={actual}"
        _append_custody(evidence, principal, Operation.VERIFIED, detail)
        save_case(store, case)
    return VerificationResult(
        ok=ok, expected_hash=evidence.reference_hash, actual_hash=actual, checked_at=utc_now_ms()
    )


def check_integrity(store: StoreHandle, evidence: Evidence) -> VerificationResult:
    """Digest comparison without a custody event; used for internal gates
    (extraction/duplication preconditions, post-tool-run verification)."""
    path = evidence_path(store, evidence)
    if not path.is_file():
        return VerificationResult(
            ok=False, expected_hash=evidence.reference_hash, actual_hash="", checked_at=utc_now_ms()
        )
    actual = sha256_file(path)
    return VerificationResult(
        ok=actual == evidence.reference_hash,
        expected_hash=evidence.reference_hash,
        actual_hash=actual,
        checked_at=utc_now_ms(),
    )


def _new_child(
    store: StoreHandle,
    case: Case,
    parent: Evidence,
    new_name: str,
    data_iter,
    origin_op: Operation,
    origin_detail: str,
    principal: str,
) -> Evidence:
    child_id = allocate_id(store)
    managed_rel = f"{case.id}/{child_id}_{sanitize_filename(new_name)}"
    dest = store.root_path / managed_rel
    dest.parent.mkdir(parents=True, exist_ok=True)
    h = hashlib.sha256()
    size = 0
    try:
        with open(dest, "wb") as wf:
            for chunk in data_iter:
                h.update(chunk)
                size += len(chunk)
                wf.write(chunk)
            wf.flush()
            os.fsync(wf.fileno())
    except OSError as exc:
        dest.unlink(missing_ok=True)
        raise StorageError(f"write failed for {dest}: {exc}") from exc
    child = Evidence(
        id=child_id,
        case_id=case.id,
        original_name=new_name,
        managed_path=managed_rel,
        size_bytes=size,
        hash_algorithm=HASH_ALGORITHM,
        reference_hash=h.hexdigest(),
        imported_at=utc_now_ms(),
        parent_evidence_id=parent.id,
    )
    _append_custody(child, principal, origin_op, origin_detail)
    case.evidences.append(child)
    return child


def _read_window(path: Path, offset: int, length: int):
    with open(path, "rb") as fh:
        fh.seek(offset)
        remaining = length
        while remaining > 0:
            chunk = fh.read(min(HASH_CHUNK, remaining))
            if not chunk:
                break
            remaining -= len(chunk)
            yield chunk


def extract_region(
    store: StoreHandle,
    case: Case,
    evidence: Evidence,
    offset: int,
    length: int,
    new_name: str,
    principal: str,
) -> Evidence:
    """Carve bytes [offset, offset+length) of an evidence into a new child
    evidence. The source must pass integrity verification at call time."""
    if length < 1:
        raise ValidationError("extraction length must be >= 1")
    if offset < 0 or offset + length > evidence.size_bytes:
        raise ValidationError(
            f"region {offset}+{length} out of range for evidence of {evidence.size_bytes} bytes"
        )
    path = evidence_path(store, evidence)
    with store.lock_for(case.id):
        gate = check_integrity(store, evidence)
        if not path.is_file():
            raise MissingEvidenceError(f"managed file missing for evidence {evidence.id}: {path}")
        if not gate.ok:
            raise IntegrityError(
                f"evidence {evidence.id} failed verification before extraction: "
                f"expected={gate.expected_hash} actual={gate.actual_hash}"
            )
        child = _new_child(
            store,
            case,
            evidence,
            new_name,
            _read_window(path, offset, length),
            Operation.EXTRACTED,
            f"from evidence {evidence.id} offset={offset} length={length}",
            principal,
        )
        _append_custody(
            evidence,
            principal,
            Operation.EXTRACTED,
            f"offset={offset} length={length} child={child.id}",
        )
        save_case(store, case)
    return child


def duplicate_evidence(
    store: StoreHandle,
    case: Case,
    evidence: Evidence,
    new_name: str,
    principal: str,
) -> Evidence:
    """Full byte-exact copy under a new name; child digest equals parent's."""
    path = evidence_path(store, evidence)
    with store.lock_for(case.id):
        gate = check_integrity(store, evidence)
        if not path.is_file():
            raise MissingEvidenceError(f"managed file missing for evidence {evidence.id}: {path}")
        if not gate.ok:
            raise IntegrityError(
                f"evidence {evidence.id} failed verification before duplication: "
                f"expected={gate.expected_hash} actual={gate.actual_hash}"
            )
        child = _new_child(
            store,
            case,
            evidence,
            new_name,
            _read_window(path, 0, evidence.size_bytes),
            Operation.DUPLICATED,
            f"from evidence {evidence.id}",
            principal,
        )
        _append_custody(evidence, principal, Operation.DUPLICATED, f"child={child.id}")
        save_case(store, case)
    return child


def add_note(
    store: StoreHandle,
    case: Case,
    evidence: Evidence,
    author: str,
    text: str,
    region: Region | None = None,
) -> Note:
    if not text.strip():
        raise ValidationError("note text must be non-empty")
    if region is not None:
        if region.offset < 0 or region.length < 0 or region.offset + region.length > evidence.size_bytes:
            raise ValidationError(
                f"note region {region.offset}+{region.length} out of range for "
                f"evidence of {evidence.size_bytes} bytes"
            )
    with store.lock_for(case.id):
        note = Note(
            id=allocate_id(store),
            author=author,
            created_at=utc_now_ms(),
            text=text,
            region=region,
        )
        evidence.notes.append(note)
        detail = f"note={note.id}"
        if region is not None:
            detail += f" region={region.offset}+{region.length}"
        _append_custody(evidence, author, Operation.NOTE_ADDED, detail)
        save_case(store, case)
    return note


# --- canonical binary serialization -------------------------------------------

class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u8(self, v): self.parts.append(struct.pack("<B", v))
    def u32(self, v): self.parts.append(struct.pack("<I", v))
    def u64(self, v): self.parts.append(struct.pack("<Q", v))

    def text(self, s: str):
        raw = s.encode("utf-8")
        self.u32(len(raw))
        self.parts.append(raw)

    def opt_u64(self, v):
        if v is None:
            self.u8(0)
        else:
            self.u8(1)
            self.u64(v)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("truncated case payload")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self): return struct.unpack("<B", self._take(1))[0]
    def u32(self): return struct.unpack("<I", self._take(4))[0]
    def u64(self): return struct.unpack("<Q", self._take(8))[0]

    def text(self) -> str:
        n = self.u32()
        try:
            return self._take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid UTF-8 in case payload: {exc}") from exc

    def opt_u64(self):
        flag = self.u8()
        if flag == 0:
            return None
        if flag != 1:
            raise DecodeError(f"invalid optional flag {flag}")
        return self.u64()

    def done(self):
        if self.pos != len(self.data):
            raise DecodeError(f"{len(self.data) - self.pos} trailing bytes in case payload")


def serialize_case(case: Case) -> bytes:
    w = _Writer()
    w.u8(CASE_FORMAT_VERSION)
    w.u64(case.id)
    w.text(case.title)
    w.u64(case.created_at)
    w.text(case.investigator)
    w.text(case.front_matter.executive_summary)
    w.text(case.front_matter.introduction)
    w.text(case.front_matter.conclusion)
    w.u32(len(case.evidences))
    for ev in case.evidences:
        w.u64(ev.id)
        w.u64(ev.case_id)
        w.text(ev.original_name)
        w.text(ev.managed_path)
        w.u64(ev.size_bytes)
        w.text(ev.hash_algorithm)
        w.text(ev.reference_hash)
        w.u64(ev.imported_at)
        w.opt_u64(ev.parent_evidence_id)
        w.u32(len(ev.notes))
        for note in ev.notes:
            w.u64(note.id)
            w.text(note.author)
            w.u64(note.created_at)
            w.text(note.text)
            if note.region is None:
                w.u8(0)
            else:
                w.u8(1)
                w.u64(note.region.offset)
                w.u64(note.region.length)
        w.u32(len(ev.custody))
        for event in ev.custody:
            w.u32(event.seq)
            w.text(event.principal)
            w.u64(event.timestamp)
            w.u8(_OP_CODES[event.operation])
            w.text(event.detail)
    return w.getvalue()


def deserialize_case(payload: bytes) -> Case:
    r = _Reader(payload)
    version = r.u8()
    if version != CASE_FORMAT_VERSION:
        raise DecodeError(f"unsupported case format version {version}")
    case = Case(
        id=r.u64(),
        title=r.text(),
        created_at=r.u64(),
        investigator=r.text(),
        front_matter=FrontMatter(
            executive_summary=r.text(),
            introduction=r.text(),
            conclusion=r.text(),
        ),
    )
    for _ in range(r.u32()):
        ev = Evidence(
            id=r.u64(),
            case_id=r.u64(),
            original_name=r.text(),
            managed_path=r.text(),
            size_bytes=r.u64(),
            hash_algorithm=r.text(),
            reference_hash=r.text(),
            imported_at=r.u64(),
            parent_evidence_id=r.opt_u64(),
        )
        for _ in range(r.u32()):
            note = Note(id=r.u64(), author=r.text(), created_at=r.u64(), text=r.text())
            if r.u8() == 1:
                note.region = Region(offset=r.u64(), length=r.u64())
            ev.notes.append(note)
        for _ in range(r.u32()):
            seq = r.u32()
            principal = r.text()
            timestamp = r.u64()
            code = r.u8()
            op = _OPS_BY_CODE.get(code)
            if op is None:
                raise DecodeError(f"unknown custody operation code {code}")
            ev.custody.append(
                CustodyEvent(seq=seq, principal=principal, timestamp=timestamp, operation=op, detail=r.text())
            )
        case.evidences.append(ev)
    r.done()
    return case
