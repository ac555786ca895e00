"""Engine-independent persistence for serialized case records.

The application never sees backend particularities; it talks to a
StoreHandle bound to exactly one adapter:

  memory  -- dict-backed, touches nothing on disk
  file    -- one record file per case under <root>/store/ plus a global
             id counter, each wrapped in the FTK1 container

FTK1 container (all little-endian):

  magic 'FTK1' (4 bytes) | u16 version | u64 payload length | payload
  | u32 CRC-32 of payload

Writes go to `<name>.tmp` followed by an atomic rename, so an interrupted
write leaves either the old or the new record readable, never a torn one.
Corruption is reported loudly with the offending filename; there is no
silent repair.
"""

from __future__ import annotations

import enum
import os
import re
import struct
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    CorruptRecordError,
    NotFoundError,
    StorageError,
    StoreOpenError,
    UsageError,
    ValidationError,
)

MAGIC = b"FTK1"
CONTAINER_VERSION = 1

_HEADER = struct.Struct("<4sHQ")
_CRC = struct.Struct("<I")
_CASE_FILE = re.compile(r"^case_(\d+)\.rec$")

STORE_SUBDIR = "store"
COUNTER_FILE = "id_count.rec"


class AdapterKind(str, enum.Enum):
    MEMORY = "memory"
    FILE = "file"


@dataclass
class CaseRecord:
    case_id: int
    payload: bytes
    version: int = CONTAINER_VERSION


def encode_record(payload: bytes, version: int = CONTAINER_VERSION) -> bytes:
    return _HEADER.pack(MAGIC, version, len(payload)) + payload + _CRC.pack(zlib.crc32(payload))


def decode_record(blob: bytes, source: str) -> tuple[int, bytes]:
    """Validate an FTK1 container and return (version, payload).

    `source` names the record (usually a filename) for error messages.
    """
    if len(blob) < _HEADER.size + _CRC.size:
        raise CorruptRecordError(f"{source}: truncated record ({len(blob)} bytes)")
    magic, version, length = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CorruptRecordError(f"{source}: bad magic {magic!r}")
    if version != CONTAINER_VERSION:
        raise CorruptRecordError(f"{source}: unsupported container version {version}")
    expected = _HEADER.size + length + _CRC.size
    if len(blob) != expected:
        raise CorruptRecordError(f"{source}: length mismatch (header says {length} payload bytes)")
    payload = blob[_HEADER.size:_HEADER.size + length]
    (crc,) = _CRC.unpack_from(blob, _HEADER.size + length)
    if crc != zlib.crc32(payload):
        raise CorruptRecordError(f"{source}: checksum mismatch")
    return version, payload


class _MemoryBackend:
    def __init__(self):
        self.records: dict[int, bytes] = {}
        self.counter = 0

    def put(self, case_id: int, payload: bytes) -> None:
        self.records[case_id] = payload

    def get(self, case_id: int) -> bytes:
        try:
            return self.records[case_id]
        except KeyError:
            raise NotFoundError(f"no case record with id {case_id}") from None

    def list_ids(self) -> list[int]:
        return sorted(self.records)

    def read_counter(self) -> int:
        return self.counter

    def write_counter(self, value: int) -> None:
        self.counter = value


class _FileBackend:
    def __init__(self, root: Path):
        self.store_dir = root / STORE_SUBDIR
        try:
            self.store_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreOpenError(f"cannot create store directory {self.store_dir}: {exc}") from exc
        if not os.access(self.store_dir, os.W_OK):
            raise StoreOpenError(f"store directory not writable: {self.store_dir}")
        counter = self.store_dir / COUNTER_FILE
        if not counter.exists():
            self.write_counter(0)
        else:
            self.read_counter()  # fail fast on a corrupt counter file

    def _case_path(self, case_id: int) -> Path:
        return self.store_dir / f"case_{case_id}.rec"

    def _write_atomic(self, path: Path, blob: bytes) -> None:
        tmp = path.with_name(path.name + ".tmp")
        try:
            with open(tmp, "wb") as fh:
                fh.write(blob)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageError(f"write failed for {path}: {exc}") from exc

    def _read(self, path: Path) -> bytes:
        try:
            with open(path, "rb") as fh:
                blob = fh.read()
        except FileNotFoundError:
            raise NotFoundError(f"no record file {path}") from None
        except OSError as exc:
            raise StorageError(f"read failed for {path}: {exc}") from exc
        _, payload = decode_record(blob, str(path))
        return payload

    def put(self, case_id: int, payload: bytes) -> None:
        self._write_atomic(self._case_path(case_id), encode_record(payload))

    def get(self, case_id: int) -> bytes:
        path = self._case_path(case_id)
        if not path.exists():
            raise NotFoundError(f"no case record with id {case_id}")
        return self._read(path)

    def list_ids(self) -> list[int]:
        ids = []
        for entry in self.store_dir.iterdir():
            m = _CASE_FILE.match(entry.name)
            if m:
                ids.append(int(m.group(1)))
        return sorted(ids)

    def read_counter(self) -> int:
        payload = self._read(self.store_dir / COUNTER_FILE)
        if len(payload) != 8:
            raise CorruptRecordError(
                f"{self.store_dir / COUNTER_FILE}: counter payload must be 8 bytes"
            )
        return struct.unpack("<Q", payload)[0]

    def write_counter(self, value: int) -> None:
        self._write_atomic(self.store_dir / COUNTER_FILE, encode_record(struct.pack("<Q", value)))


@dataclass
class StoreHandle:
    """One open data directory; exactly one adapter bound for its lifetime.

    Mutating operations are serialized internally; handles may be shared
    across threads within one process. No cross-process locking is done.
    """

    root_path: Path
    adapter_kind: AdapterKind
    _backend: object = field(repr=False, default=None)
    _lock: threading.Lock = field(repr=False, default_factory=threading.Lock)
    _case_locks: dict = field(repr=False, default_factory=dict)
    _closed: bool = field(repr=False, default=False)

    def _check_open(self):
        if self._closed:
            raise UsageError("store handle is closed")

    def put_case_record(self, record: CaseRecord) -> None:
        self._check_open()
        if record.case_id < 1:
            raise ValidationError(f"case_id must be >= 1, got {record.case_id}")
        with self._lock:
            self._backend.put(record.case_id, bytes(record.payload))

    def get_case_record(self, case_id: int) -> CaseRecord:
        self._check_open()
        if case_id < 1:
            raise ValidationError(f"case_id must be >= 1, got {case_id}")
        return CaseRecord(case_id=case_id, payload=self._backend.get(case_id))

    def has_case(self, case_id: int) -> bool:
        self._check_open()
        return case_id in self._backend.list_ids()

    def list_case_ids(self) -> list[int]:
        self._check_open()
        return self._backend.list_ids()

    def read_id_counter(self) -> int:
        self._check_open()
        return self._backend.read_counter()

    def write_id_counter(self, value: int) -> None:
        self._check_open()
        with self._lock:
            current = self._backend.read_counter()
            if value < current:
                raise ValidationError(
                    f"id counter is monotone: cannot write {value} below current {current}"
                )
            self._backend.write_counter(value)

    def allocate_id(self) -> int:
        """Atomically bump the global counter and return the fresh id."""
        self._check_open()
        with self._lock:
            value = self._backend.read_counter() + 1
            self._backend.write_counter(value)
            return value

    def case_dir(self, case_id: int) -> Path:
        """Directory holding a case's evidence files: <root>/<case_id>/."""
        return self.root_path / str(case_id)

    def lock_for(self, case_id: int) -> threading.RLock:
        """Per-case re-entrant lock used to serialize case mutations."""
        with self._lock:
            lock = self._case_locks.get(case_id)
            if lock is None:
                lock = self._case_locks[case_id] = threading.RLock()
            return lock

    def close(self) -> None:
        self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_store(root_path, adapter_kind=AdapterKind.FILE) -> StoreHandle:
    """Open (creating if absent, for the file adapter) a data directory.

    The memory adapter touches nothing on disk at open time; evidence
    payload files are always real files and are created later on demand.
    """
    kind = AdapterKind(adapter_kind)
    root = Path(root_path)
    if kind is AdapterKind.FILE:
        backend = _FileBackend(root)
    else:
        backend = _MemoryBackend()
    return StoreHandle(root_path=root, adapter_kind=kind, _backend=backend)
