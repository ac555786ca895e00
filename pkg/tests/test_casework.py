import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftklipse import casework
from ftklipse.casework import (
    Case,
    CustodyEvent,
    Evidence,
    FrontMatter,
    Note,
    Operation,
    Region,
    deserialize_case,
    serialize_case,
)
from ftklipse.datastore import open_store
from ftklipse.errors import (
    DecodeError,
    IntegrityError,
    MissingEvidenceError,
    NotFoundError,
    StorageError,
    ValidationError,
)

from .conftest import sha256sum
from .oracles import read_slice

ABC_SHA256 = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
EMPTY_SHA256 = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


# --- ids and cases ------------------------------------------------------------

def test_allocate_from_fresh_store(file_store):
    assert casework.allocate_id(file_store) == 1


def test_allocate_continues_from_counter(file_store):
    file_store.write_id_counter(41)
    assert casework.allocate_id(file_store) == 42


def test_thousand_allocations_strictly_increase(file_store):
    values = [casework.allocate_id(file_store) for _ in range(1000)]
    assert len(set(values)) == 1000
    assert values == sorted(values)


def test_create_case_fresh_store(file_store):
    case = casework.create_case(file_store, "Intrusion 2006-04", "varga")
    assert case.id == 1
    assert case.evidences == []
    assert case.front_matter == FrontMatter()
    assert file_store.case_dir(case.id).is_dir()


def test_create_case_rejects_whitespace_title(file_store):
    with pytest.raises(ValidationError):
        casework.create_case(file_store, "   ", "varga")


def test_two_creates_have_distinct_ids_and_are_listed(file_store):
    a = casework.create_case(file_store, "A", "x")
    b = casework.create_case(file_store, "B", "y")
    assert a.id != b.id
    assert file_store.list_case_ids() == sorted([a.id, b.id])


# --- import --------------------------------------------------------------------

def test_import_known_vector(file_store, case, make_source):
    src = make_source(b"abc", "abc.txt")
    ev = casework.import_evidence(file_store, case, src, "varga")
    assert ev.size_bytes == 3
    assert ev.reference_hash == ABC_SHA256
    assert ev.hash_algorithm == "sha256"
    assert sha256sum(file_store.root_path / ev.managed_path) == ABC_SHA256


def test_import_empty_file(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"", "empty"), "varga")
    assert ev.size_bytes == 0
    assert ev.reference_hash == EMPTY_SHA256


def test_import_first_custody_event(file_store, case, make_source):
    src = make_source(b"payload")
    ev = casework.import_evidence(file_store, case, src, "okafor")
    assert len(ev.custody) == 1
    event = ev.custody[0]
    assert (event.seq, event.principal, event.operation) == (1, "okafor", Operation.IMPORTED)
    assert str(src) in event.detail


def test_import_copies_byte_exact_into_case_dir(file_store, case, make_source):
    data = bytes(random.Random(5).randbytes(70000))
    ev = casework.import_evidence(file_store, case, make_source(data), "m")
    managed = file_store.root_path / ev.managed_path
    assert managed.read_bytes() == data
    assert ev.managed_path.startswith(f"{case.id}/")
    assert ev.managed_path == f"{case.id}/{ev.id}_{ev.original_name}"


def test_import_sanitizes_hostile_names(file_store, case, make_source):
    src = make_source(b"x")
    ev = casework.import_evidence(file_store, case, src, "m", original_name="../e\x00vil/name")
    managed = file_store.root_path / ev.managed_path
    assert managed.is_file()
    assert "/" not in managed.name and "\x00" not in managed.name
    assert ev.original_name == "../e\x00vil/name"  # record keeps the truth


def test_import_unreadable_source(file_store, case, tmp_path):
    with pytest.raises(StorageError):
        casework.import_evidence(file_store, case, tmp_path / "nope.bin", "m")


def test_same_name_imports_never_collide(file_store, case, make_source):
    a = casework.import_evidence(file_store, case, make_source(b"one", "dup.bin"), "m")
    b = casework.import_evidence(file_store, case, make_source(b"two", "dup.bin"), "m")
    assert a.managed_path != b.managed_path  # id prefix keeps names unique
    assert (file_store.root_path / a.managed_path).read_bytes() == b"one"
    assert (file_store.root_path / b.managed_path).read_bytes() == b"two"


def test_import_persists_case(file_store, case, make_source):
    casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    reloaded = casework.load_case(file_store, case.id)
    assert reloaded == case


# --- verify ---------------------------------------------------------------------

def test_verify_after_import_is_ok(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    result = casework.verify_evidence(file_store, case, ev, "m")
    assert result.ok and result.actual_hash == result.expected_hash == ABC_SHA256
    assert ev.custody[-1].operation == Operation.VERIFIED
    assert ev.custody[-1].detail == "ok"


def test_verify_detects_single_byte_flip(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abcdef"), "m")
    managed = file_store.root_path / ev.managed_path
    raw = bytearray(managed.read_bytes())
    raw[2] ^= 0x01
    managed.write_bytes(bytes(raw))
    result = casework.verify_evidence(file_store, case, ev, "m")
    assert not result.ok
    assert result.actual_hash == sha256sum(managed)
    assert result.actual_hash != result.expected_hash
    assert ev.custody[-1].detail.startswith("MISMATCH expected=")


def test_verify_twice_appends_two_events(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    casework.verify_evidence(file_store, case, ev, "m")
    casework.verify_evidence(file_store, case, ev, "m")
    ops = [e.operation for e in ev.custody]
    assert ops == [Operation.IMPORTED, Operation.VERIFIED, Operation.VERIFIED]
    assert [e.seq for e in ev.custody] == [1, 2, 3]


def test_verify_missing_file_raises_and_journals(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    (file_store.root_path / ev.managed_path).unlink()
    with pytest.raises(MissingEvidenceError):
        casework.verify_evidence(file_store, case, ev, "m")
    assert ev.custody[-1].operation == Operation.VERIFIED
    assert ev.custody[-1].detail == "file missing"


# --- extract and duplicate --------------------------------------------------------

def test_extract_prefix_slice(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"ABCDEFG"), "m")
    child = casework.extract_region(file_store, case, ev, 0, 4, "head.bin", "m")
    assert (file_store.root_path / child.managed_path).read_bytes() == b"ABCD"
    assert child.parent_evidence_id == ev.id
    assert child.case_id == case.id


def test_extract_full_range_preserves_digest(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"ABCDEFG"), "m")
    child = casework.extract_region(file_store, case, ev, 0, ev.size_bytes, "all.bin", "m")
    assert child.reference_hash == ev.reference_hash


def test_extract_out_of_range(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"1234567"), "m")
    with pytest.raises(ValidationError):
        casework.extract_region(file_store, case, ev, 5, 3, "x.bin", "m")
    with pytest.raises(ValidationError):
        casework.extract_region(file_store, case, ev, 0, 0, "x.bin", "m")


def test_extract_custody_events_on_both_sides(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"ABCDEFG"), "m")
    child = casework.extract_region(file_store, case, ev, 2, 3, "mid.bin", "m")
    src_event = ev.custody[-1]
    assert src_event.operation == Operation.EXTRACTED
    assert f"child={child.id}" in src_event.detail
    assert "offset=2" in src_event.detail and "length=3" in src_event.detail
    assert child.custody[0].operation == Operation.EXTRACTED
    assert f"from evidence {ev.id}" in child.custody[0].detail
    # exactly one event appended to the source by the operation
    assert [e.operation for e in ev.custody] == [Operation.IMPORTED, Operation.EXTRACTED]


def test_extract_matches_direct_slice_oracle(file_store, case, make_source):
    rng = random.Random(99)
    data = rng.randbytes(50_000)
    src = make_source(data)
    ev = casework.import_evidence(file_store, case, src, "m")
    for _ in range(25):
        length = rng.randint(1, 5000)
        offset = rng.randint(0, len(data) - length)
        child = casework.extract_region(file_store, case, ev, offset, length, "part.bin", "m")
        expected = read_slice(src, offset, length)
        assert (file_store.root_path / child.managed_path).read_bytes() == expected
        assert child.reference_hash == sha256sum(file_store.root_path / child.managed_path)


def test_extract_refuses_tampered_source(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"ABCDEFG"), "m")
    managed = file_store.root_path / ev.managed_path
    managed.write_bytes(b"ABCDEFX")
    before = len(case.evidences)
    with pytest.raises(IntegrityError):
        casework.extract_region(file_store, case, ev, 0, 4, "x.bin", "m")
    assert len(case.evidences) == before


def test_duplicate_preserves_digest_and_verifies(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    child = casework.duplicate_evidence(file_store, case, ev, "abc-copy", "m")
    assert child.reference_hash == ev.reference_hash
    assert child.size_bytes == ev.size_bytes
    assert casework.verify_evidence(file_store, case, child, "m").ok
    assert ev.custody[-1].operation == Operation.DUPLICATED
    assert child.custody[0].operation == Operation.DUPLICATED


def test_duplicate_megabyte_random_file(file_store, case, make_source):
    data = random.Random(3).randbytes(1024 * 1024)
    ev = casework.import_evidence(file_store, case, make_source(data), "m")
    child = casework.duplicate_evidence(file_store, case, ev, "copy.bin", "m")
    parent_path = file_store.root_path / ev.managed_path
    child_path = file_store.root_path / child.managed_path
    assert child.size_bytes == ev.size_bytes == len(data)
    assert sha256sum(parent_path) == sha256sum(child_path) == child.reference_hash


# --- notes -----------------------------------------------------------------------

def test_add_note_echoes_inputs(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"\xff\xd8rest"), "m")
    note = casework.add_note(file_store, case, ev, "okafor", "JPEG header at start", Region(0, 2))
    assert note.author == "okafor"
    assert note.text == "JPEG header at start"
    assert note.region == Region(0, 2)
    assert ev.custody[-1].operation == Operation.NOTE_ADDED
    assert f"note={note.id}" in ev.custody[-1].detail


def test_add_note_region_off_end(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    with pytest.raises(ValidationError):
        casework.add_note(file_store, case, ev, "m", "text", Region(ev.size_bytes, 1))


def test_add_note_rejects_empty_text(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    with pytest.raises(ValidationError):
        casework.add_note(file_store, case, ev, "m", "   ")


def test_note_ids_distinct_and_increasing(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    n1 = casework.add_note(file_store, case, ev, "m", "first")
    n2 = casework.add_note(file_store, case, ev, "m", "second")
    assert n2.id > n1.id


# --- custody ------------------------------------------------------------------

def test_list_custody_order_and_monotone_timestamps(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    casework.verify_evidence(file_store, case, ev, "m")
    casework.add_note(file_store, case, ev, "m", "note")
    events = casework.list_custody(ev)
    assert [e.operation for e in events] == [Operation.IMPORTED, Operation.VERIFIED, Operation.NOTE_ADDED]
    assert [e.seq for e in events] == [1, 2, 3]
    assert all(a.timestamp <= b.timestamp for a, b in zip(events, events[1:]))


def test_list_custody_returns_copy(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    events = casework.list_custody(ev)
    events.clear()
    assert len(ev.custody) == 1


def test_id_uniqueness_across_object_kinds(file_store, make_source):
    seen = set()
    for _ in range(3):
        case = casework.create_case(file_store, "case", "m")
        seen.add(case.id)
        ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
        seen.add(ev.id)
        note = casework.add_note(file_store, case, ev, "m", "n")
        seen.add(note.id)
    assert len(seen) == 9


def test_find_evidence(file_store, case, make_source):
    ev = casework.import_evidence(file_store, case, make_source(b"abc"), "m")
    found_case, found = casework.find_evidence(file_store, ev.id)
    assert found_case.id == case.id
    assert found == ev
    with pytest.raises(NotFoundError):
        casework.find_evidence(file_store, 9999)


# --- serialization ---------------------------------------------------------------

def test_empty_case_roundtrip():
    case = Case(id=1, title="t", created_at=123, investigator="inv")
    assert deserialize_case(serialize_case(case)) == case


def test_unknown_version_byte():
    with pytest.raises(DecodeError):
        deserialize_case(bytes([255]) + b"rest")


def test_truncated_payload():
    case = Case(id=1, title="title", created_at=123, investigator="inv")
    payload = serialize_case(case)
    with pytest.raises(DecodeError):
        deserialize_case(payload[:-3])


def test_trailing_bytes_rejected():
    case = Case(id=1, title="t", created_at=1, investigator="i")
    with pytest.raises(DecodeError):
        deserialize_case(serialize_case(case) + b"\x00")


_texts = st.text(max_size=30)
_ts = st.integers(min_value=0, max_value=2**48)
_ids = st.integers(min_value=1, max_value=2**31)

_regions = st.builds(Region, offset=st.integers(0, 2**31), length=st.integers(0, 2**31))
_notes = st.builds(
    Note, id=_ids, author=_texts, created_at=_ts, text=_texts,
    region=st.one_of(st.none(), _regions),
)
_events = st.builds(
    CustodyEvent, seq=st.integers(1, 10_000), principal=_texts, timestamp=_ts,
    operation=st.sampled_from(list(Operation)), detail=st.text(max_size=60),
)
_evidences = st.builds(
    Evidence, id=_ids, case_id=_ids, original_name=_texts, managed_path=_texts,
    size_bytes=st.integers(0, 2**40), hash_algorithm=_texts, reference_hash=_texts,
    imported_at=_ts, parent_evidence_id=st.one_of(st.none(), _ids),
    notes=st.lists(_notes, max_size=4), custody=st.lists(_events, max_size=5),
)
_cases = st.builds(
    Case, id=_ids, title=_texts, created_at=_ts, investigator=_texts,
    evidences=st.lists(_evidences, max_size=4),
    front_matter=st.builds(FrontMatter, executive_summary=_texts, introduction=_texts, conclusion=_texts),
)


@given(case=_cases)
@settings(max_examples=120)
def test_structural_roundtrip_property(case):
    assert deserialize_case(serialize_case(case)) == case


def test_persistence_fidelity_after_operations(tmp_path, make_source):
    store = open_store(tmp_path / "data", "file")
    case = casework.create_case(store, "fidelity", "m")
    ev = casework.import_evidence(store, case, make_source(b"0123456789"), "m")
    casework.verify_evidence(store, case, ev, "m")
    casework.add_note(store, case, ev, "m", "a note", Region(1, 2))
    casework.extract_region(store, case, ev, 2, 5, "mid.bin", "m")
    casework.duplicate_evidence(store, case, ev, "copy.bin", "m")
    snapshot = case
    store.close()

    reopened = open_store(tmp_path / "data", "file")
    assert casework.load_case(reopened, case.id) == snapshot
