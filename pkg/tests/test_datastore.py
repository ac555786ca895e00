import os
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftklipse.datastore import CaseRecord, decode_record, encode_record, open_store
from ftklipse.errors import (
    CorruptRecordError,
    NotFoundError,
    StoreOpenError,
    UsageError,
    ValidationError,
)


def test_fresh_file_store_has_zero_counter(tmp_path):
    store = open_store(tmp_path / "data", "file")
    assert store.read_id_counter() == 0
    assert (tmp_path / "data" / "store" / "id_count.rec").is_file()


def test_memory_store_touches_nothing_on_disk(tmp_path):
    root = tmp_path / "data"
    store = open_store(root, "memory")
    assert store.read_id_counter() == 0
    assert not root.exists()


def test_put_get_roundtrip(any_store):
    any_store.put_case_record(CaseRecord(case_id=1, payload=b"hello"))
    assert any_store.get_case_record(1).payload == b"hello"


def test_overwrite_is_last_writer_wins(any_store):
    any_store.put_case_record(CaseRecord(case_id=1, payload=b"one"))
    any_store.put_case_record(CaseRecord(case_id=1, payload=b"two"))
    assert any_store.get_case_record(1).payload == b"two"
    assert any_store.list_case_ids() == [1]


def test_get_on_empty_store_is_not_found(any_store):
    with pytest.raises(NotFoundError):
        any_store.get_case_record(7)


def test_list_is_ascending_and_duplicate_free(any_store):
    for case_id in (3, 1, 2):
        any_store.put_case_record(CaseRecord(case_id=case_id, payload=bytes([case_id])))
    assert any_store.list_case_ids() == [1, 2, 3]


def test_put_rejects_nonpositive_id(any_store):
    with pytest.raises(ValidationError):
        any_store.put_case_record(CaseRecord(case_id=0, payload=b""))


def test_reopen_preserves_records_and_counter(tmp_path):
    root = tmp_path / "data"
    store = open_store(root, "file")
    store.put_case_record(CaseRecord(case_id=1, payload=b"a"))
    store.put_case_record(CaseRecord(case_id=3, payload=b"c"))
    store.write_id_counter(41)
    store.close()

    reopened = open_store(root, "file")
    assert reopened.list_case_ids() == [1, 3]
    assert reopened.get_case_record(3).payload == b"c"
    assert reopened.read_id_counter() == 41


def test_randomized_payload_roundtrip_survives_reopen(tmp_path):
    rng = random.Random(7)
    root = tmp_path / "data"
    store = open_store(root, "file")
    originals = {}
    for case_id in range(1, 101):
        payload = rng.randbytes(rng.randrange(0, 64 * 1024))
        originals[case_id] = payload
        store.put_case_record(CaseRecord(case_id=case_id, payload=payload))
    store.close()
    reopened = open_store(root, "file")
    for case_id, payload in originals.items():
        assert reopened.get_case_record(case_id).payload == payload


def test_counter_monotonicity(any_store):
    any_store.write_id_counter(41)
    assert any_store.read_id_counter() == 41
    with pytest.raises(ValidationError):
        any_store.write_id_counter(40)
    assert any_store.read_id_counter() == 41


def test_truncated_record_file_reports_corruption(tmp_path):
    store = open_store(tmp_path / "data", "file")
    store.put_case_record(CaseRecord(case_id=1, payload=b"x" * 100))
    path = tmp_path / "data" / "store" / "case_1.rec"
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(CorruptRecordError) as excinfo:
        store.get_case_record(1)
    assert "case_1.rec" in str(excinfo.value)


def test_corrupt_counter_file_named_in_error(tmp_path):
    root = tmp_path / "data"
    open_store(root, "file").close()
    counter = root / "store" / "id_count.rec"
    counter.write_bytes(b"garbage")
    with pytest.raises(CorruptRecordError) as excinfo:
        open_store(root, "file")
    assert "id_count.rec" in str(excinfo.value)


def test_bitflip_in_payload_is_detected(tmp_path):
    store = open_store(tmp_path / "data", "file")
    store.put_case_record(CaseRecord(case_id=1, payload=b"payload-bytes"))
    path = tmp_path / "data" / "store" / "case_1.rec"
    blob = bytearray(path.read_bytes())
    blob[20] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(CorruptRecordError):
        store.get_case_record(1)


def test_unusable_root_is_open_error(tmp_path):
    # a regular file where the root must go blocks directory creation
    blocked = tmp_path / "blocked"
    blocked.write_text("in the way")
    with pytest.raises(StoreOpenError):
        open_store(blocked / "data", "file")


def test_closed_handle_raises_usage_error(any_store):
    any_store.close()
    with pytest.raises(UsageError):
        any_store.list_case_ids()


def test_interrupted_put_leaves_old_payload(tmp_path, monkeypatch):
    store = open_store(tmp_path / "data", "file")
    store.put_case_record(CaseRecord(case_id=1, payload=b"old"))

    def boom(src, dst):
        raise OSError("simulated crash before commit")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(Exception):
        store.put_case_record(CaseRecord(case_id=1, payload=b"new"))
    monkeypatch.undo()
    assert store.get_case_record(1).payload == b"old"


@given(payload=st.binary(max_size=4096))
@settings(max_examples=50)
def test_container_roundtrip(payload):
    version, decoded = decode_record(encode_record(payload), "mem")
    assert decoded == payload
    assert version == 1


def test_adapter_equivalence_over_random_op_sequences(tmp_path):
    rng = random.Random(1234)
    for seq in range(30):
        mem = open_store(tmp_path / f"m{seq}", "memory")
        fil = open_store(tmp_path / f"f{seq}", "file")
        for _ in range(20):
            op = rng.choice(["put", "get", "list", "read", "write", "alloc"])
            if op == "put":
                case_id = rng.randint(1, 5)
                payload = rng.randbytes(rng.randrange(0, 256))
                assert mem.put_case_record(CaseRecord(case_id, payload)) == \
                    fil.put_case_record(CaseRecord(case_id, payload))
            elif op == "get":
                case_id = rng.randint(1, 5)
                try:
                    a = mem.get_case_record(case_id).payload
                except NotFoundError:
                    a = NotFoundError
                try:
                    b = fil.get_case_record(case_id).payload
                except NotFoundError:
                    b = NotFoundError
                assert a == b
            elif op == "list":
                assert mem.list_case_ids() == fil.list_case_ids()
            elif op == "read":
                assert mem.read_id_counter() == fil.read_id_counter()
            elif op == "write":
                value = rng.randint(0, 100)
                try:
                    a = mem.write_id_counter(value)
                except ValidationError:
                    a = ValidationError
                try:
                    b = fil.write_id_counter(value)
                except ValidationError:
                    b = ValidationError
                assert a == b
            else:
                assert mem.allocate_id() == fil.allocate_id()
        mem.close()
        fil.close()
