import json
import subprocess
import sys

import pytest

from ftklipse import casework, rendering
from ftklipse.cli import dispatch
from ftklipse.datastore import open_store


@pytest.fixture
def env(tmp_path, fixture_tools):
    data_root = tmp_path / "data"
    return {
        "root": str(data_root),
        "tools": str(fixture_tools),
        "common": ["--data-root", str(data_root), "--tools-dir", str(fixture_tools),
                   "--principal", "cli-user"],
    }


def run_cli(capsys, argv):
    code = dispatch(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_case_create_prints_id(env, capsys):
    code, out, _ = run_cli(capsys, ["case", "create", "--title", "T", "--investigator", "I"] + env["common"])
    assert code == 0
    assert "created case 1" in out


def test_case_create_json(env, capsys):
    code, out, _ = run_cli(capsys, ["case", "create", "--title", "T", "--json"] + env["common"])
    assert code == 0
    body = json.loads(out)
    assert body["id"] == 1 and body["title"] == "T"
    assert body["investigator"] == "cli-user"


def test_unknown_command_usage_exit_1(env, capsys):
    code, _, err = run_cli(capsys, ["case", "obliterate"] + env["common"])
    assert code == 1
    assert "usage" in err.lower()


def test_empty_title_validation_exit_1(env, capsys):
    code, _, err = run_cli(capsys, ["case", "create", "--title", "  "] + env["common"])
    assert code == 1
    assert "error" in err


def test_import_verify_roundtrip(env, capsys, make_source):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    src = make_source(b"abc", "abc.txt")
    code, out, _ = run_cli(capsys, ["evidence", "import", "--case", "1", "--source", str(src), "--json"] + env["common"])
    assert code == 0
    ev = json.loads(out)
    assert ev["reference_hash"].startswith("ba7816bf")

    code, out, _ = run_cli(capsys, ["evidence", "verify", "--id", str(ev["id"])] + env["common"])
    assert code == 0
    assert out.startswith("ok ")


def test_verify_tampered_exits_2_with_mismatch_line(env, capsys, make_source):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    src = make_source(b"abcdef")
    _, out, _ = run_cli(capsys, ["evidence", "import", "--case", "1", "--source", str(src), "--json"] + env["common"])
    ev = json.loads(out)

    store = open_store(env["root"], "file")
    _, evidence = casework.find_evidence(store, ev["id"])
    managed = store.root_path / evidence.managed_path
    managed.write_bytes(b"abcdeX")
    store.close()

    code, out, _ = run_cli(capsys, ["evidence", "verify", "--id", str(ev["id"])] + env["common"])
    assert code == 2
    assert out.startswith("MISMATCH expected=")


def test_missing_source_is_io_exit_3(env, capsys):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    code, _, err = run_cli(capsys, ["evidence", "import", "--case", "1", "--source", "/nope.bin"] + env["common"])
    assert code == 3
    assert "error" in err


def test_render_stdout_equals_module_oracle(env, capsys, make_source):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    data = bytes(range(48))
    src = make_source(data)
    _, out, _ = run_cli(capsys, ["evidence", "import", "--case", "1", "--source", str(src), "--json"] + env["common"])
    ev = json.loads(out)
    code, out, _ = run_cli(capsys, [
        "evidence", "render", "--id", str(ev["id"]),
        "--format", "hex", "--offset", "0", "--length", "48",
    ] + env["common"])
    assert code == 0
    assert out == rendering.render_hex(data, base_offset=0)
    # render is a shared operation: the CLI journals `viewed` like the service
    store = open_store(env["root"], "file")
    _, evidence = casework.find_evidence(store, ev["id"])
    assert evidence.custody[-1].operation.value == "viewed"
    store.close()


def test_extract_duplicate_note_custody(env, capsys, make_source):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    src = make_source(b"ABCDEFG")
    _, out, _ = run_cli(capsys, ["evidence", "import", "--case", "1", "--source", str(src), "--json"] + env["common"])
    ev = json.loads(out)

    code, out, _ = run_cli(capsys, [
        "evidence", "extract", "--id", str(ev["id"]), "--offset", "0", "--length", "4",
        "--name", "head.bin", "--json",
    ] + env["common"])
    assert code == 0
    child = json.loads(out)
    assert child["size_bytes"] == 4

    code, out, _ = run_cli(capsys, [
        "evidence", "duplicate", "--id", str(ev["id"]), "--name", "copy.bin", "--json",
    ] + env["common"])
    assert code == 0
    assert json.loads(out)["reference_hash"] == ev["reference_hash"]

    code, out, _ = run_cli(capsys, [
        "note", "add", "--evidence", str(ev["id"]), "--text", "header", "--offset", "0", "--length", "2",
    ] + env["common"])
    assert code == 0

    code, out, _ = run_cli(capsys, ["evidence", "custody", "--id", str(ev["id"]), "--json"] + env["common"])
    events = json.loads(out)
    assert [e["operation"] for e in events] == ["imported", "extracted", "duplicated", "note_added"]
    assert [e["seq"] for e in events] == [1, 2, 3, 4]


def test_out_of_range_extract_exit_1(env, capsys, make_source):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    src = make_source(b"1234567")
    _, out, _ = run_cli(capsys, ["evidence", "import", "--case", "1", "--source", str(src), "--json"] + env["common"])
    ev = json.loads(out)
    code, _, err = run_cli(capsys, [
        "evidence", "extract", "--id", str(ev["id"]), "--offset", "5", "--length", "3",
        "--name", "x.bin",
    ] + env["common"])
    assert code == 1


def test_tool_list_and_run(env, capsys, make_source):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    src = make_source(b"bytes")
    _, out, _ = run_cli(capsys, ["evidence", "import", "--case", "1", "--source", str(src), "--json"] + env["common"])
    ev = json.loads(out)

    code, out, _ = run_cli(capsys, ["tool", "list", "--json"] + env["common"])
    assert code == 0
    assert {t["id"] for t in json.loads(out)} == {"echo", "fail", "sleep", "produce", "missing"}

    code, out, _ = run_cli(capsys, [
        "tool", "run", "--tool", "echo", "--evidence", str(ev["id"]), "--json",
    ] + env["common"])
    assert code == 0
    result = json.loads(out)
    assert result["exit_code"] == 0
    assert result["post_verification"]["ok"] is True


def test_tool_run_missing_binary_exit_3(env, capsys, make_source):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    src = make_source(b"bytes")
    _, out, _ = run_cli(capsys, ["evidence", "import", "--case", "1", "--source", str(src), "--json"] + env["common"])
    ev = json.loads(out)
    code, _, err = run_cli(capsys, [
        "tool", "run", "--tool", "missing", "--evidence", str(ev["id"]),
    ] + env["common"])
    assert code == 3


def test_report_generate_writes_file(env, capsys, make_source):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    src = make_source(b"report me")
    _, out, _ = run_cli(capsys, ["evidence", "import", "--case", "1", "--source", str(src), "--json"] + env["common"])
    ev = json.loads(out)
    code, out, _ = run_cli(capsys, [
        "report", "generate", "--case", "1", "--format", "html",
        "--summary", "Exec summary", "--excerpt", f"{ev['id']}:0:8:head",
    ] + env["common"])
    assert code == 0
    path = out.strip()
    content = open(path).read()
    assert "Exec summary" in content
    assert f"Evidence {ev['id']}" in content


def test_set_front_matter_roundtrip(env, capsys):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    code, _, _ = run_cli(capsys, [
        "case", "set-front", "--id", "1", "--summary", "S", "--conclusion", "C",
    ] + env["common"])
    assert code == 0
    code, out, _ = run_cli(capsys, ["case", "show", "--id", "1", "--json"] + env["common"])
    body = json.loads(out)
    assert body["front_matter"]["executive_summary"] == "S"
    assert body["front_matter"]["conclusion"] == "C"


def test_actions_are_audit_logged(env, capsys):
    run_cli(capsys, ["case", "create", "--title", "T"] + env["common"])
    log = open(f"{env['root']}/ftklipse.application.log").read()
    assert "case 1 created" in log


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "ftklipse.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "ftklipse" in proc.stdout
