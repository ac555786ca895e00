import subprocess

import pytest

from ftklipse import casework
from ftklipse.datastore import open_store


@pytest.fixture
def file_store(tmp_path):
    store = open_store(tmp_path / "data", "file")
    yield store
    store.close()


@pytest.fixture
def mem_store(tmp_path):
    store = open_store(tmp_path / "data", "memory")
    yield store
    store.close()


@pytest.fixture(params=["file", "memory"])
def any_store(tmp_path, request):
    store = open_store(tmp_path / "data", request.param)
    yield store
    store.close()


@pytest.fixture
def make_source(tmp_path):
    """Factory writing source files outside the data root."""
    src_dir = tmp_path / "sources"
    src_dir.mkdir()
    counter = [0]

    def _make(data: bytes, name: str | None = None):
        counter[0] += 1
        path = src_dir / (name or f"src_{counter[0]}.bin")
        path.write_bytes(data)
        return path

    return _make


@pytest.fixture
def case(file_store):
    return casework.create_case(file_store, "Intrusion 2006-04", "varga")


def sha256sum(path) -> str:
    """Independent digest oracle: the coreutils sha256sum binary."""
    out = subprocess.run(["sha256sum", str(path)], capture_output=True, check=True, text=True)
    return out.stdout.split()[0]


@pytest.fixture
def fixture_tools(tmp_path):
    """A tools.d with controlled fixture tools: echoing, failing, sleeping,
    output-producing. Scripts run via /bin/sh so no chmod is needed."""
    tools = tmp_path / "tools.d"
    tools.mkdir()
    scripts = tmp_path / "scripts"
    scripts.mkdir()

    (scripts / "fail.sh").write_text("exit 3\n")
    (scripts / "sleep.sh").write_text("sleep 5\n")
    (scripts / "produce.sh").write_text('wc -c < "$1" > "$2"\n')

    (tools / "echo.tool").write_text(
        "id = echo\n"
        "friendly_name = Echo\n"
        "type = analysis\n"
        "platform = unix\n"
        "in_right_click_menu = true\n"
        "command = echo running-on {evidence_path}\n"
    )
    (tools / "fail.tool").write_text(
        f"id = fail\nplatform = unix\ncommand = sh {scripts}/fail.sh\n"
    )
    (tools / "sleep.tool").write_text(
        f"id = sleep\nplatform = unix\ncommand = sh {scripts}/sleep.sh\n"
    )
    (tools / "produce.tool").write_text(
        "id = produce\n"
        "platform = unix\n"
        "type = collection\n"
        "output_file = bytecount.txt\n"
        f"command = sh {scripts}/produce.sh {{evidence_path}} {{output_path}}\n"
    )
    (tools / "missing.tool").write_text(
        "id = missing\nplatform = unix\ncommand = definitely-not-a-real-binary-xyz {evidence_path}\n"
    )
    return tools
