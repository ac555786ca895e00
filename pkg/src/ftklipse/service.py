"""Local HTTP API exposing the engine to the web UI and scripts.

Loopback by default; the operating principal rides on the `X-Principal`
header (falling back to the configured session principal) and populates the
custody journal. Errors come back as `{"error": {"code", "message"}}` with
400 for validation, 404 for unknown ids, 409 for integrity failures, 500
otherwise.
"""

from __future__ import annotations

import socket
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import casework, rendering, reporting, toolkit
from .audit_log import DEFAULT_LOG_NAME, LogSink, open_log
from .casework import FrontMatter, Region
from .datastore import AdapterKind, StoreHandle, open_store
from .errors import (
    FtklipseError,
    IntegrityError,
    NotFoundError,
    StorageError,
    ToolExecutionError,
    ValidationError,
)
from .reporting import Excerpt
from .util import to_jsonable, utc_now_ms

DEFAULT_BIND = "127.0.0.1:7806"


@dataclass
class ServiceConfig:
    bind_address: str = DEFAULT_BIND
    data_root: str = "./data"
    tools_dir: str = "./tools.d"
    principal: str = "investigator"
    adapter_kind: str = AdapterKind.FILE.value
    log_file: str | None = None
    latex_bin: str = "pdflatex"
    ui_dir: str | None = None


@dataclass
class RunRecord:
    run_id: str
    tool_id: str
    evidence_id: int
    status: str  # running | done | error
    created_at: int
    result: dict | None = None
    error: dict | None = None


class RunTable:
    def __init__(self):
        self._runs: dict[str, RunRecord] = {}
        self._lock = threading.Lock()

    def create(self, tool_id: str, evidence_id: int) -> RunRecord:
        record = RunRecord(
            run_id=uuid.uuid4().hex,
            tool_id=tool_id,
            evidence_id=evidence_id,
            status="running",
            created_at=utc_now_ms(),
        )
        with self._lock:
            self._runs[record.run_id] = record
        return record

    def finish(self, run_id: str, result: dict) -> None:
        with self._lock:
            record = self._runs[run_id]
            record.status = "done"
            record.result = result

    def fail(self, run_id: str, code: str, message: str, result: dict | None) -> None:
        with self._lock:
            record = self._runs[run_id]
            record.status = "error"
            record.error = {"code": code, "message": message}
            record.result = result

    def get(self, run_id: str) -> RunRecord:
        with self._lock:
            record = self._runs.get(run_id)
        if record is None:
            raise NotFoundError(f"no run with id {run_id}")
        return record


@dataclass
class ServiceState:
    config: ServiceConfig
    store: StoreHandle
    registry: toolkit.ToolRegistry
    sink: LogSink
    runs: RunTable = field(default_factory=RunTable)


# --- request bodies ---------------------------------------------------------

class CaseCreateBody(BaseModel):
    title: str
    investigator: str = ""


class ExtractBody(BaseModel):
    offset: int
    length: int
    new_name: str


class DuplicateBody(BaseModel):
    new_name: str


class RegionBody(BaseModel):
    offset: int
    length: int


class NoteBody(BaseModel):
    text: str
    author: str | None = None
    region: RegionBody | None = None


class RunBody(BaseModel):
    evidence_id: int
    params: dict[str, str] = {}
    timeout_s: int = toolkit.DEFAULT_TIMEOUT_S


class FrontMatterBody(BaseModel):
    executive_summary: str = ""
    introduction: str = ""
    conclusion: str = ""


class ExcerptBody(BaseModel):
    evidence_id: int
    offset: int
    length: int
    caption: str = ""


class ReportBody(BaseModel):
    format: str = "html"
    title: str | None = None
    front_matter: FrontMatterBody | None = None
    include_evidence_ids: list[int] | None = None
    excerpts: list[ExcerptBody] = []
    include_notes: bool = True
    include_custody: bool = True


def _status_for(exc: FtklipseError) -> int:
    if isinstance(exc, NotFoundError):
        return 404
    if isinstance(exc, IntegrityError):
        return 409
    if isinstance(exc, ValidationError):
        return 400
    return 500


def _error_body(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    store = open_store(config.data_root, config.adapter_kind)
    manifests, diagnostics = toolkit.scan_tool_dir(config.tools_dir)
    registry = toolkit.ToolRegistry(manifests)
    log_path = config.log_file or str(Path(config.data_root) / DEFAULT_LOG_NAME)
    sink = open_log(log_path)
    for diag in diagnostics:
        sink.log(f"tool scan: {diag}")
    state = ServiceState(config=config, store=store, registry=registry, sink=sink)

    app = FastAPI(title="ftklipse service", version="0.1.0")
    app.state.engine = state

    def principal_of(request: Request) -> str:
        return request.headers.get("X-Principal", config.principal)

    @app.exception_handler(FtklipseError)
    async def _engine_error(request: Request, exc: FtklipseError):
        return JSONResponse(status_code=_status_for(exc), content=_error_body(exc.code, str(exc)))

    @app.exception_handler(RequestValidationError)
    async def _schema_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content=_error_body("validation", str(exc)))

    @app.exception_handler(Exception)
    async def _internal_error(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content=_error_body("internal", str(exc)))

    @app.middleware("http")
    async def _audit(request: Request, call_next):
        response = await call_next(request)
        sink.log(
            f"{request.method} {request.url.path} -> {response.status_code} "
            f"principal={request.headers.get('X-Principal', config.principal)}"
        )
        return response

    # --- health and cases -----------------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok", "data_root": str(store.root_path), "tools": len(registry)}

    @app.get("/cases")
    def list_cases():
        return [to_jsonable(case) for case in casework.iter_cases(store)]

    @app.post("/cases", status_code=201)
    def create_case(body: CaseCreateBody, request: Request):
        investigator = body.investigator or principal_of(request)
        case = casework.create_case(store, body.title, investigator)
        return to_jsonable(case)

    @app.get("/cases/{case_id}")
    def get_case(case_id: int):
        return to_jsonable(casework.load_case(store, case_id))

    @app.get("/cases/{case_id}/custody")
    def case_custody(case_id: int):
        case = casework.load_case(store, case_id)
        return {
            "case_id": case.id,
            "evidence": [
                {"evidence_id": ev.id, "events": to_jsonable(casework.list_custody(ev))}
                for ev in case.evidences
            ],
        }

    # --- evidence ---------------------------------------------------------

    @app.post("/cases/{case_id}/evidence", status_code=201)
    def upload_evidence(case_id: int, file: UploadFile, request: Request):
        with store.lock_for(case_id):
            case = casework.load_case(store, case_id)
            tmp = tempfile.NamedTemporaryFile(delete=False, prefix="upload_", dir=str(store.root_path))
            try:
                while True:
                    chunk = file.file.read(1024 * 1024)
                    if not chunk:
                        break
                    tmp.write(chunk)
                tmp.close()
                evidence = casework.import_evidence(
                    store,
                    case,
                    tmp.name,
                    principal_of(request),
                    original_name=file.filename or "upload.bin",
                    source_label=f"upload:{file.filename}",
                )
            finally:
                Path(tmp.name).unlink(missing_ok=True)
        return to_jsonable(evidence)

    @app.get("/evidence/{evidence_id}")
    def get_evidence(evidence_id: int):
        _, evidence = casework.find_evidence(store, evidence_id)
        return to_jsonable(evidence)

    @app.get("/evidence/{evidence_id}/render")
    def render_evidence(
        evidence_id: int,
        request: Request,
        format: str,
        offset: int = 0,
        length: int = 4096,
        encoding: str | None = None,
    ):
        req = rendering.RenderRequest(format=format, offset=offset, length=length, encoding=encoding)
        with casework.evidence_mutation(store, evidence_id) as (case, evidence):
            body = rendering.render(store.root_path, evidence, req)
            casework.record_view(
                store, case, evidence, principal_of(request),
                f"render format={format} offset={offset} length={length}",
            )
        return PlainTextResponse(body)

    @app.post("/evidence/{evidence_id}/verify")
    def verify_evidence(evidence_id: int, request: Request):
        with casework.evidence_mutation(store, evidence_id) as (case, evidence):
            result = casework.verify_evidence(store, case, evidence, principal_of(request))
        return to_jsonable(result)

    @app.post("/evidence/{evidence_id}/extract", status_code=201)
    def extract(evidence_id: int, body: ExtractBody, request: Request):
        with casework.evidence_mutation(store, evidence_id) as (case, evidence):
            child = casework.extract_region(
                store, case, evidence, body.offset, body.length, body.new_name, principal_of(request)
            )
        return to_jsonable(child)

    @app.post("/evidence/{evidence_id}/duplicate", status_code=201)
    def duplicate(evidence_id: int, body: DuplicateBody, request: Request):
        with casework.evidence_mutation(store, evidence_id) as (case, evidence):
            child = casework.duplicate_evidence(
                store, case, evidence, body.new_name, principal_of(request)
            )
        return to_jsonable(child)

    @app.get("/evidence/{evidence_id}/notes")
    def list_notes(evidence_id: int):
        _, evidence = casework.find_evidence(store, evidence_id)
        return [to_jsonable(note) for note in evidence.notes]

    @app.post("/evidence/{evidence_id}/notes", status_code=201)
    def add_note(evidence_id: int, body: NoteBody, request: Request):
        region = Region(body.region.offset, body.region.length) if body.region else None
        with casework.evidence_mutation(store, evidence_id) as (case, evidence):
            note = casework.add_note(
                store, case, evidence, body.author or principal_of(request), body.text, region
            )
        return to_jsonable(note)

    # --- tools --------------------------------------------------------------

    @app.get("/tools")
    def list_tools(
        type: str | None = None,
        platform: str | None = None,
        in_batch_menu: bool | None = None,
        in_right_click_menu: bool | None = None,
    ):
        try:
            tool_type = toolkit.ToolType(type) if type is not None else None
            plat = toolkit.Platform(platform) if platform is not None else None
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        tools = toolkit.list_tools(
            state.registry,
            tool_type=tool_type,
            platform=plat,
            in_batch_menu=in_batch_menu,
            in_right_click_menu=in_right_click_menu,
        )
        return [to_jsonable(m) for m in tools]

    @app.post("/tools/{tool_id}/run", status_code=202)
    def run_tool(tool_id: str, body: RunBody, request: Request):
        manifest = state.registry.lookup(tool_id)
        case, evidence = casework.find_evidence(store, body.evidence_id)
        plan = toolkit.plan_invocation(
            manifest, evidence, body.params, store.case_dir(case.id), timeout_s=body.timeout_s
        )
        record = state.runs.create(tool_id, evidence.id)
        principal = principal_of(request)

        def _execute():
            try:
                result = toolkit.run_tool(store, plan, principal)
                state.runs.finish(record.run_id, to_jsonable(result))
            except ToolExecutionError as exc:
                state.runs.fail(record.run_id, exc.code, str(exc), to_jsonable(exc.result))
            except FtklipseError as exc:
                state.runs.fail(record.run_id, exc.code, str(exc), None)
            except Exception as exc:  # surfaces in the run record, not the log only
                state.runs.fail(record.run_id, "internal", str(exc), None)

        threading.Thread(target=_execute, daemon=True).start()
        return {"run_id": record.run_id, "status": record.status}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        return to_jsonable(state.runs.get(run_id))

    # --- reports --------------------------------------------------------------

    @app.post("/cases/{case_id}/report")
    def make_report(case_id: int, body: ReportBody, request: Request):
        if body.format not in ("latex", "html", "pdf"):
            raise ValidationError(
                f"unsupported report format {body.format!r}; supported: ['html', 'latex', 'pdf']"
            )
        with store.lock_for(case_id):
            case = casework.load_case(store, case_id)
            front = (
                FrontMatter(**body.front_matter.model_dump()) if body.front_matter else None
            )
            spec = reporting.build_report_spec(
                store,
                case,
                principal_of(request),
                title=body.title,
                front_matter=front,
                include_evidence_ids=body.include_evidence_ids,
                excerpts=[Excerpt(**e.model_dump()) for e in body.excerpts],
                include_notes=body.include_notes,
                include_custody=body.include_custody,
            )
        if body.format == "pdf":
            pdf_path = reporting.render_pdf(spec, case, store.root_path, latex_bin=config.latex_bin)
            return Response(
                content=pdf_path.read_bytes(),
                media_type="application/pdf",
                headers={"X-Report-Path": str(pdf_path)},
            )
        path = reporting.write_report(store.root_path, spec, case, body.format)
        media = "text/html" if body.format == "html" else "application/x-latex"
        return Response(
            content=path.read_text(encoding="utf-8"),
            media_type=media,
            headers={"X-Report-Path": str(path)},
        )

    # --- static UI --------------------------------------------------------------

    if config.ui_dir and Path(config.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app


def parse_bind(bind_address: str) -> tuple[str, int]:
    host, _, port = bind_address.rpartition(":")
    if not host or not port.isdigit():
        raise ValidationError(f"bind address must be host:port, got {bind_address!r}")
    return host, int(port)


def start_service(config: ServiceConfig) -> None:
    """Open the store, scan tools once, and serve until interrupted."""
    import uvicorn

    host, port = parse_bind(config.bind_address)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise StorageError(f"cannot bind {config.bind_address}: {exc}") from exc
    finally:
        probe.close()
    app = create_app(config)
    uvicorn.run(app, host=host, port=port, log_level="warning")
