"""Command line interface: `ftklipse <noun> <verb> [flags]`.

Nouns: case, evidence, note, tool, report, serve. Exit codes: 0 success,
1 validation/usage, 2 integrity, 3 I/O. `--json` switches machine output.
"""

from __future__ import annotations

import argparse
import getpass
import json
import sys
from pathlib import Path

from . import casework, rendering, reporting, toolkit
from .audit_log import DEFAULT_LOG_NAME, open_log
from .casework import FrontMatter, Region
from .datastore import open_store
from .errors import (
    FtklipseError,
    IntegrityError,
    NotFoundError,
    StorageError,
    ToolExecutionError,
    ValidationError,
)
from .reporting import Excerpt
from .service import ServiceConfig, start_service
from .util import iso_utc_ms, to_jsonable

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INTEGRITY = 2
EXIT_IO = 3


class _UsageExit(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"{self.format_usage()}error: {message}\n")
        raise _UsageExit(message)


def _default_principal() -> str:
    try:
        return getpass.getuser()
    except Exception:
        return "investigator"


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data-root", default="./data", help="data directory (default ./data)")
    common.add_argument("--tools-dir", default="./tools.d", help="tool manifests directory (default ./tools.d)")
    common.add_argument("--principal", default=_default_principal(), help="operator name for custody events")
    common.add_argument("--log-file", default=None, help="audit log path (default <data-root>/%s)" % DEFAULT_LOG_NAME)
    common.add_argument("--adapter", choices=["file", "memory"], default="file", help="datastore adapter")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    return common


def build_parser() -> _Parser:
    common = _common_flags()
    parser = _Parser(prog="ftklipse", description="digital forensics case workbench")
    nouns = parser.add_subparsers(dest="noun", required=True)

    # case ------------------------------------------------------------------
    case = nouns.add_parser("case", help="case management").add_subparsers(dest="verb", required=True)
    p = case.add_parser("create", parents=[common])
    p.add_argument("--title", required=True)
    p.add_argument("--investigator", default=None)
    case.add_parser("list", parents=[common])
    p = case.add_parser("show", parents=[common])
    p.add_argument("--id", type=int, required=True)
    p = case.add_parser("set-front", parents=[common])
    p.add_argument("--id", type=int, required=True)
    p.add_argument("--summary", default=None)
    p.add_argument("--introduction", default=None)
    p.add_argument("--conclusion", default=None)

    # evidence ---------------------------------------------------------------
    ev = nouns.add_parser("evidence", help="evidence operations").add_subparsers(dest="verb", required=True)
    p = ev.add_parser("import", parents=[common])
    p.add_argument("--case", type=int, required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--name", default=None, help="override the original filename")
    p = ev.add_parser("list", parents=[common])
    p.add_argument("--case", type=int, required=True)
    p = ev.add_parser("show", parents=[common])
    p.add_argument("--id", type=int, required=True)
    p = ev.add_parser("verify", parents=[common])
    p.add_argument("--id", type=int, required=True)
    p = ev.add_parser("render", parents=[common])
    p.add_argument("--id", type=int, required=True)
    p.add_argument("--format", required=True, choices=list(rendering.FORMATS))
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--encoding", default=None)
    p = ev.add_parser("extract", parents=[common])
    p.add_argument("--id", type=int, required=True)
    p.add_argument("--offset", type=int, required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--name", required=True)
    p = ev.add_parser("duplicate", parents=[common])
    p.add_argument("--id", type=int, required=True)
    p.add_argument("--name", required=True)
    p = ev.add_parser("custody", parents=[common])
    p.add_argument("--id", type=int, required=True)

    # note --------------------------------------------------------------------
    note = nouns.add_parser("note", help="investigative notes").add_subparsers(dest="verb", required=True)
    p = note.add_parser("add", parents=[common])
    p.add_argument("--evidence", type=int, required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--author", default=None)
    p.add_argument("--offset", type=int, default=None)
    p.add_argument("--length", type=int, default=None)
    p = note.add_parser("list", parents=[common])
    p.add_argument("--evidence", type=int, required=True)

    # tool --------------------------------------------------------------------
    tool = nouns.add_parser("tool", help="external tools").add_subparsers(dest="verb", required=True)
    p = tool.add_parser("list", parents=[common])
    p.add_argument("--type", default=None, choices=[t.value for t in toolkit.ToolType])
    p.add_argument("--platform", default=None, choices=[pl.value for pl in toolkit.Platform])
    p.add_argument("--batch", action="store_true", help="only tools in the batch menu")
    p.add_argument("--right-click", action="store_true", help="only tools in the right-click menu")
    p = tool.add_parser("run", parents=[common])
    p.add_argument("--tool", required=True)
    p.add_argument("--evidence", type=int, required=True)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--timeout", type=int, default=toolkit.DEFAULT_TIMEOUT_S)

    # report -------------------------------------------------------------------
    report = nouns.add_parser("report", help="report generation").add_subparsers(dest="verb", required=True)
    p = report.add_parser("generate", parents=[common])
    p.add_argument("--case", type=int, required=True)
    p.add_argument("--format", default="html", choices=["latex", "html", "pdf"])
    p.add_argument("--title", default=None)
    p.add_argument("--summary", default=None)
    p.add_argument("--introduction", default=None)
    p.add_argument("--conclusion", default=None)
    p.add_argument("--evidence", type=int, action="append", default=None, help="repeatable; default all")
    p.add_argument("--excerpt", action="append", default=[], metavar="EID:OFFSET:LENGTH[:CAPTION]")
    p.add_argument("--no-notes", action="store_true")
    p.add_argument("--no-custody", action="store_true")
    p.add_argument("--latex-bin", default="pdflatex")

    # serve --------------------------------------------------------------------
    p = nouns.add_parser("serve", parents=[common], help="run the local HTTP service")
    p.add_argument("--bind", default="127.0.0.1:7806")
    p.add_argument("--ui-dir", default=None, help="static web UI directory to mount at /ui")
    p.add_argument("--latex-bin", default="pdflatex")

    return parser


def _open(args):
    store = open_store(args.data_root, args.adapter)
    log_path = args.log_file or str(Path(args.data_root) / DEFAULT_LOG_NAME)
    sink = open_log(log_path)
    return store, sink


def _emit(args, resource, human: str) -> None:
    if args.json:
        print(json.dumps(to_jsonable(resource), indent=2))
    else:
        print(human)


def _parse_params(pairs) -> dict:
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ValidationError(f"--param expects KEY=VALUE, got {pair!r}")
        params[key] = value
    return params


def _parse_excerpt(text: str) -> Excerpt:
    parts = text.split(":", 3)
    if len(parts) < 3:
        raise ValidationError(f"--excerpt expects EID:OFFSET:LENGTH[:CAPTION], got {text!r}")
    try:
        eid, offset, length = int(parts[0]), int(parts[1]), int(parts[2])
    except ValueError:
        raise ValidationError(f"--excerpt expects integer EID:OFFSET:LENGTH, got {text!r}") from None
    return Excerpt(evidence_id=eid, offset=offset, length=length,
                   caption=parts[3] if len(parts) == 4 else "")


def _run(args) -> int:
    if args.noun == "serve":
        start_service(ServiceConfig(
            bind_address=args.bind,
            data_root=args.data_root,
            tools_dir=args.tools_dir,
            principal=args.principal,
            adapter_kind=args.adapter,
            log_file=args.log_file,
            latex_bin=args.latex_bin,
            ui_dir=args.ui_dir,
        ))
        return EXIT_OK

    store, sink = _open(args)
    with store, sink:
        return _run_command(args, store, sink)


def _run_command(args, store, sink) -> int:
    noun, verb = args.noun, getattr(args, "verb", None)

    if noun == "case" and verb == "create":
        case = casework.create_case(store, args.title, args.investigator or args.principal)
        sink.log(f"cli: case {case.id} created ({case.title!r}) by {args.principal}")
        _emit(args, case, f"created case {case.id}: {case.title}")
        return EXIT_OK

    if noun == "case" and verb == "list":
        cases = list(casework.iter_cases(store))
        if args.json:
            print(json.dumps(to_jsonable(cases), indent=2))
        else:
            for c in cases:
                print(f"{c.id}\t{c.title}\t{c.investigator}\t{len(c.evidences)} evidence")
        return EXIT_OK

    if noun == "case" and verb == "show":
        case = casework.load_case(store, args.id)
        _emit(args, case,
              f"case {case.id}: {case.title} (investigator {case.investigator}, "
              f"{len(case.evidences)} evidence)")
        return EXIT_OK

    if noun == "case" and verb == "set-front":
        with store.lock_for(args.id):
            case = casework.load_case(store, args.id)
            casework.set_front_matter(store, case, args.summary, args.introduction, args.conclusion)
        sink.log(f"cli: case {case.id} front matter updated by {args.principal}")
        _emit(args, case, f"updated front matter of case {case.id}")
        return EXIT_OK

    if noun == "evidence" and verb == "import":
        with store.lock_for(args.case):
            case = casework.load_case(store, args.case)
            ev = casework.import_evidence(store, case, args.source, args.principal,
                                          original_name=args.name)
        sink.log(f"cli: evidence {ev.id} imported into case {case.id} from {args.source}")
        _emit(args, ev,
              f"imported evidence {ev.id}: {ev.original_name} "
              f"({ev.size_bytes} bytes, {ev.hash_algorithm} {ev.reference_hash})")
        return EXIT_OK

    if noun == "evidence" and verb == "list":
        case = casework.load_case(store, args.case)
        if args.json:
            print(json.dumps(to_jsonable(case.evidences), indent=2))
        else:
            for ev in case.evidences:
                print(f"{ev.id}\t{ev.original_name}\t{ev.size_bytes} bytes\t{ev.reference_hash}")
        return EXIT_OK

    if noun == "evidence" and verb == "show":
        _, ev = casework.find_evidence(store, args.id)
        _emit(args, ev,
              f"evidence {ev.id}: {ev.original_name} ({ev.size_bytes} bytes, "
              f"{ev.hash_algorithm} {ev.reference_hash}, case {ev.case_id})")
        return EXIT_OK

    if noun == "evidence" and verb == "verify":
        with casework.evidence_mutation(store, args.id) as (case, ev):
            result = casework.verify_evidence(store, case, ev, args.principal)
        sink.log(f"cli: evidence {ev.id} verified: {'ok' if result.ok else 'MISMATCH'}")
        if args.json:
            print(json.dumps(to_jsonable(result), indent=2))
        elif result.ok:
            print(f"ok {result.actual_hash}")
        else:
            print(f"MISMATCH expected={result.expected_hash} actual={result.actual_hash}")
        return EXIT_OK if result.ok else EXIT_INTEGRITY

    if noun == "evidence" and verb == "render":
        req = rendering.RenderRequest(format=args.format, offset=args.offset,
                                      length=args.length, encoding=args.encoding)
        with casework.evidence_mutation(store, args.id) as (case, ev):
            body = rendering.render(store.root_path, ev, req)
            casework.record_view(store, case, ev, args.principal,
                                 f"render format={args.format} offset={args.offset} length={args.length}")
        sink.log(f"cli: evidence {ev.id} rendered {args.format} {args.offset}+{args.length}")
        sys.stdout.write(body)
        return EXIT_OK

    if noun == "evidence" and verb == "extract":
        with casework.evidence_mutation(store, args.id) as (case, ev):
            child = casework.extract_region(store, case, ev, args.offset, args.length,
                                            args.name, args.principal)
        sink.log(f"cli: evidence {child.id} extracted from {ev.id} ({args.offset}+{args.length})")
        _emit(args, child,
              f"extracted evidence {child.id}: {child.original_name} "
              f"({child.size_bytes} bytes, {child.hash_algorithm} {child.reference_hash})")
        return EXIT_OK

    if noun == "evidence" and verb == "duplicate":
        with casework.evidence_mutation(store, args.id) as (case, ev):
            child = casework.duplicate_evidence(store, case, ev, args.name, args.principal)
        sink.log(f"cli: evidence {child.id} duplicated from {ev.id}")
        _emit(args, child,
              f"duplicated evidence {child.id}: {child.original_name} "
              f"({child.size_bytes} bytes, {child.hash_algorithm} {child.reference_hash})")
        return EXIT_OK

    if noun == "evidence" and verb == "custody":
        _, ev = casework.find_evidence(store, args.id)
        events = casework.list_custody(ev)
        if args.json:
            print(json.dumps(to_jsonable(events), indent=2))
        else:
            for e in events:
                print(f"{e.seq}\t{iso_utc_ms(e.timestamp)}\t{e.principal}\t{e.operation.value}\t{e.detail}")
        return EXIT_OK

    if noun == "note" and verb == "add":
        region = None
        if args.offset is not None or args.length is not None:
            if args.offset is None or args.length is None:
                raise ValidationError("note region needs both --offset and --length")
            region = Region(offset=args.offset, length=args.length)
        with casework.evidence_mutation(store, args.evidence) as (case, ev):
            note = casework.add_note(store, case, ev, args.author or args.principal,
                                     args.text, region)
        sink.log(f"cli: note {note.id} added to evidence {ev.id}")
        _emit(args, note, f"added note {note.id} to evidence {ev.id}")
        return EXIT_OK

    if noun == "note" and verb == "list":
        _, ev = casework.find_evidence(store, args.evidence)
        if args.json:
            print(json.dumps(to_jsonable(ev.notes), indent=2))
        else:
            for n in ev.notes:
                region = f" [{n.region.offset}+{n.region.length}]" if n.region else ""
                print(f"{n.id}\t{iso_utc_ms(n.created_at)}\t{n.author}{region}\t{n.text}")
        return EXIT_OK

    if noun == "tool" and verb == "list":
        manifests, diagnostics = toolkit.scan_tool_dir(args.tools_dir)
        registry = toolkit.ToolRegistry(manifests)
        for diag in diagnostics:
            sys.stderr.write(f"warning: {diag}\n")
        tools = toolkit.list_tools(
            registry,
            tool_type=toolkit.ToolType(args.type) if args.type else None,
            platform=toolkit.Platform(args.platform) if args.platform else None,
            in_batch_menu=True if args.batch else None,
            in_right_click_menu=True if args.right_click else None,
        )
        if args.json:
            print(json.dumps(to_jsonable(tools), indent=2))
        else:
            for m in tools:
                menus = ",".join(
                    name for flag, name in ((m.in_batch_menu, "batch"), (m.in_right_click_menu, "right-click"))
                    if flag
                ) or "-"
                print(f"{m.id}\t{m.friendly_name}\t{m.tool_type.value}\t{m.platform.value}\t{menus}")
        return EXIT_OK

    if noun == "tool" and verb == "run":
        manifests, diagnostics = toolkit.scan_tool_dir(args.tools_dir)
        registry = toolkit.ToolRegistry(manifests)
        for diag in diagnostics:
            sys.stderr.write(f"warning: {diag}\n")
        manifest = registry.lookup(args.tool)
        case, ev = casework.find_evidence(store, args.evidence)
        plan = toolkit.plan_invocation(manifest, ev, _parse_params(args.param),
                                       store.case_dir(case.id), timeout_s=args.timeout)
        result = toolkit.run_tool(store, plan, args.principal)
        sink.log(f"cli: tool {args.tool} ran on evidence {ev.id} exit={result.exit_code}")
        if args.json:
            print(json.dumps(to_jsonable(result), indent=2))
        else:
            verified = "ok" if result.post_verification.ok else "MISMATCH"
            print(f"exit={result.exit_code} verified={verified} "
                  f"output_evidence={result.output_evidence_id or '-'}")
            if result.stdout:
                sys.stdout.write(result.stdout)
        return EXIT_OK

    if noun == "report" and verb == "generate":
        with store.lock_for(args.case):
            case = casework.load_case(store, args.case)
            front = None
            if args.summary is not None or args.introduction is not None or args.conclusion is not None:
                front = FrontMatter(
                    executive_summary=args.summary or case.front_matter.executive_summary,
                    introduction=args.introduction or case.front_matter.introduction,
                    conclusion=args.conclusion or case.front_matter.conclusion,
                )
            spec = reporting.build_report_spec(
                store, case, args.principal,
                title=args.title,
                front_matter=front,
                include_evidence_ids=args.evidence,
                excerpts=[_parse_excerpt(e) for e in args.excerpt],
                include_notes=not args.no_notes,
                include_custody=not args.no_custody,
            )
        if args.format == "pdf":
            path = reporting.render_pdf(spec, case, store.root_path, latex_bin=args.latex_bin)
        else:
            path = reporting.write_report(store.root_path, spec, case, args.format)
        sink.log(f"cli: report for case {case.id} written to {path}")
        if args.json:
            print(json.dumps({"path": str(path), "format": args.format}, indent=2))
        else:
            print(str(path))
        return EXIT_OK

    raise ValidationError(f"unhandled command {noun} {verb}")


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageExit:
        return EXIT_VALIDATION
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    try:
        return _run(args)
    except (ValidationError, NotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except IntegrityError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INTEGRITY
    except (StorageError, ToolExecutionError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except FtklipseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
