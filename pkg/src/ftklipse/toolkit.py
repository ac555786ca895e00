"""Manifest-registered external tools: parsing, registry, planning, execution.

Tools are data, not code: one `*.tool` file per tool in a drop-in directory
(default `tools.d/` beside the data root). Grammar: UTF-8 `key = value`
lines, full-line `#` comments, booleans `true|false`, and repeated
`param = key|label|kind|default` lines building the parameter form.

Execution never goes through a shell; the command template is tokenized
once, placeholders are substituted within tokens, and argv is passed
verbatim. Every run ends with an embedded re-verification of the input
evidence and exactly one `tool_run` custody event, success or failure.
"""

from __future__ import annotations

import enum
import os
import re
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from . import casework
from .casework import Operation, VerificationResult
from .datastore import StoreHandle
from .errors import (
    ManifestError,
    NotFoundError,
    PlatformError,
    ToolLaunchError,
    ToolTimeoutError,
    ValidationError,
)
from .util import utc_now_ms

DEFAULT_TIMEOUT_S = 300
STREAM_CAP_BYTES = 10 * 1024 * 1024

TOOL_FILE_SUFFIX = ".tool"

_PLACEHOLDER = re.compile(r"\{([^{}]*)\}")
_FIXED_PLACEHOLDERS = ("evidence_path", "output_path", "case_dir")


class ToolType(str, enum.Enum):
    COLLECTION = "collection"
    ANALYSIS = "analysis"
    OTHER = "other"


class Platform(str, enum.Enum):
    WIN = "win"
    UNIX = "unix"


class ParamKind(str, enum.Enum):
    TEXT = "text"
    FLAG = "flag"
    PATH = "path"


@dataclass
class ParamSpec:
    key: str
    label: str
    kind: ParamKind
    default: str | None = None


@dataclass
class ToolManifest:
    id: str
    name: str
    friendly_name: str
    command_template: str
    platform: Platform
    tool_type: ToolType = ToolType.OTHER
    parameter: str | None = None
    output_file: str | None = None
    category: str | None = None
    in_batch_menu: bool = False
    in_right_click_menu: bool = False
    param_form: list[ParamSpec] = field(default_factory=list)


@dataclass
class InvocationPlan:
    tool_id: str
    argv: list[str]
    working_dir: str
    evidence_id: int
    output_path: str | None
    timeout_s: int


@dataclass
class ToolRunResult:
    exit_code: int
    stdout: str
    stderr: str
    started_at: int
    finished_at: int
    post_verification: VerificationResult
    output_evidence_id: int | None = None


# --- manifest parsing ----------------------------------------------------------

_BOOL_KEYS = ("in_batch_menu", "in_right_click_menu")
_TEXT_KEYS = ("id", "name", "friendly_name", "command", "type", "parameter",
              "output_file", "category", "platform")
_ALL_KEYS = set(_TEXT_KEYS) | set(_BOOL_KEYS) | {"param"}


def _parse_bool(key: str, value: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise ManifestError(f"field `{key}` must be true or false, got {value!r}")


def _parse_param(value: str) -> ParamSpec:
    parts = value.split("|")
    if len(parts) != 4:
        raise ManifestError(f"field `param` must be key|label|kind|default, got {value!r}")
    key, label, kind, default = (p.strip() for p in parts)
    if not key:
        raise ManifestError("field `param` has an empty key")
    try:
        kind_enum = ParamKind(kind)
    except ValueError:
        raise ManifestError(
            f"field `param` kind must be one of {[k.value for k in ParamKind]}, got {kind!r}"
        ) from None
    return ParamSpec(key=key, label=label, kind=kind_enum, default=default or None)


def _check_placeholders(template: str, *, param_keys: set[str], allowed: tuple[str, ...],
                        has_output_file: bool, where: str) -> None:
    for token in _PLACEHOLDER.findall(template):
        if token in allowed:
            if token == "output_path" and not has_output_file:
                raise ManifestError(
                    f"{where} references {{output_path}} but no output_file is declared"
                )
            continue
        if token.startswith("param:") and token[len("param:"):] in param_keys:
            continue
        raise ManifestError(f"unknown placeholder {{{token}}} in {where}")


def parse_manifest(text: str) -> ToolManifest:
    """Parse one manifest document; raises ManifestError naming the field."""
    values: dict[str, str] = {}
    params: list[ParamSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ManifestError(f"line {lineno}: expected `key = value`, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ManifestError(f"line {lineno}: unknown key `{key}`")
        if key == "param":
            params.append(_parse_param(value))
            continue
        if key in values:
            raise ManifestError(f"line {lineno}: duplicate key `{key}`")
        values[key] = value

    if not values.get("id"):
        raise ManifestError("missing required field `id`")
    if not values.get("command"):
        raise ManifestError("missing required field `command`")
    if "platform" not in values:
        raise ManifestError("missing required field `platform`")
    try:
        platform = Platform(values["platform"])
    except ValueError:
        raise ManifestError(
            f"field `platform` must be win or unix, got {values['platform']!r}"
        ) from None
    tool_type = ToolType.OTHER
    if "type" in values:
        try:
            tool_type = ToolType(values["type"])
        except ValueError:
            raise ManifestError(
                f"field `type` must be one of {[t.value for t in ToolType]}, got {values['type']!r}"
            ) from None

    param_keys = {p.key for p in params}
    if len(param_keys) != len(params):
        raise ManifestError("duplicate `param` keys")
    command = values["command"]
    output_file = values.get("output_file") or None
    _check_placeholders(
        command,
        param_keys=param_keys,
        allowed=_FIXED_PLACEHOLDERS,
        has_output_file=output_file is not None,
        where="command template",
    )
    if output_file:
        _check_placeholders(
            output_file, param_keys=param_keys, allowed=(), has_output_file=False,
            where="output_file template",
        )

    name = values.get("name") or values["id"]
    return ToolManifest(
        id=values["id"],
        name=name,
        friendly_name=values.get("friendly_name") or name,
        command_template=command,
        platform=platform,
        tool_type=tool_type,
        parameter=values.get("parameter") or None,
        output_file=output_file,
        category=values.get("category") or None,
        in_batch_menu=_parse_bool("in_batch_menu", values["in_batch_menu"]) if "in_batch_menu" in values else False,
        in_right_click_menu=_parse_bool("in_right_click_menu", values["in_right_click_menu"]) if "in_right_click_menu" in values else False,
        param_form=params,
    )


def scan_tool_dir(tools_dir) -> tuple[list[ToolManifest], list[str]]:
    """Parse every *.tool file in lexicographic filename order.

    Invalid manifests and duplicate ids are skipped and reported in the
    diagnostics list, never fatal. A missing directory yields an empty
    registry plus a warning diagnostic.
    """
    directory = Path(tools_dir)
    diagnostics: list[str] = []
    manifests: list[ToolManifest] = []
    if not directory.is_dir():
        diagnostics.append(f"tools directory not found: {directory}")
        return manifests, diagnostics
    seen: dict[str, str] = {}
    for path in sorted(directory.iterdir(), key=lambda p: p.name):
        if path.suffix != TOOL_FILE_SUFFIX or not path.is_file():
            continue
        try:
            manifest = parse_manifest(path.read_text(encoding="utf-8"))
        except (ManifestError, OSError, UnicodeDecodeError) as exc:
            diagnostics.append(f"{path.name}: {exc}")
            continue
        if manifest.id in seen:
            diagnostics.append(
                f"{path.name}: duplicate tool id {manifest.id!r} (first defined in {seen[manifest.id]}); skipped"
            )
            continue
        seen[manifest.id] = path.name
        manifests.append(manifest)
    return manifests, diagnostics


# --- registry ------------------------------------------------------------------

class ToolRegistry:
    """Immutable-after-startup map of tool id to manifest."""

    def __init__(self, manifests=()):
        self._tools: dict[str, ToolManifest] = {}
        for manifest in manifests:
            self.register(manifest)

    def register(self, manifest: ToolManifest) -> None:
        if manifest.id in self._tools:
            raise ManifestError(f"duplicate tool id {manifest.id!r}")
        self._tools[manifest.id] = manifest

    def lookup(self, tool_id: str) -> ToolManifest:
        try:
            return self._tools[tool_id]
        except KeyError:
            raise NotFoundError(f"no tool with id {tool_id!r}") from None

    def __len__(self):
        return len(self._tools)

    def __contains__(self, tool_id):
        return tool_id in self._tools

    def all(self) -> list[ToolManifest]:
        return list(self._tools.values())


def list_tools(
    registry: ToolRegistry,
    tool_type: ToolType | None = None,
    platform: Platform | None = None,
    in_batch_menu: bool | None = None,
    in_right_click_menu: bool | None = None,
) -> list[ToolManifest]:
    """Conjunction of the provided filters, ordered by friendly_name then id."""
    out = []
    for m in registry.all():
        if tool_type is not None and m.tool_type != tool_type:
            continue
        if platform is not None and m.platform != platform:
            continue
        if in_batch_menu is not None and m.in_batch_menu != in_batch_menu:
            continue
        if in_right_click_menu is not None and m.in_right_click_menu != in_right_click_menu:
            continue
        out.append(m)
    out.sort(key=lambda m: (m.friendly_name, m.id))
    return out


# --- planning and execution -----------------------------------------------------

def current_platform() -> Platform:
    if os.name == "nt":
        return Platform.WIN
    if os.name == "posix":
        return Platform.UNIX
    raise PlatformError(f"unsupported host platform {os.name!r}")


def _substitute(token: str, mapping: dict[str, str]) -> str:
    def repl(match):
        key = match.group(1)
        if key not in mapping:
            raise ManifestError(f"unknown placeholder {{{key}}}")
        return mapping[key]

    return _PLACEHOLDER.sub(repl, token)


def plan_invocation(
    manifest: ToolManifest,
    evidence,
    params: dict | None,
    case_dir,
    timeout_s: int = DEFAULT_TIMEOUT_S,
) -> InvocationPlan:
    """Resolve a manifest against one evidence into a concrete argv.

    Substituted paths are taken verbatim from `case_dir`; working_dir is the
    process cwd at plan time, so relative case dirs keep resolving the same
    way at run time.
    """
    host = current_platform()
    if manifest.platform != host:
        raise PlatformError(
            f"tool {manifest.id!r} targets {manifest.platform.value}, host is {host.value}"
        )
    params = dict(params or {})
    declared = {p.key for p in manifest.param_form}
    unknown = set(params) - declared
    if unknown:
        raise ValidationError(f"unknown parameters for tool {manifest.id!r}: {sorted(unknown)}")
    values: dict[str, str] = {}
    for spec in manifest.param_form:
        if spec.key in params:
            values[spec.key] = str(params[spec.key])
        elif spec.default is not None:
            values[spec.key] = spec.default
        else:
            raise ValidationError(f"missing required parameter {spec.key!r} for tool {manifest.id!r}")

    case_dir = Path(case_dir)
    mapping = {f"param:{k}": v for k, v in values.items()}
    mapping["case_dir"] = str(case_dir)
    mapping["evidence_path"] = str(case_dir / Path(evidence.managed_path).name)

    output_path = None
    if manifest.output_file:
        file_name = _substitute(manifest.output_file, mapping)
        output_path = str(case_dir / "tool_output" / file_name)
        mapping["output_path"] = output_path

    tokens = shlex.split(manifest.command_template)
    if not tokens:
        raise ManifestError(f"tool {manifest.id!r} has an empty command template")
    # substitution happens within pre-split tokens, so values never split or
    # merge argv elements; argv[0] names the executable (PATH-resolved at exec)
    argv = [_substitute(token, mapping) for token in tokens]
    return InvocationPlan(
        tool_id=manifest.id,
        argv=argv,
        working_dir=os.getcwd(),
        evidence_id=evidence.id,
        output_path=output_path,
        timeout_s=timeout_s,
    )


def _cap_stream(raw: bytes | None) -> tuple[str, bool]:
    data = raw or b""
    truncated = len(data) > STREAM_CAP_BYTES
    return data[:STREAM_CAP_BYTES].decode("utf-8", "replace"), truncated


def run_tool(store: StoreHandle, plan: InvocationPlan, principal: str) -> ToolRunResult:
    """Execute a planned invocation without a shell.

    Appends exactly one `tool_run` custody event with an embedded post-run
    verification, whatever the outcome. A declared output file produced by
    a completed run is imported as child evidence of the input. Non-zero
    exit is a recorded result, not an error; launch failures and timeouts
    raise after the custody event is journalled.
    """
    _, evidence = casework.find_evidence(store, plan.evidence_id)
    if plan.output_path:
        Path(plan.output_path).parent.mkdir(parents=True, exist_ok=True)

    started_at = utc_now_ms()
    failure: str | None = None
    exit_code = -1
    raw_out: bytes | None = b""
    raw_err: bytes | None = b""
    try:
        proc = subprocess.run(
            plan.argv,
            cwd=plan.working_dir,
            capture_output=True,
            timeout=plan.timeout_s,
        )
        exit_code = proc.returncode
        raw_out, raw_err = proc.stdout, proc.stderr
    except subprocess.TimeoutExpired as exc:
        failure = "timeout"
        raw_out, raw_err = exc.stdout, exc.stderr
    except (FileNotFoundError, NotADirectoryError, PermissionError) as exc:
        failure = f"launch failed: {exc}"
    finished_at = max(utc_now_ms(), started_at)

    stdout, out_trunc = _cap_stream(raw_out)
    stderr, err_trunc = _cap_stream(raw_err)
    post = casework.check_integrity(store, evidence)

    detail = f"tool={plan.tool_id} exit={exit_code} output={plan.output_path or '-'}"
    if failure:
        detail += f" {failure}"
    if out_trunc:
        detail += " stdout-truncated"
    if err_trunc:
        detail += " stderr-truncated"
    output_evidence_id = None
    # reload under the case lock: the pre-run snapshot may be stale after a
    # long-running subprocess
    with casework.evidence_mutation(store, plan.evidence_id) as (case, evidence):
        casework._append_custody(evidence, principal, Operation.TOOL_RUN, detail)
        casework.save_case(store, case)
        if failure is None and plan.output_path and Path(plan.output_path).is_file():
            child = casework.import_evidence(
                store,
                case,
                plan.output_path,
                principal,
                parent_evidence_id=evidence.id,
                source_label=f"tool_output:{plan.tool_id}:{plan.output_path}",
            )
            output_evidence_id = child.id

    result = ToolRunResult(
        exit_code=exit_code,
        stdout=stdout,
        stderr=stderr,
        started_at=started_at,
        finished_at=finished_at,
        post_verification=post,
        output_evidence_id=output_evidence_id,
    )
    if failure == "timeout":
        raise ToolTimeoutError(
            f"tool {plan.tool_id!r} timed out after {plan.timeout_s}s", result=result
        )
    if failure is not None:
        raise ToolLaunchError(f"tool {plan.tool_id!r} {failure}", result=result)
    return result
