"""Report specs and the format-keyed generator factory (LaTeX2e and HTML).

Generators are deterministic over (report spec, case snapshot): the
timestamp comes from the ReportSpec, never the wall clock, so identical
inputs yield byte-identical documents. Section order is fixed: title data, executive summary,
introduction, one section per included evidence (metadata, excerpt hex
printouts, notes, custody table), conclusion.

PDF is obtained by compiling the LaTeX output with an external toolchain
(`pdflatex` by default), in keeping with the external-tool philosophy.
"""

from __future__ import annotations

import html
import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from . import casework, rendering
from .casework import Case, Evidence, FrontMatter, Operation
from .datastore import StoreHandle
from .errors import (
    FtklipseError,
    GenerationError,
    ToolchainMissingError,
    UnsupportedFormatError,
    ValidationError,
)
from .util import compact_utc_ms, iso_utc_ms, utc_now_ms

REPORT_FORMATS = ("latex", "html")


@dataclass
class Excerpt:
    evidence_id: int
    offset: int
    length: int
    caption: str = ""


@dataclass
class ReportSpec:
    case_id: int
    title: str
    front_matter: FrontMatter
    include_evidence_ids: list[int]
    excerpts: list[Excerpt] = field(default_factory=list)
    include_notes: bool = True
    include_custody: bool = True
    generated_at: int = 0


def build_report_spec(
    store: StoreHandle,
    case: Case,
    principal: str,
    title: str | None = None,
    front_matter: FrontMatter | None = None,
    include_evidence_ids: list[int] | None = None,
    excerpts: list[Excerpt] | None = None,
    include_notes: bool = True,
    include_custody: bool = True,
    generated_at: int | None = None,
) -> ReportSpec:
    """Validate the selection and journal `exported_to_report` on each
    included evidence. include_evidence_ids=None selects every evidence."""
    by_id = {ev.id: ev for ev in case.evidences}
    if include_evidence_ids is None:
        include_evidence_ids = [ev.id for ev in case.evidences]
    for ev_id in include_evidence_ids:
        if ev_id not in by_id:
            raise ValidationError(f"case {case.id} has no evidence {ev_id}")
    included = set(include_evidence_ids)
    excerpts = list(excerpts or [])
    for ex in excerpts:
        ev = by_id.get(ex.evidence_id)
        if ev is None or ex.evidence_id not in included:
            raise ValidationError(f"excerpt references evidence {ex.evidence_id} not in the selection")
        if ex.offset < 0 or ex.length < 0 or ex.offset + ex.length > ev.size_bytes:
            raise ValidationError(
                f"excerpt {ex.offset}+{ex.length} out of range for evidence {ex.evidence_id} "
                f"of {ev.size_bytes} bytes"
            )
    spec = ReportSpec(
        case_id=case.id,
        title=title if title is not None else case.title,
        front_matter=front_matter if front_matter is not None else case.front_matter,
        include_evidence_ids=list(include_evidence_ids),
        excerpts=excerpts,
        include_notes=include_notes,
        include_custody=include_custody,
        generated_at=generated_at if generated_at is not None else utc_now_ms(),
    )
    with store.lock_for(case.id):
        for ev_id in include_evidence_ids:
            casework._append_custody(
                by_id[ev_id], principal, Operation.EXPORTED_TO_REPORT,
                f"report '{spec.title}'",
            )
        casework.save_case(store, case)
    return spec


# --- escaping -------------------------------------------------------------------

_LATEX_SPECIALS = {
    "\\": r"\textbackslash{}",
    "#": r"\#",
    "$": r"\$",
    "%": r"\%",
    "&": r"\&",
    "_": r"\_",
    "{": r"\{",
    "}": r"\}",
    "~": r"\textasciitilde{}",
    "^": r"\textasciicircum{}",
}


def latex_escape(text: str) -> str:
    # control characters other than newline/tab are unrepresentable in
    # LaTeX source and would abort compilation; they are dropped
    out = []
    for ch in text:
        if ch in _LATEX_SPECIALS:
            out.append(_LATEX_SPECIALS[ch])
        elif ch in ("\n", "\t") or ord(ch) >= 0x20:
            out.append(ch)
    return "".join(out)


def html_escape(text: str) -> str:
    return html.escape(text, quote=True)


# --- generators -----------------------------------------------------------------

def _included_evidences(spec: ReportSpec, case: Case) -> list[Evidence]:
    wanted = set(spec.include_evidence_ids)
    return [ev for ev in case.evidences if ev.id in wanted]


def _excerpt_dump(spec_excerpt: Excerpt, evidence: Evidence, data_root) -> str:
    try:
        data = rendering.slice_evidence(data_root, evidence, spec_excerpt.offset, spec_excerpt.length)
    except (FtklipseError, OSError) as exc:
        raise GenerationError(
            f"cannot read excerpt of evidence {evidence.id} ({evidence.original_name}): {exc}"
        ) from exc
    return rendering.render_hex(data, base_offset=spec_excerpt.offset)


def _note_overlaps(note, excerpts) -> bool:
    if note.region is None:
        return False
    for ex in excerpts:
        lo = max(note.region.offset, ex.offset)
        hi = min(note.region.offset + note.region.length, ex.offset + ex.length)
        if lo < hi:
            return True
    return False


class ReportGenerator:
    format_id = ""

    def generate(self, spec: ReportSpec, case: Case, data_root) -> str:
        raise NotImplementedError

    def file_extension(self) -> str:
        raise NotImplementedError


class LatexReportGenerator(ReportGenerator):
    format_id = "latex"

    def file_extension(self) -> str:
        return ".tex"

    def generate(self, spec: ReportSpec, case: Case, data_root) -> str:
        esc = latex_escape
        lines = [
            r"\documentclass{article}",
            r"\usepackage[T1]{fontenc}",
            r"\usepackage[utf8]{inputenc}",
            r"\begin{document}",
            r"\title{" + esc(spec.title) + "}",
            r"\author{" + esc(case.investigator) + "}",
            r"\date{" + esc(iso_utc_ms(spec.generated_at)) + "}",
            r"\maketitle",
            "",
            r"\section*{Executive Summary}",
            esc(spec.front_matter.executive_summary),
            "",
            r"\section*{Introduction}",
            esc(spec.front_matter.introduction),
            "",
        ]
        for ev in _included_evidences(spec, case):
            ev_excerpts = [ex for ex in spec.excerpts if ex.evidence_id == ev.id]
            lines += [
                r"\section{Evidence " + str(ev.id) + ": " + esc(ev.original_name) + "}",
                r"\begin{tabular}{ll}",
                r"Original name & " + esc(ev.original_name) + r" \\",
                r"Size (bytes) & " + str(ev.size_bytes) + r" \\",
                r"Hash algorithm & " + esc(ev.hash_algorithm) + r" \\",
                r"Digest & \texttt{" + esc(ev.reference_hash) + r"} \\",
                r"Imported & " + esc(iso_utc_ms(ev.imported_at)) + r" \\",
                r"\end{tabular}",
                "",
            ]
            for ex in ev_excerpts:
                caption = ex.caption or f"bytes {ex.offset}..{ex.offset + ex.length}"
                lines += [
                    r"\subsection*{Excerpt: " + esc(caption) + "}",
                    r"\begin{verbatim}",
                    _excerpt_dump(ex, ev, data_root).rstrip("\n"),
                    r"\end{verbatim}",
                    "",
                ]
            if spec.include_notes and ev.notes:
                lines.append(r"\subsection*{Notes}")
                lines.append(r"\begin{itemize}")
                for note in ev.notes:
                    region = ""
                    if note.region is not None:
                        region = f" [bytes {note.region.offset}..{note.region.offset + note.region.length}]"
                    flag = " (overlaps excerpt)" if _note_overlaps(note, ev_excerpts) else ""
                    lines.append(
                        r"\item " + esc(f"{note.author} at {iso_utc_ms(note.created_at)}{region}{flag}: {note.text}")
                    )
                lines.append(r"\end{itemize}")
                lines.append("")
            if spec.include_custody:
                lines += [
                    r"\subsection*{Chain of Custody}",
                    r"\begin{tabular}{llll}",
                    r"Principal & Timestamp & Operation & Detail \\",
                    r"\hline",
                ]
                for event in ev.custody:
                    lines.append(
                        esc(event.principal)
                        + " & " + iso_utc_ms(event.timestamp)
                        + " & " + esc(event.operation.value)
                        + " & " + esc(event.detail)
                        + r" \\"
                    )
                lines.append(r"\end{tabular}")
                lines.append("")
        lines += [
            r"\section*{Conclusion}",
            esc(spec.front_matter.conclusion),
            "",
            r"\end{document}",
            "",
        ]
        return "\n".join(lines)


class HtmlReportGenerator(ReportGenerator):
    format_id = "html"

    def file_extension(self) -> str:
        return ".html"

    def generate(self, spec: ReportSpec, case: Case, data_root) -> str:
        esc = html_escape
        parts = [
            "<!DOCTYPE html>",
            '<html lang="en"><head><meta charset="utf-8">',
            f"<title>{esc(spec.title)}</title>",
            "<style>",
            "body{font-family:sans-serif;margin:2rem;max-width:60rem}",
            "pre.hexdump{background:#f4f4f4;padding:0.5rem;overflow-x:auto}",
            "table{border-collapse:collapse}td,th{border:1px solid #999;padding:0.2rem 0.5rem;"
            "text-align:left;font-size:0.9rem}",
            "</style></head><body>",
            f"<h1>{esc(spec.title)}</h1>",
            f'<p class="meta">Investigator: {esc(case.investigator)} &middot; '
            f"Generated: {esc(iso_utc_ms(spec.generated_at))}</p>",
            "<h2>Executive Summary</h2>",
            f"<p>{esc(spec.front_matter.executive_summary)}</p>",
            "<h2>Introduction</h2>",
            f"<p>{esc(spec.front_matter.introduction)}</p>",
        ]
        for ev in _included_evidences(spec, case):
            ev_excerpts = [ex for ex in spec.excerpts if ex.evidence_id == ev.id]
            parts += [
                f'<section class="evidence" id="evidence-{ev.id}">',
                f"<h2>Evidence {ev.id}: {esc(ev.original_name)}</h2>",
                '<table class="metadata">',
                f"<tr><th>Original name</th><td>{esc(ev.original_name)}</td></tr>",
                f"<tr><th>Size (bytes)</th><td>{ev.size_bytes}</td></tr>",
                f"<tr><th>Hash algorithm</th><td>{esc(ev.hash_algorithm)}</td></tr>",
                f"<tr><th>Digest</th><td><code>{esc(ev.reference_hash)}</code></td></tr>",
                f"<tr><th>Imported</th><td>{esc(iso_utc_ms(ev.imported_at))}</td></tr>",
                "</table>",
            ]
            for ex in ev_excerpts:
                caption = ex.caption or f"bytes {ex.offset}..{ex.offset + ex.length}"
                parts += [
                    f"<h3>Excerpt: {esc(caption)}</h3>",
                    f'<pre class="hexdump">{esc(_excerpt_dump(ex, ev, data_root))}</pre>',
                ]
            if spec.include_notes and ev.notes:
                parts.append("<h3>Notes</h3><ul>")
                for note in ev.notes:
                    region = ""
                    if note.region is not None:
                        region = f" [bytes {note.region.offset}..{note.region.offset + note.region.length}]"
                    flag = " (overlaps excerpt)" if _note_overlaps(note, ev_excerpts) else ""
                    parts.append(
                        f"<li>{esc(note.author)} at {esc(iso_utc_ms(note.created_at))}"
                        f"{esc(region + flag)}: {esc(note.text)}</li>"
                    )
                parts.append("</ul>")
            if spec.include_custody:
                parts += [
                    "<h3>Chain of Custody</h3>",
                    '<table class="custody">',
                    "<tr><th>Principal</th><th>Timestamp</th><th>Operation</th><th>Detail</th></tr>",
                ]
                for event in ev.custody:
                    parts.append(
                        f'<tr class="custody-row"><td>{esc(event.principal)}</td>'
                        f"<td>{iso_utc_ms(event.timestamp)}</td>"
                        f"<td>{esc(event.operation.value)}</td>"
                        f"<td>{esc(event.detail)}</td></tr>"
                    )
                parts.append("</table>")
            parts.append("</section>")
        parts += [
            "<h2>Conclusion</h2>",
            f"<p>{esc(spec.front_matter.conclusion)}</p>",
            "</body></html>",
            "",
        ]
        return "\n".join(parts)


_GENERATORS = {
    "latex": LatexReportGenerator,
    "html": HtmlReportGenerator,
}


def generator_for(format_id: str) -> ReportGenerator:
    cls = _GENERATORS.get(format_id)
    if cls is None:
        raise UnsupportedFormatError(
            f"unsupported report format {format_id!r}; supported: {sorted(_GENERATORS)}"
        )
    return cls()


def generate(generator: ReportGenerator, spec: ReportSpec, case: Case, data_root) -> str:
    return generator.generate(spec, case, data_root)


def reports_dir(data_root, case_id: int) -> Path:
    return Path(data_root) / str(case_id) / "reports"


def write_report(data_root, spec: ReportSpec, case: Case, format_id: str) -> Path:
    """Generate and save under data/<case_id>/reports/<timestamp>.<ext>."""
    generator = generator_for(format_id)
    document = generator.generate(spec, case, data_root)
    out_dir = reports_dir(data_root, case.id)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / (compact_utc_ms(spec.generated_at) + generator.file_extension())
    path.write_text(document, encoding="utf-8")
    return path


def render_pdf(spec: ReportSpec, case: Case, data_root, latex_bin: str = "pdflatex") -> Path:
    """Compile the LaTeX report to PDF with an external toolchain.

    The .tex file is written regardless, so a missing toolchain degrades
    gracefully: the error names the install remedy and the LaTeX source
    remains available.
    """
    tex_path = write_report(data_root, spec, case, "latex")
    if shutil.which(latex_bin) is None:
        raise ToolchainMissingError(
            f"LaTeX toolchain {latex_bin!r} not found; install a LaTeX distribution "
            f"(e.g. TeX Live) or pass --latex-bin. LaTeX source written to {tex_path}"
        )
    proc = subprocess.run(
        [latex_bin, "-interaction=nonstopmode", "-halt-on-error", tex_path.name],
        cwd=tex_path.parent,
        capture_output=True,
        timeout=300,
    )
    pdf_path = tex_path.with_suffix(".pdf")
    if proc.returncode != 0 or not pdf_path.is_file():
        tail = proc.stdout.decode("utf-8", "replace")[-2000:]
        raise GenerationError(f"LaTeX compilation failed (exit {proc.returncode}): {tail}")
    return pdf_path
