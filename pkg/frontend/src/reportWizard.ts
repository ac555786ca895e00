// Report wizard state: front matter, evidence/excerpt selection, format.

import type { ApiClient, ReportRequest } from "./api.js";
import type { ByteRange, CaseJson, EvidenceJson, ExcerptJson, FrontMatterJson } from "./types.js";

export interface WizardState {
  caseId: number;
  title: string;
  frontMatter: FrontMatterJson;
  selected: number[];
  excerpts: ExcerptJson[];
  includeNotes: boolean;
  includeCustody: boolean;
  format: "html" | "latex" | "pdf";
}

/** Defaults: every evidence selected, case front matter prefilled. */
export function initWizard(c: CaseJson): WizardState {
  return {
    caseId: c.id,
    title: c.title,
    frontMatter: { ...c.front_matter },
    selected: c.evidences.map((ev) => ev.id),
    excerpts: [],
    includeNotes: true,
    includeCustody: true,
    format: "html",
  };
}

export function toggleEvidence(state: WizardState, evidenceId: number): void {
  const idx = state.selected.indexOf(evidenceId);
  if (idx >= 0) {
    state.selected.splice(idx, 1);
    state.excerpts = state.excerpts.filter((ex) => ex.evidence_id !== evidenceId);
  } else {
    state.selected.push(evidenceId);
    state.selected.sort((a, b) => a - b);
  }
}

/** Clamp a requested excerpt into the evidence bounds. */
export function clampExcerpt(evidence: EvidenceJson, offset: number, length: number): ByteRange {
  const size = evidence.size_bytes;
  const lo = Math.max(0, Math.min(offset, size));
  return { offset: lo, length: Math.max(0, Math.min(length, size - lo)) };
}

export function addExcerpt(
  state: WizardState,
  evidence: EvidenceJson,
  offset: number,
  length: number,
  caption = "",
): ExcerptJson {
  const clamped = clampExcerpt(evidence, offset, length);
  const excerpt: ExcerptJson = {
    evidence_id: evidence.id,
    offset: clamped.offset,
    length: clamped.length,
    caption,
  };
  state.excerpts.push(excerpt);
  return excerpt;
}

export function buildReportRequest(state: WizardState): ReportRequest {
  return {
    format: state.format,
    title: state.title,
    front_matter: state.frontMatter,
    include_evidence_ids: state.selected,
    excerpts: state.excerpts,
    include_notes: state.includeNotes,
    include_custody: state.includeCustody,
  };
}

export async function submitWizard(
  api: Pick<ApiClient, "makeReport">,
  state: WizardState,
): Promise<{ document: string; path: string | null }> {
  return api.makeReport(state.caseId, buildReportRequest(state));
}
