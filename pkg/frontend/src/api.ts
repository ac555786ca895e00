// Typed client over the service HTTP API. The UI is a pure client: every
// state change goes through here, never through local computation.

import type {
  CaseJson,
  EvidenceJson,
  ExcerptJson,
  FrontMatterJson,
  NoteJson,
  RegionJson,
  RenderFormat,
  RunRecordJson,
  ToolManifestJson,
  VerificationJson,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ReportRequest {
  format: "html" | "latex" | "pdf";
  title?: string;
  front_matter?: FrontMatterJson;
  include_evidence_ids?: number[];
  excerpts?: ExcerptJson[];
  include_notes?: boolean;
  include_custody?: boolean;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    private readonly principal: string | null = null,
  ) {}

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.principal) h["X-Principal"] = this.principal;
    return h;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let code = "internal";
      let message = `${resp.status} ${resp.statusText}`;
      try {
        const body = await resp.json();
        if (body?.error) {
          code = body.error.code ?? code;
          message = body.error.message ?? message;
        }
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(resp.status, code, message);
    }
    return resp;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    return (await this.request(path, init)).json() as Promise<T>;
  }

  health(): Promise<{ status: string }> {
    return this.json("/health");
  }

  listCases(): Promise<CaseJson[]> {
    return this.json("/cases");
  }

  getCase(caseId: number): Promise<CaseJson> {
    return this.json(`/cases/${caseId}`);
  }

  createCase(title: string, investigator = ""): Promise<CaseJson> {
    return this.json("/cases", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ title, investigator }),
    });
  }

  async uploadEvidence(caseId: number, filename: string, data: Blob): Promise<EvidenceJson> {
    const form = new FormData();
    form.append("file", data, filename);
    return this.json(`/cases/${caseId}/evidence`, {
      method: "POST",
      headers: this.headers(false),
      body: form,
    });
  }

  getEvidence(evidenceId: number): Promise<EvidenceJson> {
    return this.json(`/evidence/${evidenceId}`);
  }

  async render(
    evidenceId: number,
    format: RenderFormat,
    offset: number,
    length: number,
    encoding?: string,
  ): Promise<string> {
    const params = new URLSearchParams({
      format,
      offset: String(offset),
      length: String(length),
    });
    if (encoding) params.set("encoding", encoding);
    const resp = await this.request(`/evidence/${evidenceId}/render?${params}`, {
      headers: this.headers(false),
    });
    return resp.text();
  }

  verify(evidenceId: number): Promise<VerificationJson> {
    return this.json(`/evidence/${evidenceId}/verify`, {
      method: "POST",
      headers: this.headers(true),
      body: "{}",
    });
  }

  extract(evidenceId: number, offset: number, length: number, newName: string): Promise<EvidenceJson> {
    return this.json(`/evidence/${evidenceId}/extract`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ offset, length, new_name: newName }),
    });
  }

  duplicate(evidenceId: number, newName: string): Promise<EvidenceJson> {
    return this.json(`/evidence/${evidenceId}/duplicate`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ new_name: newName }),
    });
  }

  listNotes(evidenceId: number): Promise<NoteJson[]> {
    return this.json(`/evidence/${evidenceId}/notes`);
  }

  addNote(evidenceId: number, text: string, region?: RegionJson): Promise<NoteJson> {
    return this.json(`/evidence/${evidenceId}/notes`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(region ? { text, region } : { text }),
    });
  }

  listTools(): Promise<ToolManifestJson[]> {
    return this.json("/tools");
  }

  runTool(toolId: string, evidenceId: number, params: Record<string, string>, timeoutS?: number): Promise<{ run_id: string; status: string }> {
    const body: Record<string, unknown> = { evidence_id: evidenceId, params };
    if (timeoutS !== undefined) body.timeout_s = timeoutS;
    return this.json(`/tools/${encodeURIComponent(toolId)}/run`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(body),
    });
  }

  getRun(runId: string): Promise<RunRecordJson> {
    return this.json(`/runs/${runId}`);
  }

  async makeReport(caseId: number, req: ReportRequest): Promise<{ document: string; path: string | null }> {
    const resp = await this.request(`/cases/${caseId}/report`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(req),
    });
    return {
      document: await resp.text(),
      path: resp.headers.get("X-Report-Path"),
    };
  }
}
