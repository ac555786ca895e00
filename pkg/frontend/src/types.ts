// JSON shapes returned by the service endpoints.

export interface RegionJson {
  offset: number;
  length: number;
}

export interface NoteJson {
  id: number;
  author: string;
  created_at: number;
  text: string;
  region: RegionJson | null;
}

export interface CustodyEventJson {
  seq: number;
  principal: string;
  timestamp: number;
  operation: string;
  detail: string;
}

export interface EvidenceJson {
  id: number;
  case_id: number;
  original_name: string;
  managed_path: string;
  size_bytes: number;
  hash_algorithm: string;
  reference_hash: string;
  imported_at: number;
  parent_evidence_id: number | null;
  notes: NoteJson[];
  custody: CustodyEventJson[];
}

export interface FrontMatterJson {
  executive_summary: string;
  introduction: string;
  conclusion: string;
}

export interface CaseJson {
  id: number;
  title: string;
  created_at: number;
  investigator: string;
  evidences: EvidenceJson[];
  front_matter: FrontMatterJson;
}

export type ParamKind = "text" | "flag" | "path";

export interface ParamSpecJson {
  key: string;
  label: string;
  kind: ParamKind;
  default: string | null;
}

export interface ToolManifestJson {
  id: string;
  name: string;
  friendly_name: string;
  command_template: string;
  platform: "win" | "unix";
  tool_type: "collection" | "analysis" | "other";
  parameter: string | null;
  output_file: string | null;
  category: string | null;
  in_batch_menu: boolean;
  in_right_click_menu: boolean;
  param_form: ParamSpecJson[];
}

export interface VerificationJson {
  ok: boolean;
  expected_hash: string;
  actual_hash: string;
  checked_at: number;
}

export interface ToolRunResultJson {
  exit_code: number;
  stdout: string;
  stderr: string;
  started_at: number;
  finished_at: number;
  post_verification: VerificationJson;
  output_evidence_id: number | null;
}

export interface RunRecordJson {
  run_id: string;
  tool_id: string;
  evidence_id: number;
  status: "running" | "done" | "error";
  created_at: number;
  result: ToolRunResultJson | null;
  error: { code: string; message: string } | null;
}

export type RenderFormat = "hex" | "ascii" | "unicode";

export interface ExcerptJson {
  evidence_id: number;
  offset: number;
  length: number;
  caption: string;
}

// Client-side models.

export interface TreeNode {
  kind: "root" | "case" | "evidence";
  id: number;
  label: string;
  children: TreeNode[];
}

export interface ByteRange {
  offset: number;
  length: number;
}
