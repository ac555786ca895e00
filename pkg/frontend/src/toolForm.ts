// Generic parameter dialog model rendered from a tool's param_form; one
// implementation serves every tool instead of per-tool dialog code.

import type { ParamKind, ToolManifestJson } from "./types.js";

export interface FormField {
  key: string;
  label: string;
  kind: ParamKind;
  value: string;
  required: boolean;
}

export interface ToolForm {
  toolId: string;
  title: string;
  fields: FormField[];
}

export function buildToolForm(manifest: ToolManifestJson): ToolForm {
  return {
    toolId: manifest.id,
    title: manifest.friendly_name,
    fields: manifest.param_form.map((spec) => ({
      key: spec.key,
      label: spec.label || spec.key,
      kind: spec.kind,
      value: spec.default ?? (spec.kind === "flag" ? "false" : ""),
      required: spec.default === null && spec.kind !== "flag",
    })),
  };
}

export function setField(form: ToolForm, key: string, value: string): void {
  const field = form.fields.find((f) => f.key === key);
  if (field) field.value = value;
}

/** Submit stays disabled while any required field is empty. */
export function isSubmittable(form: ToolForm): boolean {
  return form.fields.every((f) => !f.required || f.value.trim() !== "");
}

export function formParams(form: ToolForm): Record<string, string> {
  const params: Record<string, string> = {};
  for (const field of form.fields) {
    params[field.key] = field.value;
  }
  return params;
}
