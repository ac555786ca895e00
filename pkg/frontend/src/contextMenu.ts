// Right-click menu model. The selection is captured when the menu is built
// and travels with it, so the action always operates on what was selected
// at menu-open time.

import type { ByteRange, ToolManifestJson, TreeNode } from "./types.js";

export interface SelectionContext {
  node: TreeNode | null;
  byteRange: ByteRange | null;
}

export type BuiltinAction = "verify" | "extract" | "duplicate" | "note";

export interface MenuItem {
  kind: "tool" | "action";
  id: string;
  label: string;
  tool?: ToolManifestJson;
  action?: BuiltinAction;
}

export interface ContextMenu {
  selection: SelectionContext;
  items: MenuItem[];
}

const BUILTIN: Array<[BuiltinAction, string]> = [
  ["verify", "Verify integrity"],
  ["extract", "Extract selection…"],
  ["duplicate", "Duplicate…"],
  ["note", "Add note…"],
];

export function buildContextMenu(
  selection: SelectionContext,
  tools: ToolManifestJson[],
  hostPlatform: "win" | "unix",
): ContextMenu | null {
  if (!selection.node || selection.node.kind !== "evidence") return null;
  const items: MenuItem[] = BUILTIN.map(([action, label]) => ({
    kind: "action",
    id: action,
    label,
    action,
  }));
  for (const tool of tools) {
    if (!tool.in_right_click_menu || tool.platform !== hostPlatform) continue;
    items.push({ kind: "tool", id: tool.id, label: tool.friendly_name, tool });
  }
  return { selection: { node: selection.node, byteRange: selection.byteRange }, items };
}
