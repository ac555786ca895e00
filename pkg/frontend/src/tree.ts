// Case/evidence tree model mirroring GET /cases.

import type { CaseJson, TreeNode } from "./types.js";

export function buildTree(cases: CaseJson[]): TreeNode {
  return {
    kind: "root",
    id: 0,
    label: "Cases",
    children: cases.map((c) => ({
      kind: "case",
      id: c.id,
      label: `${c.id}: ${c.title}`,
      children: c.evidences.map((ev) => ({
        kind: "evidence",
        id: ev.id,
        label: `${ev.id}: ${ev.original_name}`,
        children: [],
      })),
    })),
  };
}

export function findNode(root: TreeNode, kind: TreeNode["kind"], id: number): TreeNode | null {
  if (root.kind === kind && root.id === id) return root;
  for (const child of root.children) {
    const hit = findNode(child, kind, id);
    if (hit) return hit;
  }
  return null;
}

export function countLeaves(root: TreeNode): number {
  if (root.kind === "evidence") return 1;
  return root.children.reduce((acc, child) => acc + countLeaves(child), 0);
}
