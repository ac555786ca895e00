import { describe, expect, it } from "vitest";

import { buildTree, countLeaves, findNode } from "../src/tree.js";
import type { CaseJson, EvidenceJson } from "../src/types.js";

function evidence(id: number, caseId: number, name: string): EvidenceJson {
  return {
    id,
    case_id: caseId,
    original_name: name,
    managed_path: `${caseId}/${id}_${name}`,
    size_bytes: 10,
    hash_algorithm: "sha256",
    reference_hash: "0".repeat(64),
    imported_at: 0,
    parent_evidence_id: null,
    notes: [],
    custody: [],
  };
}

function makeCase(id: number, title: string, evidences: EvidenceJson[]): CaseJson {
  return {
    id,
    title,
    created_at: 0,
    investigator: "inv",
    evidences,
    front_matter: { executive_summary: "", introduction: "", conclusion: "" },
  };
}

describe("buildTree", () => {
  it("yields an empty tree under the root for an empty store", () => {
    const root = buildTree([]);
    expect(root.kind).toBe("root");
    expect(root.children).toEqual([]);
    expect(countLeaves(root)).toBe(0);
  });

  it("mirrors two cases with three evidences", () => {
    const root = buildTree([
      makeCase(1, "Alpha", [evidence(2, 1, "a.bin"), evidence(3, 1, "b.bin")]),
      makeCase(4, "Beta", [evidence(5, 4, "c.bin")]),
    ]);
    expect(root.children).toHaveLength(2);
    expect(root.children.map((n) => n.kind)).toEqual(["case", "case"]);
    expect(countLeaves(root)).toBe(3);
    expect(root.children[0].children.map((n) => n.label)).toEqual(["2: a.bin", "3: b.bin"]);
  });

  it("finds nodes by kind and id after a refresh adds a leaf", () => {
    const before = buildTree([makeCase(1, "Alpha", [evidence(2, 1, "a.bin")])]);
    expect(findNode(before, "evidence", 9)).toBeNull();
    const after = buildTree([
      makeCase(1, "Alpha", [evidence(2, 1, "a.bin"), evidence(9, 1, "new.bin")]),
    ]);
    const leaf = findNode(after, "evidence", 9);
    expect(leaf?.label).toBe("9: new.bin");
  });
});
