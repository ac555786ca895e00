// DOM wiring for the workbench: menu bar on top, case/evidence tree on the
// left, tabbed viewer in the centre. All state changes round-trip through
// the service API; this layer only renders what the model modules return.

import { ApiClient, ApiError } from "./api.js";
import { buildContextMenu, ContextMenu, SelectionContext } from "./contextMenu.js";
import { pollRun, verificationBadge } from "./runPoller.js";
import { selectionToRange } from "./selection.js";
import { TabManager, ViewerTab } from "./tabs.js";
import { buildToolForm, formParams, isSubmittable, setField, ToolForm } from "./toolForm.js";
import { buildTree } from "./tree.js";
import {
  addExcerpt,
  initWizard,
  submitWizard,
  toggleEvidence,
  WizardState,
} from "./reportWizard.js";
import type { ByteRange, CaseJson, RenderFormat, ToolManifestJson, TreeNode } from "./types.js";

const HOST_PLATFORM = "unix" as const; // the service only plans host-matching tools anyway

const api = new ApiClient("");
const tabs = new TabManager(api);

let cases: CaseJson[] = [];
let tools: ToolManifestJson[] = [];
let selectedNode: TreeNode | null = null;
let byteSelection: ByteRange | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function toast(message: string, isError = true): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = message;
  banner.className = isError ? "banner error" : "banner info";
  banner.hidden = false;
  setTimeout(() => {
    banner.hidden = true;
  }, 6000);
}

async function guard<T>(work: () => Promise<T>): Promise<T | null> {
  try {
    return await work();
  } catch (err) {
    if (err instanceof ApiError) toast(`${err.code}: ${err.message}`);
    else toast(`service unreachable: ${String(err)}`);
    return null;
  }
}

// --- tree -----------------------------------------------------------------

async function refreshTree(): Promise<void> {
  const listing = await guard(() => api.listCases());
  if (listing === null) return;
  cases = listing;
  const root = buildTree(cases);
  const container = el<HTMLUListElement>("tree");
  container.innerHTML = "";
  for (const caseNode of root.children) {
    container.appendChild(renderNode(caseNode));
  }
}

function renderNode(node: TreeNode): HTMLLIElement {
  const li = document.createElement("li");
  const label = document.createElement("span");
  label.textContent = node.label;
  label.className = `node ${node.kind}`;
  label.addEventListener("click", () => {
    document.querySelectorAll(".node.selected").forEach((n) => n.classList.remove("selected"));
    label.classList.add("selected");
    selectedNode = node;
    byteSelection = null;
    if (node.kind === "evidence") {
      void guard(() => openEvidence(node.id));
    }
  });
  label.addEventListener("contextmenu", (event) => {
    event.preventDefault();
    selectedNode = node;
    showContextMenu(event.pageX, event.pageY, {
      node,
      byteRange: byteSelection,
    });
  });
  li.appendChild(label);
  if (node.children.length > 0) {
    const ul = document.createElement("ul");
    for (const child of node.children) ul.appendChild(renderNode(child));
    li.appendChild(ul);
  }
  return li;
}

// --- tabs -----------------------------------------------------------------

async function openEvidence(evidenceId: number): Promise<void> {
  await tabs.open(evidenceId);
  renderTabs();
}

function renderTabs(): void {
  const bar = el<HTMLDivElement>("tab-bar");
  bar.innerHTML = "";
  tabs.tabs.forEach((tab, index) => {
    const button = document.createElement("button");
    button.textContent = `${tab.evidenceId}: ${tab.evidence.original_name}`;
    button.className = index === tabs.activeIndex ? "tab active" : "tab";
    button.addEventListener("click", () => {
      tabs.activeIndex = index;
      renderTabs();
    });
    const close = document.createElement("span");
    close.textContent = " ×";
    close.addEventListener("click", (event) => {
      event.stopPropagation();
      tabs.close(tab.evidenceId);
      renderTabs();
    });
    button.appendChild(close);
    bar.appendChild(button);
  });
  renderActiveTab();
}

function renderActiveTab(): void {
  const panel = el<HTMLDivElement>("tab-panel");
  const tab = tabs.active;
  if (!tab) {
    panel.innerHTML = '<p class="placeholder">Open an evidence from the tree.</p>';
    return;
  }
  panel.innerHTML = "";
  const controls = document.createElement("div");
  controls.className = "viewer-controls";

  const format = document.createElement("select");
  for (const value of ["hex", "ascii", "unicode"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    option.selected = tab.format === value;
    format.appendChild(option);
  }
  format.addEventListener("change", () => {
    void guard(async () => {
      await tabs.setFormat(tab, format.value as RenderFormat, "utf-8");
      renderActiveTab();
    });
  });
  controls.appendChild(format);

  const pager = (labelText: string, direction: 1 | -1) => {
    const button = document.createElement("button");
    button.textContent = labelText;
    button.addEventListener("click", () => {
      void guard(async () => {
        await tabs.page(tab, direction);
        renderActiveTab();
      });
    });
    controls.appendChild(button);
  };
  pager("◀ prev", -1);
  pager("next ▶", 1);

  const windowInfo = document.createElement("span");
  windowInfo.className = "window-info";
  windowInfo.textContent =
    `bytes ${tab.window.offset}–${tab.window.offset + tab.window.length}` +
    ` of ${tab.evidence.size_bytes} · ${tab.evidence.hash_algorithm} ${tab.evidence.reference_hash.slice(0, 16)}…`;
  controls.appendChild(windowInfo);
  panel.appendChild(controls);

  const pre = document.createElement("pre");
  pre.className = "viewer";
  pre.textContent = tab.content;
  if (tab.format === "hex") {
    pre.addEventListener("mouseup", () => {
      const selection = document.getSelection();
      if (!selection || selection.rangeCount === 0 || selection.isCollapsed) return;
      const range = selection.getRangeAt(0);
      if (!pre.contains(range.startContainer) || !pre.contains(range.endContainer)) return;
      const picked = selectionToRange(tab.content, range.startOffset, Math.max(range.startOffset, range.endOffset - 1));
      if (picked) {
        byteSelection = { offset: tab.window.offset + picked.offset, length: picked.length };
        toast(`selected bytes ${byteSelection.offset}–${byteSelection.offset + byteSelection.length}`, false);
      }
    });
  }
  panel.appendChild(pre);

  const notes = document.createElement("div");
  notes.className = "notes";
  const heading = document.createElement("h3");
  heading.textContent = "Notes";
  notes.appendChild(heading);
  const list = document.createElement("ul");
  for (const note of tab.evidence.notes) {
    const item = document.createElement("li");
    const region = note.region ? ` [bytes ${note.region.offset}–${note.region.offset + note.region.length}]` : "";
    item.textContent = `${note.author}${region}: ${note.text}`;
    list.appendChild(item);
  }
  notes.appendChild(list);
  const draft = document.createElement("textarea");
  draft.placeholder = "New note (uses current byte selection when present)";
  draft.value = tab.dirtyNotesDraft;
  draft.addEventListener("input", () => {
    tab.dirtyNotesDraft = draft.value;
  });
  const save = document.createElement("button");
  save.textContent = "Add note";
  save.addEventListener("click", () => {
    if (!draft.value.trim()) return;
    void guard(async () => {
      await api.addNote(tab.evidenceId, draft.value, byteSelection ?? undefined);
      tab.dirtyNotesDraft = "";
      tab.evidence = await api.getEvidence(tab.evidenceId);
      renderActiveTab();
    });
  });
  notes.appendChild(draft);
  notes.appendChild(save);
  panel.appendChild(notes);
}

// --- context menu ------------------------------------------------------------

function showContextMenu(x: number, y: number, selection: SelectionContext): void {
  const menu = buildContextMenu(selection, tools, HOST_PLATFORM);
  const host = el<HTMLDivElement>("context-menu");
  host.innerHTML = "";
  if (!menu) {
    host.hidden = true;
    return;
  }
  for (const item of menu.items) {
    const entry = document.createElement("div");
    entry.className = "menu-item";
    entry.textContent = item.label;
    entry.addEventListener("click", () => {
      host.hidden = true;
      void runMenuItem(menu, item.id);
    });
    host.appendChild(entry);
  }
  host.style.left = `${x}px`;
  host.style.top = `${y}px`;
  host.hidden = false;
}

async function runMenuItem(menu: ContextMenu, itemId: string): Promise<void> {
  const node = menu.selection.node;
  if (!node) return;
  const evidenceId = node.id;
  const item = menu.items.find((i) => i.id === itemId);
  if (!item) return;

  if (item.kind === "tool" && item.tool) {
    openToolDialog(item.tool, evidenceId);
    return;
  }
  switch (item.action) {
    case "verify": {
      const result = await guard(() => api.verify(evidenceId));
      if (result) toast(result.ok ? `verified ok (${result.actual_hash.slice(0, 16)}…)` : "verification MISMATCH", !result.ok);
      break;
    }
    case "duplicate": {
      const name = window.prompt("Name for the copy:", "copy.bin");
      if (!name) return;
      if (await guard(() => api.duplicate(evidenceId, name))) {
        toast("duplicated", false);
        await refreshTree();
      }
      break;
    }
    case "extract": {
      const range = menu.selection.byteRange;
      const offset = range ? range.offset : Number(window.prompt("Offset:", "0") ?? NaN);
      const length = range ? range.length : Number(window.prompt("Length:", "16") ?? NaN);
      if (!Number.isFinite(offset) || !Number.isFinite(length)) return;
      const name = window.prompt("Name for the extracted file:", "extract.bin");
      if (!name) return;
      if (await guard(() => api.extract(evidenceId, offset, length, name))) {
        toast("extracted", false);
        await refreshTree();
      }
      break;
    }
    case "note": {
      const text = window.prompt("Note text:");
      if (!text) return;
      if (await guard(() => api.addNote(evidenceId, text, menu.selection.byteRange ?? undefined))) {
        toast("note added", false);
      }
      break;
    }
  }
}

// --- tool dialog ----------------------------------------------------------------

function openToolDialog(tool: ToolManifestJson, evidenceId: number): void {
  const dialog = el<HTMLDialogElement>("tool-dialog");
  const form = buildToolForm(tool);
  const body = el<HTMLDivElement>("tool-dialog-body");
  body.innerHTML = "";
  const title = el<HTMLElement>("tool-dialog-title");
  title.textContent = `${form.title} on evidence ${evidenceId}`;

  const submit = el<HTMLButtonElement>("tool-dialog-run");
  const refreshSubmit = () => {
    submit.disabled = !isSubmittable(form);
  };
  for (const field of form.fields) {
    const row = document.createElement("label");
    row.className = "form-row";
    row.textContent = field.label + (field.required ? " *" : "");
    let input: HTMLInputElement;
    if (field.kind === "flag") {
      input = document.createElement("input");
      input.type = "checkbox";
      input.checked = field.value === "true";
      input.addEventListener("change", () => {
        setField(form, field.key, input.checked ? "true" : "false");
        refreshSubmit();
      });
    } else {
      input = document.createElement("input");
      input.type = "text";
      input.value = field.value;
      input.placeholder = field.kind === "path" ? "path…" : "";
      input.addEventListener("input", () => {
        setField(form, field.key, input.value);
        refreshSubmit();
      });
    }
    row.appendChild(input);
    body.appendChild(row);
  }
  refreshSubmit();

  const output = el<HTMLPreElement>("tool-dialog-output");
  output.textContent = "";
  el<HTMLSpanElement>("tool-dialog-badge").className = "badge";
  el<HTMLSpanElement>("tool-dialog-badge").textContent = "";

  submit.onclick = () => {
    void runTool(form, evidenceId);
  };
  dialog.showModal();
}

async function runTool(form: ToolForm, evidenceId: number): Promise<void> {
  const output = el<HTMLPreElement>("tool-dialog-output");
  const badge = el<HTMLSpanElement>("tool-dialog-badge");
  output.textContent = "running…";
  const submission = await guard(() => api.runTool(form.toolId, evidenceId, formParams(form)));
  if (!submission) {
    output.textContent = "";
    return;
  }
  const record = await guard(() => pollRun(api, submission.run_id, { intervalMs: 1000 }));
  if (!record) return;
  const result = record.result;
  if (record.status === "error" && record.error) {
    output.textContent = `${record.error.code}: ${record.error.message}\n`;
  } else {
    output.textContent = "";
  }
  if (result) {
    output.textContent +=
      `exit ${result.exit_code}\n--- stdout ---\n${result.stdout}\n--- stderr ---\n${result.stderr}`;
  }
  const state = verificationBadge(record);
  badge.textContent =
    state === "ok" ? "post-run verification: ok" :
    state === "mismatch" ? "post-run verification: MISMATCH" : "post-run verification: unknown";
  badge.className = `badge ${state}`;
  await refreshTree();
}

// --- report wizard -----------------------------------------------------------------

let wizard: WizardState | null = null;

function openReportWizard(c: CaseJson): void {
  wizard = initWizard(c);
  const dialog = el<HTMLDialogElement>("report-dialog");
  el<HTMLElement>("report-dialog-title").textContent = `Report for case ${c.id}: ${c.title}`;
  const body = el<HTMLDivElement>("report-dialog-body");
  body.innerHTML = "";

  const text = (labelText: string, value: string, apply: (v: string) => void, multiline = false) => {
    const row = document.createElement("label");
    row.className = "form-row";
    row.textContent = labelText;
    const input = multiline ? document.createElement("textarea") : document.createElement("input");
    input.value = value;
    input.addEventListener("input", () => apply(input.value));
    row.appendChild(input);
    body.appendChild(row);
  };
  const state = wizard;
  text("Title", state.title, (v) => (state.title = v));
  text("Executive summary", state.frontMatter.executive_summary,
    (v) => (state.frontMatter.executive_summary = v), true);
  text("Introduction", state.frontMatter.introduction,
    (v) => (state.frontMatter.introduction = v), true);
  text("Conclusion", state.frontMatter.conclusion,
    (v) => (state.frontMatter.conclusion = v), true);

  const evidenceHeading = document.createElement("h4");
  evidenceHeading.textContent = "Evidence to include";
  body.appendChild(evidenceHeading);
  for (const ev of c.evidences) {
    const row = document.createElement("label");
    row.className = "check-row";
    const check = document.createElement("input");
    check.type = "checkbox";
    check.checked = state.selected.includes(ev.id);
    check.addEventListener("change", () => toggleEvidence(state, ev.id));
    row.appendChild(check);
    row.appendChild(document.createTextNode(` ${ev.id}: ${ev.original_name} (${ev.size_bytes} bytes)`));
    body.appendChild(row);

    if (byteSelection && tabs.active?.evidenceId === ev.id) {
      const excerptButton = document.createElement("button");
      excerptButton.textContent = `add excerpt from selection (${byteSelection.offset}+${byteSelection.length})`;
      excerptButton.addEventListener("click", (event) => {
        event.preventDefault();
        addExcerpt(state, ev, byteSelection!.offset, byteSelection!.length, "selection");
        excerptButton.disabled = true;
      });
      body.appendChild(excerptButton);
    }
  }

  const flags = document.createElement("div");
  for (const [labelText, key] of [["include notes", "includeNotes"], ["include custody", "includeCustody"]] as const) {
    const row = document.createElement("label");
    row.className = "check-row";
    const check = document.createElement("input");
    check.type = "checkbox";
    check.checked = state[key];
    check.addEventListener("change", () => {
      state[key] = check.checked;
    });
    row.appendChild(check);
    row.appendChild(document.createTextNode(` ${labelText}`));
    flags.appendChild(row);
  }
  body.appendChild(flags);

  const format = document.createElement("select");
  for (const value of ["html", "latex", "pdf"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    format.appendChild(option);
  }
  format.addEventListener("change", () => {
    state.format = format.value as WizardState["format"];
  });
  body.appendChild(format);

  dialog.showModal();
}

async function downloadReport(): Promise<void> {
  if (!wizard) return;
  const state = wizard;
  const result = await guard(() => submitWizard(api, state));
  if (!result) return;
  const extension = state.format === "latex" ? "tex" : state.format;
  const blob = new Blob([result.document], {
    type: state.format === "html" ? "text/html" : "application/octet-stream",
  });
  const anchor = document.createElement("a");
  anchor.href = URL.createObjectURL(blob);
  anchor.download = `case_${state.caseId}_report.${extension}`;
  anchor.click();
  URL.revokeObjectURL(anchor.href);
  if (state.format === "html") {
    const preview = el<HTMLIFrameElement>("report-preview");
    preview.srcdoc = result.document;
    preview.hidden = false;
  }
  toast(result.path ? `report saved server-side at ${result.path}` : "report generated", false);
}

// --- menu bar ---------------------------------------------------------------------

function wireMenuBar(): void {
  el<HTMLButtonElement>("menu-new-case").addEventListener("click", () => {
    const title = window.prompt("Case title:");
    if (!title) return;
    void guard(async () => {
      await api.createCase(title);
      await refreshTree();
    });
  });

  const fileInput = el<HTMLInputElement>("import-file");
  el<HTMLButtonElement>("menu-import").addEventListener("click", () => {
    if (!selectedNode || selectedNode.kind !== "case") {
      toast("select a case in the tree first");
      return;
    }
    fileInput.click();
  });
  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (!file || !selectedNode || selectedNode.kind !== "case") return;
    const caseId = selectedNode.id;
    void guard(async () => {
      await api.uploadEvidence(caseId, file.name, file);
      await refreshTree();
      toast(`imported ${file.name}`, false);
    });
    fileInput.value = "";
  });

  el<HTMLButtonElement>("menu-refresh").addEventListener("click", () => {
    void refreshTree();
  });

  el<HTMLButtonElement>("menu-report").addEventListener("click", () => {
    const caseNode = selectedNode?.kind === "case"
      ? selectedNode
      : null;
    const caseId = caseNode?.id ?? tabs.active?.evidence.case_id;
    const c = cases.find((x) => x.id === caseId);
    if (!c) {
      toast("select a case (or open one of its evidences) first");
      return;
    }
    void guard(async () => {
      openReportWizard(await api.getCase(c.id));
    });
  });

  el<HTMLButtonElement>("report-dialog-download").addEventListener("click", (event) => {
    event.preventDefault();
    void downloadReport();
  });

  document.addEventListener("click", (event) => {
    const menu = el<HTMLDivElement>("context-menu");
    if (!menu.hidden && !(event.target instanceof Node && menu.contains(event.target))) {
      menu.hidden = true;
    }
  });
}

async function boot(): Promise<void> {
  wireMenuBar();
  const health = await guard(() => api.health());
  if (health === null) return;
  tools = (await guard(() => api.listTools())) ?? [];
  await refreshTree();
  renderTabs();
}

void boot();
