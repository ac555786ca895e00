// Central tabbed viewer state: one tab per open evidence, strictly
// read-only windows re-fetched from the service on every change.

import type { ApiClient } from "./api.js";
import type { EvidenceJson, RenderFormat } from "./types.js";

export const DEFAULT_WINDOW = 4096;

export interface ViewerTab {
  evidenceId: number;
  evidence: EvidenceJson;
  format: RenderFormat;
  encoding: string;
  window: { offset: number; length: number };
  pageSize: number;
  content: string;
  dirtyNotesDraft: string;
}

type RenderApi = Pick<ApiClient, "render" | "getEvidence">;

export class TabManager {
  tabs: ViewerTab[] = [];
  activeIndex: number | null = null;

  constructor(private readonly api: RenderApi) {}

  get active(): ViewerTab | null {
    return this.activeIndex === null ? null : this.tabs[this.activeIndex];
  }

  indexOf(evidenceId: number): number {
    return this.tabs.findIndex((t) => t.evidenceId === evidenceId);
  }

  /** Open (or focus) the tab for an evidence; new tabs show the first 4 KiB
   * as hex. */
  async open(evidenceId: number): Promise<ViewerTab> {
    const existing = this.indexOf(evidenceId);
    if (existing >= 0) {
      this.activeIndex = existing;
      return this.tabs[existing];
    }
    const evidence = await this.api.getEvidence(evidenceId);
    const length = Math.min(DEFAULT_WINDOW, evidence.size_bytes);
    const content = await this.api.render(evidenceId, "hex", 0, length);
    const tab: ViewerTab = {
      evidenceId,
      evidence,
      format: "hex",
      encoding: "utf-8",
      window: { offset: 0, length },
      pageSize: DEFAULT_WINDOW,
      content,
      dirtyNotesDraft: "",
    };
    this.tabs.push(tab);
    this.activeIndex = this.tabs.length - 1;
    return tab;
  }

  close(evidenceId: number): void {
    const idx = this.indexOf(evidenceId);
    if (idx < 0) return;
    this.tabs.splice(idx, 1);
    if (this.tabs.length === 0) this.activeIndex = null;
    else if (this.activeIndex !== null && this.activeIndex >= this.tabs.length) {
      this.activeIndex = this.tabs.length - 1;
    }
  }

  private async refetch(tab: ViewerTab): Promise<void> {
    tab.content = await this.api.render(
      tab.evidenceId,
      tab.format,
      tab.window.offset,
      tab.window.length,
      tab.format === "unicode" ? tab.encoding : undefined,
    );
  }

  /** Switch display format, re-rendering the same window. */
  async setFormat(tab: ViewerTab, format: RenderFormat, encoding?: string): Promise<void> {
    tab.format = format;
    if (encoding) tab.encoding = encoding;
    await this.refetch(tab);
  }

  /** Page forward (+1) or back (-1) on a fixed page grid, so a clamped
   * final window never shrinks later steps. */
  async page(tab: ViewerTab, direction: 1 | -1): Promise<void> {
    const size = tab.evidence.size_bytes;
    const step = tab.pageSize;
    const lastPage = size > 0 ? Math.floor((size - 1) / step) * step : 0;
    const offset = Math.max(0, Math.min(tab.window.offset + direction * step, lastPage));
    tab.window = { offset, length: Math.min(step, size - offset) };
    await this.refetch(tab);
  }
}
