/**
 * Browser glue: binds the pure render modules and the workspace session to
 * a host page. The host embeds its own document renderer inside #viewer;
 * this module captures text drags (and alt-drags for area highlights) in
 * rendered units and sends them through the API with the active viewport
 * transform. All curation semantics stay server-side.
 */

import { ApiClient } from "./api.js";
import { computePaperDrop, computeThreadDrop, DropZone } from "./dnd.js";
import { dragToRect, identityTransform, transformToWire, ViewportTransform } from "./geometry.js";
import { renderDrawer } from "./render/drawer.js";
import { renderOverview } from "./render/overview.js";
import { renderTank } from "./render/tank.js";
import { WorkspaceSession } from "./state.js";
import { OverviewNode } from "./types.js";

interface ReaderOptions {
  baseUrl: string;
  docId?: string;
  transform?: ViewportTransform;
}

export class ReaderApp {
  readonly api: ApiClient;
  readonly session: WorkspaceSession;
  private transform: ViewportTransform;
  private drag: { page: number; x: number; y: number } | null = null;

  constructor(
    private readonly root: HTMLElement,
    options: ReaderOptions,
  ) {
    this.api = new ApiClient(options.baseUrl);
    this.session = new WorkspaceSession(this.api);
    this.transform = options.transform ?? identityTransform(64);
    if (options.docId) this.session.state.docId = options.docId;
    this.session.onChange(() => this.renderSidebar());
  }

  async start(): Promise<void> {
    this.root.innerHTML = `
      <div class="reader">
        <div id="viewer" class="viewer"></div>
        <aside class="sidebar">
          <div id="conflict" class="conflict-notice" hidden></div>
          <div id="tank"></div>
          <div id="drawer"></div>
        </aside>
        <div id="overview" class="overview" hidden></div>
      </div>`;
    this.bindViewer();
    this.bindSidebar();
    await this.session.sync();
  }

  private slot(id: string): HTMLElement {
    return this.root.querySelector(`#${id}`) as HTMLElement;
  }

  private renderSidebar(): void {
    const state = this.session.state;
    this.slot("tank").innerHTML = renderTank(state.tank, state.suggestions);
    this.slot("drawer").innerHTML = renderDrawer(state.drawer, state.collapsed);
    const conflict = this.slot("conflict");
    conflict.hidden = state.conflictNotice === null;
    conflict.textContent = state.conflictNotice ?? "";
  }

  private bindViewer(): void {
    const viewer = this.slot("viewer");
    viewer.addEventListener("mousedown", (event) => {
      const bounds = viewer.getBoundingClientRect();
      this.drag = { page: this.pageAt(event), x: event.clientX - bounds.left, y: event.clientY - bounds.top };
    });
    viewer.addEventListener("mouseup", (event) => {
      if (!this.drag || !this.session.state.docId) return;
      const bounds = viewer.getBoundingClientRect();
      const rect = dragToRect(
        this.drag.page,
        this.drag.x,
        this.drag.y,
        event.clientX - bounds.left,
        event.clientY - bounds.top,
      );
      this.drag = null;
      if (rect.w < 2 && rect.h < 2) return;
      const kind = event.altKey ? "AREA" : "TEXT";
      void this.session
        .mutate((rev) =>
          this.api.highlight(rev, this.session.state.docId as string, kind, [rect], transformToWire(this.transform)),
        )
        .then((result) => {
          this.session.state.tank = result.tank;
          this.session.state.suggestions = result.suggestions;
          this.renderSidebar();
        });
    });
  }

  private pageAt(_event: MouseEvent): number {
    // Hosts with multi-page layouts override this to hit-test their pages.
    return 0;
  }

  private bindSidebar(): void {
    this.root.addEventListener("click", (event) => {
      const target = (event.target as HTMLElement).closest("[data-action]") as HTMLElement | null;
      if (!target) return;
      const action = target.dataset.action;
      const threadId = target.dataset.thread ?? null;
      if (action === "toggle" && threadId) this.session.toggleCollapsed(threadId);
      if (action === "discard-ref") void this.session.discardReference(Number(target.dataset.index));
      if (action === "restore-ref") void this.session.restoreReference(Number(target.dataset.index));
      if (action === "commit-new") {
        const input = this.root.querySelector(".selector-input") as HTMLInputElement | null;
        void this.session.commitNewThread(input?.value ?? "");
      }
      if (action === "commit-refs" && this.selectedTarget()) void this.session.commitRefsTo(this.selectedTarget() as string);
      if (action === "commit-clip" && this.selectedTarget()) void this.session.commitClipTo(this.selectedTarget() as string);
      if (action === "pick-suggestion" && threadId) {
        const input = this.root.querySelector(".selector-input") as HTMLInputElement | null;
        if (input) {
          input.value = threadId;
          input.dataset.target = threadId;
        }
      }
      if (action === "open-overview" && threadId) void this.openOverview(threadId);
      if (action === "refresh-recommendations" && threadId) {
        void this.api.refreshRecommendations(threadId).then(() => this.openOverview(threadId));
      }
    });

    this.root.addEventListener("dragstart", (event) => {
      const node = (event.target as HTMLElement).closest("[data-kind]") as HTMLElement | null;
      if (!node || !event.dataTransfer) return;
      event.dataTransfer.setData(
        "application/json",
        JSON.stringify({ kind: node.dataset.kind, thread: node.dataset.thread, paper: node.dataset.paper }),
      );
    });
    this.root.addEventListener("dragover", (event) => event.preventDefault());
    this.root.addEventListener("drop", (event) => {
      event.preventDefault();
      const raw = event.dataTransfer?.getData("application/json");
      if (!raw) return;
      const data = JSON.parse(raw) as { kind: string; thread?: string; paper?: string };
      const zoneNode = (event.target as HTMLElement).closest("[data-thread],[data-drop]") as HTMLElement | null;
      const zone: DropZone = zoneNode?.dataset.thread
        ? { kind: "thread", threadId: zoneNode.dataset.thread }
        : { kind: "root" };
      if (data.kind === "thread" && data.thread) {
        const intent = computeThreadDrop(this.session.state.drawer, data.thread, zone);
        if (intent) void this.session.moveThread(intent.threadId, intent.parent);
      }
      if (data.kind === "paper" && data.thread && data.paper && zone.kind === "thread") {
        const intent = computePaperDrop(data.thread, data.paper, zone);
        if (intent) {
          void this.session
            .mutate((rev) => this.api.movePaper(rev, intent.src, intent.paper, intent.dst))
            .then((result) => {
              this.session.state.drawer = result.drawer;
              this.renderSidebar();
            });
        }
      }
    });
  }

  private selectedTarget(): string | null {
    const input = this.root.querySelector(".selector-input") as HTMLInputElement | null;
    return input?.dataset.target ?? null;
  }

  private async openOverview(threadId: string): Promise<void> {
    const result = await this.api.overview(threadId);
    const panel = this.slot("overview");
    panel.hidden = false;
    panel.innerHTML = renderOverview(result.payload.overview as OverviewNode);
  }
}

export const mount = (selector: string, options: ReaderOptions): ReaderApp => {
  const root = document.querySelector(selector);
  if (!root) throw new Error(`no element matches ${selector}`);
  const app = new ReaderApp(root as HTMLElement, options);
  void app.start();
  return app;
};
