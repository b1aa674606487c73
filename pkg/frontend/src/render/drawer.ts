/**
 * Thread drawer: colored dots with nested counts, document-icon paper
 * cards, clip counters, drag-and-drop attributes, and the current-paper
 * badge. Rendering order is exactly the server's drawer order; the client
 * never re-sorts.
 */

import { DrawerThread, PaperCard } from "../types.js";
import { dotColor, escapeHtml } from "./html.js";

const paperCard = (threadId: string, paper: PaperCard): string => {
  const title = escapeHtml(paper.title ?? paper.paper_id ?? "(untitled)");
  const year = paper.year !== null ? `<span class="paper-year">${paper.year}</span>` : "";
  const surface = paper.surface ? `<span class="paper-surface">${escapeHtml(paper.surface)}</span>` : "";
  const tldr = paper.tldr ? `<p class="paper-tldr">${escapeHtml(paper.tldr)}</p>` : "";
  const url = paper.url
    ? `<a class="paper-url" href="${escapeHtml(paper.url)}" target="_blank" rel="noopener">link</a>`
    : "";
  const current = paper.is_current ? `<div class="paper-current-badge">current paper</div>` : "";
  const key = escapeHtml(paper.paper_id ?? paper.title ?? "");
  return `
    <div class="paper-card" draggable="true" data-kind="paper" data-thread="${escapeHtml(threadId)}" data-paper="${key}">
      <svg class="paper-icon" aria-hidden="true"><use href="#icon-document"></use></svg>
      <div class="paper-body">
        <div class="paper-title">${title} ${year} ${surface} ${url}</div>
        ${tldr}
        ${current}
      </div>
    </div>`;
};

const threadNode = (thread: DrawerThread, collapsed: Set<string>, depth: number): string => {
  const isCollapsed = collapsed.has(thread.thread_id);
  const id = escapeHtml(thread.thread_id);
  const clipCounter = thread.clip_counter
    ? `<button class="clip-counter" data-action="open-overview" data-thread="${id}">${escapeHtml(thread.clip_counter)}</button>`
    : "";
  const children = isCollapsed
    ? ""
    : thread.children.map((child) => threadNode(child, collapsed, depth + 1)).join("");
  const papers = isCollapsed ? "" : thread.papers.map((paper) => paperCard(thread.thread_id, paper)).join("");
  return `
    <li class="thread-node" data-thread="${id}" data-depth="${depth}" draggable="true" data-kind="thread">
      <div class="thread-row">
        <button class="thread-toggle" data-action="toggle" data-thread="${id}" aria-expanded="${!isCollapsed}">${isCollapsed ? "▸" : "▾"}</button>
        <span class="thread-dot" style="background:${dotColor(thread.thread_id)}">${thread.nested_count}</span>
        <span class="thread-label" data-action="rename" data-thread="${id}">${escapeHtml(thread.label)}</span>
        <button class="thread-zoom" data-action="open-overview" data-thread="${id}" title="View details">⛶</button>
      </div>
      ${clipCounter}
      ${papers}
      ${children ? `<ul class="thread-children">${children}</ul>` : ""}
    </li>`;
};

export const renderDrawer = (drawer: DrawerThread[], collapsed: Set<string> = new Set()): string =>
  `<ul class="thread-drawer" data-drop="root">${drawer
    .map((thread) => threadNode(thread, collapsed, 0))
    .join("")}</ul>`;

/** Server-ordered ids, depth-first, as rendered. Used by contract tests. */
export const renderedThreadOrder = (drawer: DrawerThread[]): string[] => {
  const out: string[] = [];
  const walk = (thread: DrawerThread) => {
    out.push(thread.thread_id);
    thread.children.forEach(walk);
  };
  drawer.forEach(walk);
  return out;
};
