/**
 * Overview & Discovery panel: full-width indented tree with the clips grid
 * (and their sources) first, references grouped by citation context next,
 * and the recommendation grid with Add-to-thread and Refresh at the bottom.
 */

import { OverviewClip, OverviewGroup, OverviewNode, RecommendationWire } from "../types.js";
import { escapeHtml } from "./html.js";

const clipTile = (clip: OverviewClip): string => {
  const source = clip.source;
  const where =
    source.sentences && source.sentences.length
      ? `${source.doc_id} s${source.sentences[0]}-${source.sentences[source.sentences.length - 1]}`
      : source.page !== null
        ? `${source.doc_id} p${source.page}`
        : source.doc_id;
  const body =
    clip.kind === "IMAGE"
      ? `<div class="clip-image" data-image="${escapeHtml(clip.payload.image ?? "")}">image clip</div>`
      : `<p class="clip-text" data-action="edit-clip" data-clip="${escapeHtml(clip.clip_id)}">${escapeHtml(clip.payload.text ?? "")}</p>`;
  return `<figure class="clip-tile">${body}<figcaption class="clip-source">${escapeHtml(where)}</figcaption></figure>`;
};

const referenceGroup = (group: OverviewGroup): string => {
  const header = group.context_id
    ? `<header class="group-context">${escapeHtml(group.context_text ?? group.context_id)}</header>`
    : `<header class="group-context group-context-ungrouped">ungrouped</header>`;
  const papers = group.papers
    .map((paper) => {
      const title = escapeHtml(paper.title ?? paper.paper_id ?? "(untitled)");
      const year = paper.year !== null ? ` (${paper.year})` : "";
      const surface = paper.surface ? ` <span class="paper-surface">${escapeHtml(paper.surface)}</span>` : "";
      return `<li class="group-paper">${title}${year}${surface}</li>`;
    })
    .join("");
  return `<section class="reference-group">${header}<ul>${papers}</ul></section>`;
};

const recommendationTile = (threadId: string, rec: RecommendationWire): string => {
  const paper = rec.paper;
  const year = paper.year !== null ? ` (${paper.year})` : "";
  const tldr = paper.tldr ? `<p class="rec-tldr">${escapeHtml(paper.tldr)}</p>` : "";
  const contexts = (paper.citation_contexts ?? [])
    .map(
      (c) =>
        `<span class="rec-context">${escapeHtml(c.snippet ?? c.cited)}${c.intent ? ` <em>(${escapeHtml(c.intent)})</em>` : ""}</span>`,
    )
    .join("");
  return `
    <article class="rec-tile" data-rank="${rec.rank}">
      <h4 class="rec-title">${escapeHtml(paper.title)}${year}</h4>
      <div class="rec-coverage">cites ${rec.coverage_count} of this thread's references</div>
      ${tldr}
      ${contexts}
      <button data-action="add-recommendation" data-thread="${escapeHtml(threadId)}" data-paper="${escapeHtml(paper.paper_id)}">Add to thread</button>
    </article>`;
};

const node = (n: OverviewNode): string => {
  const clips = n.clips.length
    ? `<div class="clips-grid">${n.clips.map(clipTile).join("")}</div>`
    : "";
  const groups = n.reference_groups.length
    ? `<div class="reference-groups">${n.reference_groups.map(referenceGroup).join("")}</div>`
    : "";
  const children = n.children.map(node).join("");
  return `
    <section class="overview-node" data-depth="${n.depth}" style="margin-left:${n.depth * 24}px">
      <h3 class="overview-label">${escapeHtml(n.label)}</h3>
      ${clips}
      ${groups}
      ${children}
    </section>`;
};

export const renderOverview = (overview: OverviewNode): string => {
  const recommendations = overview.recommendations ?? [];
  const grid = recommendations.length
    ? `<div class="rec-grid">${recommendations.map((rec) => recommendationTile(overview.thread_id, rec)).join("")}</div>`
    : `<p class="rec-empty">No recommendations yet.</p>`;
  return `
    <div class="overview-panel" data-thread="${escapeHtml(overview.thread_id)}" data-revision="${overview.revision ?? ""}">
      ${node(overview)}
      <section class="discovery">
        <header class="discovery-header">
          <h3>Discovery</h3>
          <button data-action="refresh-recommendations" data-thread="${escapeHtml(overview.thread_id)}">Refresh</button>
        </header>
        ${grid}
      </section>
    </div>`;
};

/** Recommendation titles in rendered (rank) order. Used by contract tests. */
export const renderedRecommendationOrder = (recommendations: RecommendationWire[]): string[] =>
  recommendations.map((rec) => rec.paper.title);
