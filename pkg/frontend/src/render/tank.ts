/**
 * Holding tank panel: the staged citation context with one card per
 * extracted reference (surface notation, title, metadata, TL;DR, trash),
 * plus the thread selector whose buttons activate per the server's mode
 * flags.
 */

import { Suggestion, TankState } from "../types.js";
import { escapeHtml } from "./html.js";

const referenceCard = (tank: TankState, index: number): string => {
  const ref = tank.context?.resolved[index];
  if (!ref) return "";
  const selected = tank.selected.includes(index);
  const title = ref.paper?.title ?? ref.bib?.title ?? ref.bib?.raw_text ?? "(unresolved)";
  const year = ref.paper?.year ?? ref.bib?.year;
  const tldr = ref.paper?.tldr ? `<p class="ref-tldr">${escapeHtml(ref.paper.tldr)}</p>` : "";
  const url = ref.paper?.url
    ? `<a class="ref-url" href="${escapeHtml(ref.paper.url)}" target="_blank" rel="noopener">link</a>`
    : "";
  const reason = ref.reason ? `<span class="ref-reason">${escapeHtml(ref.reason)}</span>` : "";
  const action = selected
    ? `<button class="ref-trash" data-action="discard-ref" data-index="${index}" title="Discard">\u{1f5d1}</button>`
    : `<button class="ref-restore" data-action="restore-ref" data-index="${index}" title="Restore">↺</button>`;
  return `
    <div class="ref-card${selected ? "" : " ref-card-discarded"}" data-index="${index}">
      <span class="ref-surface">${escapeHtml(ref.marker.surface)}</span>
      <div class="ref-body">
        <div class="ref-title">${escapeHtml(title)}${year ? ` <span class="ref-year">(${year})</span>` : ""} ${url}</div>
        ${tldr}
        ${reason}
      </div>
      ${action}
    </div>`;
};

const suggestionRow = (s: Suggestion): string =>
  `<li class="suggestion" data-action="pick-suggestion" data-thread="${escapeHtml(s.thread_id)}">
    <span class="suggestion-label">${escapeHtml(s.label)}</span>
    <span class="suggestion-score">${s.score.toFixed(3)}</span>
  </li>`;

export const renderTank = (tank: TankState | null, suggestions: Suggestion[] = []): string => {
  if (!tank || (!tank.context && !tank.image_clip)) {
    return `<div class="holding-tank holding-tank-empty">Highlight text in the document to extract its references.</div>`;
  }
  const context = tank.context
    ? `<blockquote class="tank-context" data-action="edit-context">${escapeHtml(tank.context.text)}</blockquote>`
    : "";
  const image = tank.image_clip
    ? `<div class="tank-image">image clip, page ${tank.image_clip.page}</div>`
    : "";
  const cards = tank.context ? tank.context.resolved.map((_, i) => referenceCard(tank, i)).join("") : "";
  const modes = tank.modes;
  const selector = `
    <div class="thread-selector">
      <input class="selector-input" data-action="selector-input" placeholder="Type to create a new thread or pick a suggestion" />
      <ul class="selector-suggestions">${suggestions.map(suggestionRow).join("")}</ul>
      <div class="selector-buttons">
        <button data-action="commit-new" ${modes.NEW_THREAD ? "" : "disabled"}>New thread</button>
        <button data-action="commit-refs" ${modes.REFS_TO ? "" : "disabled"}>Add references</button>
        <button data-action="commit-clip" ${modes.CLIP_TO ? "" : "disabled"}>Add as clip</button>
      </div>
    </div>`;
  return `<div class="holding-tank">${context}${image}<div class="ref-cards">${cards}</div>${selector}</div>`;
};

/** Reference titles currently staged and selected, in card order. */
export const renderedTankSelection = (tank: TankState): string[] => {
  if (!tank.context) return [];
  return tank.selected.map((index) => {
    const ref = tank.context!.resolved[index];
    return ref?.paper?.title ?? ref?.bib?.title ?? ref?.bib?.raw_text ?? "(unresolved)";
  });
};
