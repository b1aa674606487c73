/**
 * Viewport geometry: the client-side mirror of the engine's mapping between
 * rendered pixels and parse points. Overlay rectangles are positioned with
 * toViewport(...) over document-space boxes, so the round trip must stay
 * within one rendered pixel.
 */

import { PageRectWire, ViewportTransformWire } from "./types.js";

export interface ViewportTransform {
  renderScale: number;
  pageOffsets: Map<number, [number, number]>;
}

export const identityTransform = (pages: number): ViewportTransform => ({
  renderScale: 1,
  pageOffsets: new Map(Array.from({ length: pages }, (_, p) => [p, [0, 0] as [number, number]])),
});

export const transformToWire = (t: ViewportTransform): ViewportTransformWire => ({
  render_scale: t.renderScale,
  page_offsets: Object.fromEntries(Array.from(t.pageOffsets, ([page, xy]) => [String(page), xy])),
});

const offsetFor = (t: ViewportTransform, page: number): [number, number] => {
  const offset = t.pageOffsets.get(page);
  if (!offset) throw new Error(`no offset for page ${page}`);
  return offset;
};

export const toDocumentSpace = (rect: PageRectWire, t: ViewportTransform): PageRectWire => {
  const [dx, dy] = offsetFor(t, rect.page);
  const s = t.renderScale;
  return { page: rect.page, x: (rect.x - dx) / s, y: (rect.y - dy) / s, w: rect.w / s, h: rect.h / s };
};

export const toViewportSpace = (rect: PageRectWire, t: ViewportTransform): PageRectWire => {
  const [dx, dy] = offsetFor(t, rect.page);
  const s = t.renderScale;
  return { page: rect.page, x: rect.x * s + dx, y: rect.y * s + dy, w: rect.w * s, h: rect.h * s };
};

/** Largest per-coordinate deviation after a full round trip, in rendered pixels. */
export const roundTripError = (rect: PageRectWire, t: ViewportTransform): number => {
  const back = toViewportSpace(toDocumentSpace(rect, t), t);
  return Math.max(
    Math.abs(back.x - rect.x),
    Math.abs(back.y - rect.y),
    Math.abs(back.w - rect.w),
    Math.abs(back.h - rect.h),
  );
};

/** Normalize a mouse drag (any corner order) into a page-tagged rectangle. */
export const dragToRect = (
  page: number,
  x0: number,
  y0: number,
  x1: number,
  y1: number,
): PageRectWire => ({
  page,
  x: Math.min(x0, x1),
  y: Math.min(y0, y1),
  w: Math.abs(x1 - x0),
  h: Math.abs(y1 - y0),
});
