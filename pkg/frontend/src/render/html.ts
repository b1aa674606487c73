export const escapeHtml = (value: string): string =>
  value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");

/** Stable per-thread dot color: hash the id into a small fixed palette. */
const PALETTE = ["#e4572e", "#17bebb", "#ffc914", "#2e282a", "#76b041", "#8338ec", "#ff006e", "#3a86ff"];

export const dotColor = (threadId: string): string => {
  let hash = 0;
  for (const ch of threadId) hash = (hash * 31 + ch.charCodeAt(0)) >>> 0;
  return PALETTE[hash % PALETTE.length] as string;
};
