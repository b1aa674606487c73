/**
 * Drag-and-drop intents for the drawer. The client only computes what to
 * ask the server for; the server remains the authority and re-validates.
 */

import { DrawerThread } from "./types.js";

export type DropZone = { kind: "thread"; threadId: string } | { kind: "root" };

export interface ThreadMoveIntent {
  threadId: string;
  parent: string | null;
}

export interface PaperMoveIntent {
  src: string;
  paper: string;
  dst: string;
}

const findThread = (drawer: DrawerThread[], threadId: string): DrawerThread | null => {
  for (const thread of drawer) {
    if (thread.thread_id === threadId) return thread;
    const nested = findThread(thread.children, threadId);
    if (nested) return nested;
  }
  return null;
};

const contains = (thread: DrawerThread, threadId: string): boolean => {
  if (thread.thread_id === threadId) return true;
  return thread.children.some((child) => contains(child, threadId));
};

/**
 * A thread dragged onto another nests under it; dragged to the root area it
 * un-nests. Returns null for drops the server would reject outright
 * (self/descendant cycles, anything involving Unorganized).
 */
export const computeThreadDrop = (
  drawer: DrawerThread[],
  draggedId: string,
  zone: DropZone,
): ThreadMoveIntent | null => {
  if (draggedId === "unorganized") return null;
  const dragged = findThread(drawer, draggedId);
  if (!dragged) return null;
  if (zone.kind === "root") return { threadId: draggedId, parent: null };
  if (zone.threadId === "unorganized") return null;
  if (contains(dragged, zone.threadId)) return null;
  return { threadId: draggedId, parent: zone.threadId };
};

/** Papers drag between threads (including into or out of Unorganized). */
export const computePaperDrop = (
  srcThreadId: string,
  paperKey: string,
  zone: DropZone,
): PaperMoveIntent | null => {
  if (zone.kind !== "thread") return null;
  if (zone.threadId === srcThreadId) return null;
  return { src: srcThreadId, paper: paperKey, dst: zone.threadId };
};
