/**
 * Wire types mirroring the engine's HTTP schema (version 1).
 *
 * The client performs no curation logic of its own: suggestions, ordering,
 * extraction, and ranking arrive fully computed and are rendered exactly as
 * served. These types are the contract.
 */

export const API_VERSION = 1;

export interface RequestEnvelope {
  version: number;
  request_id: string;
  expected_revision?: number;
  payload?: unknown;
}

export interface ResponseEnvelope<T> {
  version: number;
  request_id: string | null;
  revision?: number;
  payload?: T;
  error?: ApiError;
}

export interface ApiError {
  code: string;
  message: string;
}

export interface WorkspaceInfo {
  workspace_id: string;
  revision: number;
}

export interface PaperCard {
  paper_id: string | null;
  title: string | null;
  year: number | null;
  tldr: string | null;
  url: string | null;
  source_context: string | null;
  surface: string | null;
  is_current?: boolean;
}

export interface DrawerThread {
  thread_id: string;
  label: string;
  clip_count: number;
  clip_counter: string;
  nested_count: number;
  last_additive_change: number;
  papers: PaperCard[];
  children: DrawerThread[];
}

export interface MarkerWire {
  sentence: number;
  start: number;
  end: number;
  surface: string;
  key: string;
}

export interface BibWire {
  key: string;
  raw_text: string;
  title: string | null;
  year: number | null;
  paper_id: string | null;
}

export interface RecordWire {
  paper_id: string;
  title: string;
  year: number | null;
  tldr: string | null;
  url: string | null;
  embedding: number[] | null;
  citation_contexts: { cited: string; snippet: string | null; intent: string | null }[] | null;
}

export interface ResolvedRefWire {
  marker: MarkerWire;
  bib: BibWire | null;
  paper: RecordWire | null;
  reason: string | null;
}

export interface ContextWire {
  context_id: string;
  doc_id: string;
  core: number[];
  context: number[];
  text: string;
  found_markers: MarkerWire[];
  resolved: ResolvedRefWire[];
}

export interface TankState {
  context: ContextWire | null;
  selected: number[];
  image_clip: { doc_id: string; page: number; rect: number[]; image_hex: string } | null;
  modes: { NEW_THREAD: boolean; REFS_TO: boolean; CLIP_TO: boolean };
}

export interface Suggestion {
  thread_id: string;
  label: string;
  score: number;
  chain_objective: number;
}

export interface HighlightResponse {
  tank: TankState;
  suggestions: Suggestion[];
  revision: number;
}

export interface CommitResponse {
  thread_id: string;
  drawer: DrawerThread[];
  revision: number;
}

export interface RecommendationWire {
  rank: number;
  paper: RecordWire;
  coverage: string[];
  coverage_count: number;
  cosine_to_centroid: number | null;
}

export interface RecommendationsResponse {
  thread_id: string;
  revision: number;
  recommendations: RecommendationWire[];
}

export interface OverviewClip {
  clip_id: string;
  kind: "TEXT" | "IMAGE";
  created_at: number;
  payload: { text?: string; image?: string };
  source: {
    doc_id: string;
    page: number | null;
    rects: number[][] | null;
    sentences: number[] | null;
    context_id: string | null;
  };
}

export interface OverviewGroup {
  context_id: string | null;
  context_text: string | null;
  papers: PaperCard[];
}

export interface OverviewNode {
  thread_id: string;
  label: string;
  depth: number;
  clips: OverviewClip[];
  reference_groups: OverviewGroup[];
  children: OverviewNode[];
  revision?: number;
  recommendations?: RecommendationWire[];
}

export type CommitMode = "NEW_THREAD" | "REFS_TO" | "CLIP_TO";

export interface ViewportTransformWire {
  render_scale: number;
  page_offsets: Record<string, [number, number]>;
}

export interface PageRectWire {
  page: number;
  x: number;
  y: number;
  w: number;
  h: number;
}
