/**
 * Typed client for the engine's local HTTP interface.
 *
 * Every mutation carries the caller-supplied expected revision inside the
 * versioned request envelope; a stale revision surfaces as a
 * ConflictError so the caller can reconcile and replay.
 */

import {
  API_VERSION,
  CommitMode,
  CommitResponse,
  DrawerThread,
  HighlightResponse,
  OverviewNode,
  PageRectWire,
  RecommendationsResponse,
  RequestEnvelope,
  ResponseEnvelope,
  Suggestion,
  TankState,
  ViewportTransformWire,
  WorkspaceInfo,
} from "./types.js";

export type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

export class ConflictError extends ApiRequestError {
  constructor(message: string) {
    super("CONFLICT", message, 409);
    this.name = "ConflictError";
  }
}

let requestCounter = 0;

const nextRequestId = () => `req-${++requestCounter}`;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async call<T>(
    method: string,
    path: string,
    expectedRevision?: number,
    payload?: unknown,
  ): Promise<{ payload: T; revision: number }> {
    const envelope: RequestEnvelope = { version: API_VERSION, request_id: nextRequestId() };
    if (expectedRevision !== undefined) envelope.expected_revision = expectedRevision;
    if (payload !== undefined) envelope.payload = payload;
    const hasBody = expectedRevision !== undefined || payload !== undefined;

    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: hasBody ? { "Content-Type": "application/json" } : {},
      body: hasBody ? JSON.stringify(envelope) : undefined,
    });
    const body = (await response.json()) as ResponseEnvelope<T>;
    if (body.error) {
      if (body.error.code === "CONFLICT") throw new ConflictError(body.error.message);
      throw new ApiRequestError(body.error.code, body.error.message, response.status);
    }
    return { payload: body.payload as T, revision: body.revision ?? 0 };
  }

  workspace(): Promise<{ payload: WorkspaceInfo; revision: number }> {
    return this.call("GET", "/workspace");
  }

  drawer(): Promise<{ payload: { drawer: DrawerThread[] }; revision: number }> {
    return this.call("GET", "/threads");
  }

  tank(): Promise<{ payload: { tank: TankState }; revision: number }> {
    return this.call("GET", "/tank");
  }

  ingest(parse: unknown, expectedRevision: number) {
    return this.call<{ doc_id: string; sentences: number; revision: number }>(
      "POST",
      "/documents",
      expectedRevision,
      { parse },
    );
  }

  highlight(
    expectedRevision: number,
    docId: string,
    kind: "TEXT" | "AREA",
    rects: PageRectWire[],
    transform?: ViewportTransformWire,
    imageBase64?: string,
  ) {
    return this.call<HighlightResponse>("POST", "/highlights", expectedRevision, {
      doc_id: docId,
      kind,
      rects,
      transform,
      image_base64: imageBase64,
    });
  }

  tankSelect(expectedRevision: number, index: number, selected: boolean) {
    return this.call<{ tank: TankState; revision: number }>("POST", "/tank/select", expectedRevision, {
      index,
      selected,
    });
  }

  tankCommit(expectedRevision: number, mode: CommitMode, target?: string, label?: string) {
    return this.call<CommitResponse>("POST", "/tank/commit", expectedRevision, { mode, target, label });
  }

  createThread(expectedRevision: number, label: string, parent?: string) {
    return this.call<{ thread_id: string; revision: number }>("POST", "/threads", expectedRevision, {
      label,
      parent,
    });
  }

  renameThread(expectedRevision: number, threadId: string, label: string) {
    return this.call<{ thread_id: string; revision: number }>(
      "PATCH",
      `/threads/${encodeURIComponent(threadId)}`,
      expectedRevision,
      { label },
    );
  }

  deleteThread(expectedRevision: number, threadId: string, confirm: boolean) {
    return this.call<{ revision: number }>(
      "DELETE",
      `/threads/${encodeURIComponent(threadId)}`,
      expectedRevision,
      { confirm },
    );
  }

  moveThread(expectedRevision: number, threadId: string, parent: string | null, position?: number) {
    return this.call<{ drawer: DrawerThread[]; revision: number }>(
      "POST",
      `/threads/${encodeURIComponent(threadId)}/move`,
      expectedRevision,
      { parent, position },
    );
  }

  movePaper(expectedRevision: number, src: string, paper: string, dst: string) {
    return this.call<{ drawer: DrawerThread[]; revision: number }>("POST", "/papers/move", expectedRevision, {
      src,
      paper,
      dst,
    });
  }

  overview(threadId: string) {
    return this.call<{ overview: OverviewNode }>("GET", `/threads/${encodeURIComponent(threadId)}/overview`);
  }

  refreshRecommendations(threadId: string) {
    return this.call<RecommendationsResponse>(
      "POST",
      `/threads/${encodeURIComponent(threadId)}/recommendations/refresh`,
    );
  }

  suggest(text: string, k?: number) {
    const params = new URLSearchParams({ text });
    if (k !== undefined) params.set("k", String(k));
    return this.call<{ suggestions: Suggestion[] }>("GET", `/suggest?${params.toString()}`);
  }
}
