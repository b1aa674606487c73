/**
 * Client view state and the mutation protocol.
 *
 * One rule drives everything here: the client renders exactly what the
 * server last said, and every mutation is a check-and-set against the last
 * seen revision. Mutations are serialized client-side; on a 409 the client
 * refetches the workspace and replays the intent once, and if the replay
 * conflicts again the intent is surfaced as a conflict notice rather than
 * silently dropped.
 */

import { ApiClient, ConflictError } from "./api.js";
import { DrawerThread, Suggestion, TankState } from "./types.js";

export interface ViewState {
  docId: string | null;
  drawer: DrawerThread[];
  collapsed: Set<string>;
  tank: TankState | null;
  suggestions: Suggestion[];
  revision: number;
  conflictNotice: string | null;
}

export const emptyViewState = (): ViewState => ({
  docId: null,
  drawer: [],
  collapsed: new Set(),
  tank: null,
  suggestions: [],
  revision: 0,
  conflictNotice: null,
});

export type MutationIntent<T> = (expectedRevision: number) => Promise<{ payload: T; revision: number }>;

export type StateListener = (state: ViewState) => void;

export class WorkspaceSession {
  readonly state: ViewState = emptyViewState();
  private queue: Promise<unknown> = Promise.resolve();
  private listeners: StateListener[] = [];

  constructor(private readonly api: ApiClient) {}

  onChange(listener: StateListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  /** Pull workspace revision, drawer, and tank from the server. */
  async sync(): Promise<void> {
    const workspace = await this.api.workspace();
    const drawer = await this.api.drawer();
    const tank = await this.api.tank();
    this.state.revision = workspace.payload.revision;
    this.state.drawer = drawer.payload.drawer;
    this.state.tank = tank.payload.tank;
    this.notify();
  }

  /**
   * Run one mutation serialized behind any in-flight ones. Exactly one
   * writer wins at a given revision; a losing client refetches and replays
   * its intent once against the new revision.
   */
  mutate<T>(intent: MutationIntent<T>): Promise<T> {
    const run = this.queue.then(async () => {
      try {
        const result = await intent(this.state.revision);
        this.state.revision = result.revision;
        this.state.conflictNotice = null;
        return result.payload;
      } catch (error) {
        if (!(error instanceof ConflictError)) throw error;
        await this.sync();
        try {
          const replay = await intent(this.state.revision);
          this.state.revision = replay.revision;
          this.state.conflictNotice = null;
          return replay.payload;
        } catch (replayError) {
          if (replayError instanceof ConflictError) {
            await this.sync();
            this.state.conflictNotice = replayError.message;
            this.notify();
          }
          throw replayError;
        }
      } finally {
        this.notify();
      }
    });
    this.queue = run.catch(() => undefined);
    return run;
  }

  // -- high-level intents used by the UI --

  async commitNewThread(label: string): Promise<void> {
    const result = await this.mutate((rev) => this.api.tankCommit(rev, "NEW_THREAD", undefined, label));
    this.state.drawer = result.drawer;
    await this.refreshTank();
  }

  async commitRefsTo(threadId: string): Promise<void> {
    const result = await this.mutate((rev) => this.api.tankCommit(rev, "REFS_TO", threadId));
    this.state.drawer = result.drawer;
    await this.refreshTank();
  }

  async commitClipTo(threadId: string): Promise<void> {
    const result = await this.mutate((rev) => this.api.tankCommit(rev, "CLIP_TO", threadId));
    this.state.drawer = result.drawer;
    await this.refreshTank();
  }

  async discardReference(index: number): Promise<void> {
    const result = await this.mutate((rev) => this.api.tankSelect(rev, index, false));
    this.state.tank = result.tank;
    this.notify();
  }

  async restoreReference(index: number): Promise<void> {
    const result = await this.mutate((rev) => this.api.tankSelect(rev, index, true));
    this.state.tank = result.tank;
    this.notify();
  }

  async moveThread(threadId: string, parent: string | null, position?: number): Promise<void> {
    const result = await this.mutate((rev) => this.api.moveThread(rev, threadId, parent, position));
    this.state.drawer = result.drawer;
    this.notify();
  }

  async refreshTank(): Promise<void> {
    const tank = await this.api.tank();
    this.state.tank = tank.payload.tank;
    this.notify();
  }

  toggleCollapsed(threadId: string): void {
    if (this.state.collapsed.has(threadId)) this.state.collapsed.delete(threadId);
    else this.state.collapsed.add(threadId);
    this.notify();
  }
}
