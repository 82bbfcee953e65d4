/**
 * Glue between the reducer and the HTTP client.
 *
 * Single event loop: every input becomes one dispatch(), every dispatch
 * runs the reducer and at most one effect. The busy flag in the state
 * guarantees at most one mutation is in flight. After every accepted
 * mutation the segment list is re-fetched so cue flags and ordering always
 * come from the server; the client never recomputes them locally.
 */

import { ConflictError, HttpError, type ApiClient } from "./api.js";
import { initialState, reduce } from "./state.js";
import type { EditorEvent, EditorState, Effect } from "./types.js";

type Listener = (state: EditorState) => void;

export class EditorController {
  state: EditorState = initialState;

  private readonly pending = new Set<Promise<void>>();
  private frameUrlToRevoke: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly listener: Listener = () => {},
  ) {}

  /** Load project config and the initial segment list. */
  async start(): Promise<void> {
    const info = await this.api.getProject();
    const period = (info.config as { sampling_period_ms?: unknown }).sampling_period_ms;
    if (typeof period === "number" && Number.isInteger(period) && period > 0) {
      this.dispatch({ type: "configured", nudgeMs: period });
    }
    this.dispatch({ type: "snapshot", payload: await this.api.getSegments() });
    await this.settle();
  }

  key(key: string, shift = false): void {
    this.dispatch({ type: "key", key, shift });
  }

  dispatch(event: EditorEvent): void {
    const step = reduce(this.state, event);
    this.state = step.state;
    this.listener(this.state);
    if (step.effect) {
      this.track(this.run(step.effect));
    }
  }

  /** Wait until no request is in flight (used by tests). */
  async settle(): Promise<void> {
    while (this.pending.size) {
      await Promise.all([...this.pending]);
    }
  }

  private track(work: Promise<void>): void {
    this.pending.add(work);
    void work.finally(() => this.pending.delete(work));
  }

  private async run(effect: Effect): Promise<void> {
    try {
      switch (effect.kind) {
        case "patch": {
          const reply = await this.api.patchSegment(effect.id, this.state.revision, effect.fields);
          await this.refresh(reply.segment?.id ?? null);
          return;
        }
        case "merge": {
          const reply = await this.api.mergeSegments(effect.ids, this.state.revision);
          await this.refresh(reply.segment?.id ?? null);
          return;
        }
        case "remove":
          await this.api.deleteSegment(effect.id, this.state.revision);
          await this.refresh(null);
          return;
        case "reload":
          this.dispatch({ type: "snapshot", payload: await this.api.getSegments() });
          return;
        case "frame":
          await this.grabFrame(effect.tMs);
          return;
      }
    } catch (err) {
      if (err instanceof ConflictError) {
        this.dispatch({ type: "conflicted", revision: err.revision });
      } else if (err instanceof HttpError) {
        this.dispatch({ type: "rejected", message: err.message });
      } else {
        this.dispatch({ type: "rejected", message: String(err) });
      }
    }
  }

  private async refresh(focusId: string | null): Promise<void> {
    this.dispatch({ type: "applied", payload: await this.api.getSegments(), focusId });
  }

  private async grabFrame(tMs: number): Promise<void> {
    // frame fetch failures are preview-local, never a toast
    try {
      const blob = await this.api.fetchFrame(tMs);
      const stale = this.frameUrlToRevoke;
      const url =
        typeof URL !== "undefined" && typeof URL.createObjectURL === "function"
          ? URL.createObjectURL(blob)
          : null;
      this.frameUrlToRevoke = url;
      this.dispatch({ type: "frameLoaded", tMs, url });
      if (stale !== null) {
        URL.revokeObjectURL(stale);
      }
    } catch {
      this.dispatch({ type: "frameFailed", tMs });
    }
  }
}
