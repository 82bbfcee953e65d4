/**
 * Wire and editor-state types.
 *
 * The segment rows mirror the review service's JSON field for field. The
 * editor state is one immutable value owned by the controller; the reducer
 * in state.ts rebuilds it on every event and never mutates in place.
 */

export type SegmentStatus = "auto" | "edited" | "confirmed" | "deleted";

/** A segment as stored on the server, without cue annotations. */
export interface SegmentCore {
  id: string;
  text: string;
  start_ms: number;
  end_ms: number;
  conf: number;
  status: SegmentStatus;
}

/** A live segment row from GET /api/segments, cue flags included. */
export interface SegmentRow extends SegmentCore {
  adjacent_to_prev: boolean;
  sequence_start: boolean;
}

export interface SegmentsPayload {
  revision: number;
  segments: SegmentRow[];
}

export interface ProjectInfo {
  episode_id: string;
  revision: number;
  config: Record<string, unknown>;
  segment_count: number;
}

export type Mode = "browse" | "edit";

export type PreviewStatus = "idle" | "loading" | "ready" | "failed";

export interface PreviewState {
  /** Timestamp the preview is aimed at, null before the first selection. */
  tMs: number | null;
  status: PreviewStatus;
  /** Object URL for the fetched frame; null until one loads. */
  url: string | null;
}

export interface EditorState {
  revision: number;
  segments: SegmentRow[];
  selectedId: string | null;
  /** Multi-selection for merge, kept as ids (list order is resolved late). */
  marked: string[];
  mode: Mode;
  draft: string;
  /** True while a mutation is in flight; a second one is refused. */
  busy: boolean;
  /** Server moved past our revision; user must reload before mutating. */
  conflict: boolean;
  toast: string | null;
  /** Timing step for Shift+arrow, taken from the project config. */
  nudgeMs: number;
  preview: PreviewState;
}

export type EditorEvent =
  | { type: "key"; key: string; shift: boolean }
  | { type: "activate"; id: string }
  | { type: "open"; id: string }
  | { type: "draft"; text: string }
  | { type: "scrub"; tMs: number }
  | { type: "retryFrame" }
  | { type: "configured"; nudgeMs: number }
  | { type: "snapshot"; payload: SegmentsPayload }
  | { type: "applied"; payload: SegmentsPayload; focusId: string | null }
  | { type: "rejected"; message: string }
  | { type: "conflicted"; revision: number }
  | { type: "frameLoaded"; tMs: number; url: string | null }
  | { type: "frameFailed"; tMs: number };

export type Effect =
  | { kind: "patch"; id: string; fields: Record<string, unknown> }
  | { kind: "merge"; ids: string[] }
  | { kind: "remove"; id: string }
  | { kind: "reload" }
  | { kind: "frame"; tMs: number };
