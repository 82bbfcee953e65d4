/**
 * Pure editor state machine.
 *
 * reduce() maps (state, event) to the next state plus at most one effect
 * for the controller to run. Nothing here touches the DOM or the network,
 * which is what keeps the keyboard behaviour unit-testable.
 *
 * Mode rules:
 *   browse -> edit   only via the edit shortcut or double-activation
 *   edit   -> browse via Escape (discard) or Enter (save)
 *
 * While one mutation is in flight (busy) every further mutation is refused
 * with a toast; navigation and frame fetches stay available.
 */

import type {
  EditorEvent,
  EditorState,
  Effect,
  SegmentRow,
  SegmentsPayload,
} from "./types.js";

export const DEFAULT_NUDGE_MS = 100;

export interface Step {
  state: EditorState;
  effect: Effect | null;
}

export const initialState: EditorState = {
  revision: 0,
  segments: [],
  selectedId: null,
  marked: [],
  mode: "browse",
  draft: "",
  busy: false,
  conflict: false,
  toast: null,
  nudgeMs: DEFAULT_NUDGE_MS,
  preview: { tMs: null, status: "idle", url: null },
};

const quiet = (state: EditorState): Step => ({ state, effect: null });

function selectedRow(state: EditorState): SegmentRow | null {
  return state.segments.find((s) => s.id === state.selectedId) ?? null;
}

function midpoint(seg: SegmentRow): number {
  return seg.start_ms + Math.floor((seg.end_ms - seg.start_ms) / 2);
}

/** Retarget the frame preview; keeps the old image up while loading. */
function aimPreview(state: EditorState, tMs: number): Step {
  if (tMs === state.preview.tMs && state.preview.status !== "failed") {
    return quiet(state);
  }
  return {
    state: { ...state, preview: { tMs, status: "loading", url: state.preview.url } },
    effect: { kind: "frame", tMs },
  };
}

function select(state: EditorState, id: string): Step {
  const seg = state.segments.find((s) => s.id === id);
  if (!seg || id === state.selectedId) {
    return quiet(state);
  }
  return aimPreview({ ...state, selectedId: id }, midpoint(seg));
}

function moveSelection(state: EditorState, delta: number): Step {
  if (!state.segments.length) {
    return quiet(state);
  }
  const index = state.segments.findIndex((s) => s.id === state.selectedId);
  const next =
    index < 0
      ? delta > 0
        ? 0
        : state.segments.length - 1
      : Math.max(0, Math.min(state.segments.length - 1, index + delta));
  return select(state, state.segments[next].id);
}

function toggleMark(state: EditorState): Step {
  const seg = selectedRow(state);
  if (!seg) {
    return quiet(state);
  }
  const marked = state.marked.includes(seg.id)
    ? state.marked.filter((id) => id !== seg.id)
    : [...state.marked, seg.id];
  return quiet({ ...state, marked });
}

function openEditor(state: EditorState): Step {
  const seg = selectedRow(state);
  if (!seg) {
    return quiet(state);
  }
  return quiet({ ...state, mode: "edit", draft: seg.text, toast: null });
}

const SAVING = "previous change is still saving";

function nudgeTiming(state: EditorState, deltaMs: number): Step {
  const seg = selectedRow(state);
  if (!seg) {
    return quiet(state);
  }
  if (state.busy) {
    return quiet({ ...state, toast: SAVING });
  }
  const start = seg.start_ms + deltaMs;
  if (start < 0) {
    return quiet({ ...state, toast: "cannot shift before 00:00:00,000" });
  }
  return {
    state: { ...state, busy: true, toast: null },
    effect: {
      kind: "patch",
      id: seg.id,
      fields: { start_ms: start, end_ms: seg.end_ms + deltaMs },
    },
  };
}

/**
 * Resolve the ids `m` should merge: the marked set when two or more rows
 * are marked, else the selected row plus its follower. Returns a toast
 * message instead when the selection cannot merge; no request is made then.
 */
function mergeIds(state: EditorState): string[] | string {
  const order = new Map(state.segments.map((s, i) => [s.id, i]));
  if (state.marked.length >= 2) {
    const positions = state.marked
      .map((id) => order.get(id))
      .filter((i): i is number => i !== undefined)
      .sort((a, b) => a - b);
    if (positions.length < 2) {
      return "marked cues no longer exist";
    }
    if (positions[positions.length - 1] - positions[0] !== positions.length - 1) {
      return "marked cues are not consecutive";
    }
    return positions.map((i) => state.segments[i].id);
  }
  const seg = selectedRow(state);
  if (!seg) {
    return "no cue selected";
  }
  const at = order.get(seg.id) as number;
  if (at + 1 >= state.segments.length) {
    return "no following cue to merge into";
  }
  return [seg.id, state.segments[at + 1].id];
}

function mergeSelection(state: EditorState): Step {
  if (state.busy) {
    return quiet({ ...state, toast: SAVING });
  }
  const ids = mergeIds(state);
  if (typeof ids === "string") {
    return quiet({ ...state, toast: ids });
  }
  return {
    state: { ...state, busy: true, toast: null },
    effect: { kind: "merge", ids },
  };
}

function removeSelection(state: EditorState): Step {
  const seg = selectedRow(state);
  if (!seg) {
    return quiet(state);
  }
  if (state.busy) {
    return quiet({ ...state, toast: SAVING });
  }
  return {
    state: { ...state, busy: true, toast: null },
    effect: { kind: "remove", id: seg.id },
  };
}

function browseKey(state: EditorState, key: string, shift: boolean): Step {
  if (shift && (key === "ArrowLeft" || key === "ArrowRight")) {
    return nudgeTiming(state, key === "ArrowRight" ? state.nudgeMs : -state.nudgeMs);
  }
  switch (key) {
    case "ArrowDown":
    case "j":
      return moveSelection(state, 1);
    case "ArrowUp":
    case "k":
      return moveSelection(state, -1);
    case "x":
    case " ":
      return toggleMark(state);
    case "e":
    case "Enter":
      return openEditor(state);
    case "m":
      return mergeSelection(state);
    case "Delete":
      return removeSelection(state);
    case "r":
      if (!state.conflict) {
        return quiet(state);
      }
      return {
        state: { ...state, conflict: false, toast: null, marked: [] },
        effect: { kind: "reload" },
      };
    case "Escape":
      return quiet({ ...state, marked: [], toast: null });
    default:
      return quiet(state);
  }
}

function editKey(state: EditorState, key: string): Step {
  if (key === "Escape") {
    // discard: the draft never leaves the client
    return quiet({ ...state, mode: "browse", draft: "", toast: null });
  }
  if (key !== "Enter") {
    return quiet(state);
  }
  if (state.busy) {
    return quiet({ ...state, toast: SAVING });
  }
  const seg = selectedRow(state);
  if (!seg) {
    return quiet({ ...state, mode: "browse", draft: "" });
  }
  const text = state.draft.trim();
  if (!text) {
    return quiet({ ...state, toast: "text must not be empty" });
  }
  if (text === seg.text) {
    // nothing changed, skip the round trip
    return quiet({ ...state, mode: "browse", draft: "", toast: null });
  }
  return {
    state: { ...state, busy: true, toast: null },
    effect: { kind: "patch", id: seg.id, fields: { text } },
  };
}

/**
 * Replace the list with a fresh server payload. Selection sticks to the
 * same id when it survives, else to the focus id (a merged segment), else
 * to the nearest index. The preview follows the selected cue's midpoint.
 */
function applyPayload(
  state: EditorState,
  payload: SegmentsPayload,
  focusId: string | null,
): Step {
  const segments = payload.segments;
  const ids = new Set(segments.map((s) => s.id));
  let selectedId =
    focusId !== null && ids.has(focusId)
      ? focusId
      : state.selectedId !== null && ids.has(state.selectedId)
        ? state.selectedId
        : null;
  if (selectedId === null && segments.length) {
    const index = state.segments.findIndex((s) => s.id === state.selectedId);
    const at = index < 0 ? 0 : Math.min(index, segments.length - 1);
    selectedId = segments[at].id;
  }
  const next: EditorState = {
    ...state,
    revision: payload.revision,
    segments,
    selectedId,
    marked: state.marked.filter((id) => ids.has(id)),
    conflict: false,
  };
  const seg = segments.find((s) => s.id === selectedId);
  return seg ? aimPreview(next, midpoint(seg)) : quiet(next);
}

export function reduce(state: EditorState, event: EditorEvent): Step {
  switch (event.type) {
    case "key":
      return state.mode === "edit"
        ? editKey(state, event.key)
        : browseKey(state, event.key, event.shift);
    case "activate":
      return state.mode === "browse" ? select(state, event.id) : quiet(state);
    case "open": {
      if (state.mode !== "browse") {
        return quiet(state);
      }
      const moved = select(state, event.id);
      return { state: openEditor(moved.state).state, effect: moved.effect };
    }
    case "draft":
      return state.mode === "edit" ? quiet({ ...state, draft: event.text }) : quiet(state);
    case "scrub": {
      const seg = selectedRow(state);
      if (!seg) {
        return quiet(state);
      }
      const tMs = Math.max(seg.start_ms, Math.min(seg.end_ms, Math.round(event.tMs)));
      return aimPreview(state, tMs);
    }
    case "retryFrame":
      return state.preview.tMs === null
        ? quiet(state)
        : {
            state: { ...state, preview: { ...state.preview, status: "loading" } },
            effect: { kind: "frame", tMs: state.preview.tMs },
          };
    case "configured":
      return quiet({ ...state, nudgeMs: event.nudgeMs });
    case "snapshot":
      return applyPayload(state, event.payload, null);
    case "applied":
      return applyPayload(
        { ...state, busy: false, mode: "browse", draft: "", marked: [] },
        event.payload,
        event.focusId,
      );
    case "rejected":
      return quiet({ ...state, busy: false, toast: event.message });
    case "conflicted":
      return quiet({
        ...state,
        busy: false,
        conflict: true,
        toast: `project changed elsewhere (now revision ${event.revision}); press r to reload`,
      });
    case "frameLoaded":
      if (event.tMs !== state.preview.tMs) {
        return quiet(state); // stale fetch, a newer target took over
      }
      return quiet({ ...state, preview: { tMs: event.tMs, status: "ready", url: event.url } });
    case "frameFailed":
      if (event.tMs !== state.preview.tMs) {
        return quiet(state);
      }
      return quiet({ ...state, preview: { ...state.preview, status: "failed" } });
  }
}
