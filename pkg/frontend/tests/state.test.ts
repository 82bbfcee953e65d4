/**
 * Reducer tests: keyboard behaviour, mode transitions, merge preconditions
 * and the single-mutation rule, all without DOM or network.
 */

import { describe, expect, it } from "vitest";
import { initialState, reduce, type Step } from "../src/state.js";
import type { EditorEvent, EditorState, SegmentRow } from "../src/types.js";

function rows(count: number): SegmentRow[] {
  // 900 ms cues, gaps alternating 100/500 like the service would annotate
  const out: SegmentRow[] = [];
  let start = 0;
  for (let k = 0; k < count; k++) {
    out.push({
      id: `seg-${String(k + 1).padStart(4, "0")}`,
      text: `line ${k + 1}`,
      start_ms: start,
      end_ms: start + 900,
      conf: 0.9,
      status: "auto",
      adjacent_to_prev: k % 2 === 1,
      sequence_start: k % 2 === 0,
    });
    start += 900 + (k % 2 === 0 ? 100 : 500);
  }
  return out;
}

function loaded(count = 4, revision = 0): EditorState {
  const step = reduce(initialState, {
    type: "snapshot",
    payload: { revision, segments: rows(count) },
  });
  return step.state;
}

function feed(state: EditorState, ...events: EditorEvent[]): Step {
  let step: Step = { state, effect: null };
  for (const event of events) {
    step = reduce(step.state, event);
  }
  return step;
}

const key = (k: string, shift = false): EditorEvent => ({ type: "key", key: k, shift });

describe("snapshot", () => {
  it("selects the first cue and aims the preview at its midpoint", () => {
    const step = reduce(initialState, {
      type: "snapshot",
      payload: { revision: 3, segments: rows(3) },
    });
    expect(step.state.revision).toBe(3);
    expect(step.state.selectedId).toBe("seg-0001");
    expect(step.state.preview.tMs).toBe(450);
    expect(step.effect).toEqual({ kind: "frame", tMs: 450 });
  });

  it("does not mutate the previous state", () => {
    const before = loaded(3);
    const frozen = JSON.stringify(before);
    feed(before, key("ArrowDown"), key("x"), key("e"), { type: "draft", text: "zz" });
    expect(JSON.stringify(before)).toBe(frozen);
  });
});

describe("selection", () => {
  it("arrows move and clamp at both ends", () => {
    let state = loaded(3);
    expect(state.selectedId).toBe("seg-0001");
    state = feed(state, key("ArrowUp")).state;
    expect(state.selectedId).toBe("seg-0001");
    state = feed(state, key("ArrowDown"), key("ArrowDown"), key("ArrowDown")).state;
    expect(state.selectedId).toBe("seg-0003");
    state = feed(state, key("j")).state;
    expect(state.selectedId).toBe("seg-0003");
    state = feed(state, key("k")).state;
    expect(state.selectedId).toBe("seg-0002");
  });

  it("moving the selection requests the new cue's midpoint frame", () => {
    const step = feed(loaded(3), key("ArrowDown"));
    const second = rows(3)[1];
    const mid = second.start_ms + Math.floor((second.end_ms - second.start_ms) / 2);
    expect(step.effect).toEqual({ kind: "frame", tMs: mid });
    expect(step.state.preview.status).toBe("loading");
  });

  it("activate selects a row by id, open also enters edit", () => {
    const picked = feed(loaded(4), { type: "activate", id: "seg-0003" }).state;
    expect(picked.selectedId).toBe("seg-0003");
    expect(picked.mode).toBe("browse");

    const opened = feed(loaded(4), { type: "open", id: "seg-0003" }).state;
    expect(opened.selectedId).toBe("seg-0003");
    expect(opened.mode).toBe("edit");
    expect(opened.draft).toBe("line 3");
  });
});

describe("edit mode", () => {
  it("e enters edit with the cue text preloaded", () => {
    const state = feed(loaded(), key("e")).state;
    expect(state.mode).toBe("edit");
    expect(state.draft).toBe("line 1");
  });

  it("Escape discards a modified draft without any effect", () => {
    const step = feed(loaded(), key("e"), { type: "draft", text: "changed" }, key("Escape"));
    expect(step.state.mode).toBe("browse");
    expect(step.state.draft).toBe("");
    expect(step.effect).toBeNull();
  });

  it("Enter with a changed draft emits a text patch and blocks reentry", () => {
    const step = feed(loaded(), key("e"), { type: "draft", text: "better" }, key("Enter"));
    expect(step.effect).toEqual({ kind: "patch", id: "seg-0001", fields: { text: "better" } });
    expect(step.state.busy).toBe(true);
    expect(step.state.mode).toBe("edit");

    const again = reduce(step.state, key("Enter"));
    expect(again.effect).toBeNull();
    expect(again.state.toast).toMatch(/still saving/);
  });

  it("Enter with an unchanged draft closes the editor without a request", () => {
    const step = feed(loaded(), key("e"), key("Enter"));
    expect(step.effect).toBeNull();
    expect(step.state.mode).toBe("browse");
  });

  it("Enter with a blank draft toasts and stays in edit", () => {
    const step = feed(loaded(), key("e"), { type: "draft", text: "   " }, key("Enter"));
    expect(step.effect).toBeNull();
    expect(step.state.mode).toBe("edit");
    expect(step.state.toast).toMatch(/empty/);
  });

  it("browse keys do nothing while editing", () => {
    const step = feed(loaded(), key("e"), key("m"));
    expect(step.effect).toBeNull();
    expect(step.state.mode).toBe("edit");
  });
});

describe("merge", () => {
  it("m with a single selection merges it with the follower", () => {
    const step = feed(loaded(4), key("m"));
    expect(step.effect).toEqual({ kind: "merge", ids: ["seg-0001", "seg-0002"] });
    expect(step.state.busy).toBe(true);
  });

  it("m on the last cue toasts instead of calling out", () => {
    const step = feed(loaded(2), key("ArrowDown"), key("m"));
    expect(step.effect).toBeNull();
    expect(step.state.toast).toMatch(/no following cue/);
  });

  it("marked consecutive cues merge in list order regardless of marking order", () => {
    const step = feed(
      loaded(4),
      key("ArrowDown"),
      key("ArrowDown"),
      key("x"), // mark seg-0003 first
      key("ArrowUp"),
      key("x"), // then seg-0002
      key("m"),
    );
    expect(step.effect).toEqual({ kind: "merge", ids: ["seg-0002", "seg-0003"] });
  });

  it("marked non-consecutive cues toast and emit no request", () => {
    const step = feed(
      loaded(4),
      key("x"),
      key("ArrowDown"),
      key("ArrowDown"),
      key("x"),
      key("m"),
    );
    expect(step.effect).toBeNull();
    expect(step.state.toast).toMatch(/not consecutive/);
    expect(step.state.busy).toBe(false);
  });

  it("x toggles a mark off again and Escape clears all marks", () => {
    let state = feed(loaded(3), key("x")).state;
    expect(state.marked).toEqual(["seg-0001"]);
    state = feed(state, key("x")).state;
    expect(state.marked).toEqual([]);
    state = feed(state, key("x"), key("ArrowDown"), key("x"), key("Escape")).state;
    expect(state.marked).toEqual([]);
  });
});

describe("timing and delete", () => {
  it("Shift+ArrowRight shifts the cue by one nudge step", () => {
    const step = feed(loaded(), key("ArrowRight", true));
    expect(step.effect).toEqual({
      kind: "patch",
      id: "seg-0001",
      fields: { start_ms: 100, end_ms: 1000 },
    });
  });

  it("Shift+ArrowLeft refuses to shift before zero", () => {
    const step = feed(loaded(), key("ArrowLeft", true));
    expect(step.effect).toBeNull();
    expect(step.state.toast).toMatch(/before 00:00:00,000/);
  });

  it("the nudge step follows the configured sampling period", () => {
    const state = feed(loaded(), { type: "configured", nudgeMs: 40 }).state;
    const step = reduce(state, key("ArrowRight", true));
    expect(step.effect).toEqual({
      kind: "patch",
      id: "seg-0001",
      fields: { start_ms: 40, end_ms: 940 },
    });
  });

  it("Delete removes the selected cue", () => {
    const step = feed(loaded(3), key("ArrowDown"), key("Delete"));
    expect(step.effect).toEqual({ kind: "remove", id: "seg-0002" });
    expect(step.state.busy).toBe(true);
  });

  it("mutations are refused while one is in flight", () => {
    const busyState = feed(loaded(4), key("Delete")).state;
    for (const blocked of [key("m"), key("Delete"), key("ArrowRight", true)]) {
      const step = reduce(busyState, blocked);
      expect(step.effect).toBeNull();
      expect(step.state.toast).toMatch(/still saving/);
    }
  });
});

describe("server replies", () => {
  it("applied swaps in the payload, clears busy and focuses the merged cue", () => {
    const busyState = feed(loaded(4), key("m")).state;
    const after = rows(3).map((s, i) => (i === 0 ? { ...s, id: "seg-r1", end_ms: 1900 } : s));
    const step = reduce(busyState, {
      type: "applied",
      payload: { revision: 1, segments: after },
      focusId: "seg-r1",
    });
    expect(step.state.busy).toBe(false);
    expect(step.state.revision).toBe(1);
    expect(step.state.selectedId).toBe("seg-r1");
    expect(step.state.marked).toEqual([]);
    expect(step.state.mode).toBe("browse");
  });

  it("selection falls to the nearest index when its cue disappears", () => {
    const state = feed(loaded(3), key("ArrowDown"), key("ArrowDown")).state;
    const remaining = rows(3).slice(0, 2);
    const step = reduce(state, {
      type: "applied",
      payload: { revision: 1, segments: remaining },
      focusId: null,
    });
    expect(step.state.selectedId).toBe("seg-0002");
  });

  it("a rejection clears busy and shows the server's message", () => {
    const busyState = feed(loaded(), key("Delete")).state;
    const step = reduce(busyState, { type: "rejected", message: "start must precede end" });
    expect(step.state.busy).toBe(false);
    expect(step.state.toast).toBe("start must precede end");
  });

  it("a conflict prompts for reload and r performs it once", () => {
    const busyState = feed(loaded(), key("Delete")).state;
    const conflicted = reduce(busyState, { type: "conflicted", revision: 9 }).state;
    expect(conflicted.conflict).toBe(true);
    expect(conflicted.toast).toMatch(/press r to reload/);
    expect(conflicted.toast).toMatch(/revision 9/);

    const reloading = reduce(conflicted, key("r"));
    expect(reloading.effect).toEqual({ kind: "reload" });
    expect(reloading.state.conflict).toBe(false);

    // without a pending conflict r is inert
    expect(reduce(loaded(), key("r")).effect).toBeNull();
  });
});

describe("frame preview", () => {
  it("scrub clamps to the selected cue's span", () => {
    const state = loaded(3);
    const low = reduce(state, { type: "scrub", tMs: -50 });
    expect(low.effect).toEqual({ kind: "frame", tMs: 0 });
    const high = reduce(state, { type: "scrub", tMs: 99_999 });
    expect(high.effect).toEqual({ kind: "frame", tMs: 900 });
    const inside = reduce(state, { type: "scrub", tMs: 333 });
    expect(inside.effect).toEqual({ kind: "frame", tMs: 333 });
    expect(inside.state.preview.status).toBe("loading");
  });

  it("a failed frame shows as failed and retry re-requests the same time", () => {
    const state = loaded();
    const failed = reduce(state, { type: "frameFailed", tMs: 450 }).state;
    expect(failed.preview.status).toBe("failed");

    const retry = reduce(failed, { type: "retryFrame" });
    expect(retry.effect).toEqual({ kind: "frame", tMs: 450 });
    expect(retry.state.preview.status).toBe("loading");
  });

  it("stale frame replies are ignored", () => {
    const state = feed(loaded(3), key("ArrowDown")).state;
    const step = reduce(state, { type: "frameLoaded", tMs: 450, url: "blob:stale" });
    expect(step.state.preview.url).toBeNull();
    expect(step.state.preview.status).toBe("loading");
  });

  it("a matching frame reply becomes the preview image", () => {
    const step = reduce(loaded(), { type: "frameLoaded", tMs: 450, url: "blob:fresh" });
    expect(step.state.preview).toEqual({ tMs: 450, status: "ready", url: "blob:fresh" });
  });
});
