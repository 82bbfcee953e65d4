/**
 * DOM rendering. Each pass rebuilds the cue list and patches the side pane
 * in place. Cue colours derive only from the server's annotation flags:
 * yellow marks a cue adjacent to its predecessor, red a sequence start.
 */

import type { EditorState, SegmentRow } from "./types.js";

export function formatTimecode(ms: number): string {
  const pad = (n: number, width: number) => String(n).padStart(width, "0");
  const h = Math.floor(ms / 3_600_000);
  const m = Math.floor(ms / 60_000) % 60;
  const s = Math.floor(ms / 1000) % 60;
  return `${pad(h, 2)}:${pad(m, 2)}:${pad(s, 2)},${pad(ms % 1000, 3)}`;
}

export function cueClasses(seg: SegmentRow, state: EditorState): string[] {
  const classes = ["cue"];
  if (seg.adjacent_to_prev) {
    classes.push("adjacent");
  }
  if (seg.sequence_start) {
    classes.push("sequence-start");
  }
  if (seg.id === state.selectedId) {
    classes.push("selected");
  }
  if (state.marked.includes(seg.id)) {
    classes.push("marked");
  }
  return classes;
}

export function renderSegmentList(state: EditorState, list: HTMLElement): void {
  const doc = list.ownerDocument;
  list.textContent = "";
  state.segments.forEach((seg, i) => {
    const row = doc.createElement("li");
    row.className = cueClasses(seg, state).join(" ");
    row.dataset.id = seg.id;

    const index = doc.createElement("span");
    index.className = "index";
    index.textContent = String(i + 1);

    const time = doc.createElement("span");
    time.className = "time";
    time.textContent = `${formatTimecode(seg.start_ms)} --> ${formatTimecode(seg.end_ms)}`;

    const text = doc.createElement("span");
    text.className = "text";
    text.textContent = seg.text;

    const status = doc.createElement("span");
    status.className = `status ${seg.status}`;
    status.textContent = seg.status;

    row.append(index, time, text, status);
    list.append(row);
  });
}

export interface EditorDom {
  list: HTMLElement;
  detail: HTMLElement;
  editor: HTMLTextAreaElement;
  editorWrap: HTMLElement;
  toast: HTMLElement;
  frame: HTMLImageElement;
  framePlaceholder: HTMLElement;
  retry: HTMLElement;
  scrub: HTMLInputElement;
  status: HTMLElement;
}

export function render(state: EditorState, dom: EditorDom): void {
  renderSegmentList(state, dom.list);

  dom.status.textContent = `revision ${state.revision}${state.busy ? " · saving" : ""}`;
  dom.toast.textContent = state.toast ?? "";
  dom.toast.classList.toggle("visible", state.toast !== null);

  const seg = state.segments.find((s) => s.id === state.selectedId) ?? null;
  dom.detail.textContent = seg
    ? `${formatTimecode(seg.start_ms)} --> ${formatTimecode(seg.end_ms)}` +
      ` · conf ${seg.conf.toFixed(2)} · ${seg.status}`
    : "no cue selected";

  const editing = state.mode === "edit";
  dom.editorWrap.classList.toggle("hidden", !editing);
  if (editing) {
    if (dom.editor.value !== state.draft) {
      dom.editor.value = state.draft;
    }
    if (dom.editor.ownerDocument.activeElement !== dom.editor) {
      dom.editor.focus();
    }
  }

  // preview pane: the scrubber covers the selected cue's span
  if (seg) {
    dom.scrub.min = String(seg.start_ms);
    dom.scrub.max = String(seg.end_ms);
    dom.scrub.disabled = false;
    if (state.preview.tMs !== null) {
      dom.scrub.value = String(state.preview.tMs);
    }
  } else {
    dom.scrub.disabled = true;
  }
  const showImage = state.preview.status === "ready" && state.preview.url !== null;
  dom.frame.classList.toggle("hidden", !showImage);
  if (showImage && dom.frame.getAttribute("src") !== state.preview.url) {
    dom.frame.src = state.preview.url as string;
  }
  dom.framePlaceholder.classList.toggle("hidden", showImage);
  if (!showImage) {
    dom.framePlaceholder.textContent =
      state.preview.status === "failed"
        ? "frame unavailable"
        : state.preview.status === "loading"
          ? "loading frame"
          : "no frame";
  }
  dom.retry.classList.toggle("hidden", state.preview.status !== "failed");
}
