/**
 * Browser entry point. Looks up the static DOM from index.html and wires
 * input events into the controller; the service serves this bundle when
 * started with --assets pointing at the frontend directory.
 */

import { makeClient } from "./api.js";
import { EditorController } from "./controller.js";
import { render, type EditorDom } from "./render.js";

function grab<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing #${id}`);
  }
  return el as T;
}

const dom: EditorDom = {
  list: grab("cue-list"),
  detail: grab("cue-detail"),
  editor: grab<HTMLTextAreaElement>("cue-editor"),
  editorWrap: grab("editor-wrap"),
  toast: grab("toast"),
  frame: grab<HTMLImageElement>("frame"),
  framePlaceholder: grab("frame-placeholder"),
  retry: grab<HTMLElement>("frame-retry"),
  scrub: grab<HTMLInputElement>("scrub"),
  status: grab("status"),
};

const controller = new EditorController(makeClient(""), (state) => render(state, dom));

// keys the browse-mode dispatcher owns; everything else stays with the browser
const HANDLED = new Set([
  "ArrowUp", "ArrowDown", "ArrowLeft", "ArrowRight",
  "Enter", "Escape", "Delete", " ",
  "e", "j", "k", "m", "r", "x",
]);

document.addEventListener("keydown", (ev) => {
  if (ev.target === dom.editor) {
    // inside the textarea only Enter (save) and Escape (discard) are ours;
    // Shift+Enter keeps inserting a newline
    if (ev.key === "Enter" && !ev.shiftKey) {
      ev.preventDefault();
      controller.key("Enter");
    } else if (ev.key === "Escape") {
      ev.preventDefault();
      controller.key("Escape");
    }
    return;
  }
  if (ev.altKey || ev.ctrlKey || ev.metaKey || !HANDLED.has(ev.key)) {
    return;
  }
  ev.preventDefault();
  controller.key(ev.key, ev.shiftKey);
});

function rowId(ev: Event): string | null {
  const el = ev.target as HTMLElement | null;
  const row = el?.closest?.("li[data-id]") as HTMLElement | null;
  return row?.dataset.id ?? null;
}

dom.list.addEventListener("click", (ev) => {
  const id = rowId(ev);
  if (id) {
    controller.dispatch({ type: "activate", id });
  }
});
dom.list.addEventListener("dblclick", (ev) => {
  const id = rowId(ev);
  if (id) {
    controller.dispatch({ type: "open", id });
  }
});
dom.editor.addEventListener("input", () => {
  controller.dispatch({ type: "draft", text: dom.editor.value });
});
dom.scrub.addEventListener("input", () => {
  controller.dispatch({ type: "scrub", tMs: Number(dom.scrub.value) });
});
dom.retry.addEventListener("click", () => {
  controller.dispatch({ type: "retryFrame" });
});

void controller.start().catch((err: unknown) => {
  dom.toast.textContent = `failed to load project: ${String(err)}`;
  dom.toast.classList.add("visible");
});
