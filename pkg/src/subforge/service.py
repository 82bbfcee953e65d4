"""Local HTTP service exposing one subtitle project to the editor UI.

One process, one project, one writer: every mutation happens under a lock,
bumps the revision, and lands on disk atomically before the response goes
out. Reads see consistent snapshots. Binds loopback by default.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
import re
import shlex
import subprocess
import sys
import threading
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable
from urllib.parse import parse_qs, unquote, urlparse

from .config import PipelineConfig, config_to_dict
from .consolidate import base_text, consolidate_stream
from .model import SEGMENT_STATUSES, SubforgeError, SubtitleSegment
from .ocr_stream import assemble_line, parse_detections
from .subio import Project, dumps_project, dumps_srt, read_project, write_file_atomic

__all__ = [
    "ApiError",
    "BadRequest",
    "NotFound",
    "Conflict",
    "ProviderError",
    "CueAnnotation",
    "annotate",
    "apply_edit",
    "merge_segments",
    "run_pipeline",
    "ProjectStore",
    "FrameProvider",
    "build_handler",
    "create_server",
    "serve",
]

log = logging.getLogger("subforge.service")


class ApiError(SubforgeError):
    status = 400


class BadRequest(ApiError):
    status = 400


class NotFound(ApiError):
    status = 404


class Conflict(ApiError):
    status = 409

    def __init__(self, revision: int):
        super().__init__("stale revision")
        self.revision = revision


class ProviderError(ApiError):
    status = 502


# ---------------------------------------------------------------------------
# cue annotations

@dataclass(frozen=True)
class CueAnnotation:
    segment_id: str
    adjacent_to_prev: bool
    sequence_start: bool


def annotate(segments: list[SubtitleSegment], cfg: PipelineConfig) -> list[CueAnnotation]:
    """Gap-based cue flags over an ordered list of live segments."""
    out: list[CueAnnotation] = []
    prev_end: int | None = None
    for seg in segments:
        adjacent = prev_end is not None and seg.start_ms - prev_end <= cfg.adjacency_gap_ms
        out.append(CueAnnotation(seg.id, adjacent, not adjacent))
        prev_end = seg.end_ms
    return out


# ---------------------------------------------------------------------------
# pure project operations

def _sorted_segments(segments) -> tuple[SubtitleSegment, ...]:
    return tuple(sorted(segments, key=lambda s: (s.start_ms, s.end_ms, s.id)))


def _live(project: Project) -> list[SubtitleSegment]:
    return [s for s in project.segments if s.status != "deleted"]


def _clean_text(text: object, cfg: PipelineConfig) -> str:
    if not isinstance(text, str):
        raise BadRequest("text must be a string")
    cleaned = text.strip()
    if not cleaned:
        raise BadRequest("text must not be empty")
    if "\r" in cleaned or re.search(r"\n\s*\n", cleaned):
        raise BadRequest("text must not contain blank lines")
    banned = sorted(set(cleaned) & cfg.denylist)
    if banned:
        raise BadRequest(f"text contains denylisted character: {banned[0]!r}")
    return cleaned


def _timestamp(value: object, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise BadRequest(f"{key} must be a non-negative integer")
    return value


def apply_edit(project: Project, segment_id: str, fields: dict) -> Project:
    """Patch one segment; timing or text changes mark it edited unless a
    status is supplied explicitly."""
    allowed = {"text", "start_ms", "end_ms", "status"}
    unknown = sorted(set(fields) - allowed)
    if unknown:
        raise BadRequest(f"unknown field: {unknown[0]}")
    if not fields:
        raise BadRequest("nothing to change")
    target = next((s for s in project.segments if s.id == segment_id), None)
    if target is None:
        raise NotFound(f"unknown segment: {segment_id}")
    text = _clean_text(fields["text"], project.config) if "text" in fields else target.text
    start_ms = _timestamp(fields["start_ms"], "start_ms") if "start_ms" in fields else target.start_ms
    end_ms = _timestamp(fields["end_ms"], "end_ms") if "end_ms" in fields else target.end_ms
    if start_ms >= end_ms:
        raise BadRequest(f"start must precede end: [{start_ms}, {end_ms})")
    if "status" in fields:
        status = fields["status"]
        if status not in SEGMENT_STATUSES:
            raise BadRequest(f"unknown status: {status!r}")
    elif (text, start_ms, end_ms) != (target.text, target.start_ms, target.end_ms):
        status = "edited"
    else:
        status = target.status
    updated = replace(target, text=text, start_ms=start_ms, end_ms=end_ms, status=status)
    segments = _sorted_segments(updated if s.id == segment_id else s for s in project.segments)
    return replace(project, segments=segments)


def merge_segments(project: Project, ids: object) -> tuple[Project, SubtitleSegment]:
    """Collapse temporally consecutive live segments into one edited segment.

    If the members agree modulo end-anchored ellipses the longest text wins;
    otherwise texts concatenate in temporal order with single spaces.
    """
    if not isinstance(ids, list) or len(ids) < 2 or not all(isinstance(i, str) for i in ids):
        raise BadRequest("ids must list at least two segment ids")
    if len(set(ids)) != len(ids):
        raise BadRequest("duplicate segment ids")
    live = _live(project)
    index = {s.id: i for i, s in enumerate(live)}
    for seg_id in ids:
        if seg_id not in index:
            raise NotFound(f"unknown segment: {seg_id}")
    positions = sorted(index[seg_id] for seg_id in ids)
    if positions != list(range(positions[0], positions[-1] + 1)):
        raise BadRequest("segments are not consecutive")
    members = live[positions[0] : positions[-1] + 1]
    bases = {base_text(s.text, project.config) for s in members}
    if len(bases) == 1:
        text = max(members, key=lambda s: len(s.text)).text
    else:
        text = " ".join(s.text for s in members)
    existing = {s.id for s in project.segments}
    new_id = f"seg-r{project.revision + 1}"
    while new_id in existing:
        new_id += "m"
    merged = SubtitleSegment(
        id=new_id,
        text=text,
        start_ms=members[0].start_ms,
        end_ms=members[-1].end_ms,
        conf=max(s.conf for s in members),
        status="edited",
    )
    removed = {s.id for s in members}
    segments = _sorted_segments(
        [s for s in project.segments if s.id not in removed] + [merged]
    )
    return replace(project, segments=segments), merged


def run_pipeline(project: Project, detections_path: str, cfg: PipelineConfig) -> Project:
    """Re-run extraction; human-touched spans shield against fresh autos."""
    try:
        with open(detections_path, "rb") as fh:
            lines = [assemble_line(frame, cfg) for frame in parse_detections(fh)]
    except OSError as exc:
        raise BadRequest(f"cannot read detections: {exc}") from exc
    auto = consolidate_stream(lines, cfg)
    kept = [s for s in project.segments if s.status != "auto"]
    shields = [s for s in kept if s.status in ("edited", "confirmed")]
    used = {s.id for s in kept}
    fresh: list[SubtitleSegment] = []
    counter = 1
    for seg in auto:
        if any(seg.start_ms < sh.end_ms and sh.start_ms < seg.end_ms for sh in shields):
            continue
        while f"seg-{counter:04d}" in used:
            counter += 1
        new_id = f"seg-{counter:04d}"
        used.add(new_id)
        fresh.append(replace(seg, id=new_id))
    return replace(project, segments=_sorted_segments(kept + fresh))


# ---------------------------------------------------------------------------
# state holders

class ProjectStore:
    """Owns the project file; mutations serialize on one lock and persist
    atomically before becoming visible."""

    def __init__(self, path: str | os.PathLike, project: Project):
        self.path = os.fspath(path)
        self._project = project
        self._lock = threading.Lock()

    @classmethod
    def open(cls, path: str | os.PathLike) -> "ProjectStore":
        with open(path, "rb") as fh:
            return cls(path, read_project(fh))

    def snapshot(self) -> Project:
        with self._lock:
            return self._project

    def mutate(self, expected_revision: int | None, fn: Callable):
        """Apply fn under the write lock; returns (project, extra)."""
        with self._lock:
            if expected_revision is not None and expected_revision != self._project.revision:
                raise Conflict(self._project.revision)
            result = fn(self._project)
            if isinstance(result, tuple):
                new_project, extra = result
            else:
                new_project, extra = result, None
            new_project = replace(new_project, revision=self._project.revision + 1)
            write_file_atomic(self.path, dumps_project(new_project))
            self._project = new_project
            return new_project, extra


def _sniff_image(data: bytes) -> str:
    if data.startswith(b"\x89PNG\r\n\x1a\n"):
        return "image/png"
    if data.startswith(b"\xff\xd8"):
        return "image/jpeg"
    if data.startswith(b"GIF8"):
        return "image/gif"
    return "application/octet-stream"


class FrameProvider:
    """Runs the external frame-grab command, memoizing one result per timestamp.

    The command template is split once; {media}, {t_ms} and {t_s} are then
    substituted per token, so quoted paths survive. Concurrent requests for
    the same timestamp collapse into a single invocation.
    """

    def __init__(self, command_template: str, media_path: str, timeout_s: float = 15.0):
        self.argv_template = shlex.split(command_template)
        if not self.argv_template:
            raise BadRequest("empty frame command")
        self.media_path = media_path
        self.timeout_s = timeout_s
        self._lock = threading.Lock()
        self._cache: dict[int, bytes] = {}
        self._inflight: dict[int, threading.Event] = {}

    def _argv(self, t_ms: int) -> list[str]:
        subs = {
            "{media}": self.media_path,
            "{t_ms}": str(t_ms),
            "{t_s}": f"{t_ms / 1000.0:.3f}",
        }
        argv = []
        for token in self.argv_template:
            for key, value in subs.items():
                token = token.replace(key, value)
            argv.append(token)
        return argv

    def fetch(self, t_ms: int) -> bytes:
        while True:
            with self._lock:
                if t_ms in self._cache:
                    return self._cache[t_ms]
                event = self._inflight.get(t_ms)
                if event is None:
                    event = threading.Event()
                    self._inflight[t_ms] = event
                    break
            # somebody else is fetching this timestamp; wait and re-check
            event.wait(self.timeout_s + 5.0)
        try:
            if not os.path.exists(self.media_path):
                raise NotFound(f"media not found: {self.media_path}")
            try:
                proc = subprocess.run(
                    self._argv(t_ms), capture_output=True, timeout=self.timeout_s
                )
            except FileNotFoundError as exc:
                raise ProviderError(f"frame command not found: {exc}") from exc
            except subprocess.TimeoutExpired as exc:
                raise ProviderError(f"frame command timed out after {self.timeout_s}s") from exc
            if proc.returncode != 0:
                tail = proc.stderr.decode("utf-8", "replace")[-300:]
                raise ProviderError(f"frame command failed ({proc.returncode}): {tail}")
            if not proc.stdout:
                raise ProviderError("frame command produced no output")
            with self._lock:
                self._cache[t_ms] = proc.stdout
            return proc.stdout
        finally:
            with self._lock:
                self._inflight.pop(t_ms, None)
            event.set()


# ---------------------------------------------------------------------------
# HTTP plumbing

def _segment_dict(seg: SubtitleSegment) -> dict:
    return {
        "id": seg.id,
        "text": seg.text,
        "start_ms": seg.start_ms,
        "end_ms": seg.end_ms,
        "conf": seg.conf,
        "status": seg.status,
    }


def _segments_payload(project: Project) -> dict:
    live = _live(project)
    rows = []
    for seg, cue in zip(live, annotate(live, project.config)):
        row = _segment_dict(seg)
        row["adjacent_to_prev"] = cue.adjacent_to_prev
        row["sequence_start"] = cue.sequence_start
        rows.append(row)
    return {"revision": project.revision, "segments": rows}


def _required_revision(body: dict) -> int:
    revision = body.get("revision")
    if isinstance(revision, bool) or not isinstance(revision, int) or revision < 0:
        raise BadRequest("revision must be a non-negative integer")
    return revision


_SEGMENT_PATH = re.compile(r"^/api/segments/([^/]+)$")


def build_handler(
    store: ProjectStore,
    frame_provider: FrameProvider | None = None,
    assets_dir: str | None = None,
) -> type[BaseHTTPRequestHandler]:
    assets_root = os.path.realpath(assets_dir) if assets_dir else None

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        server_version = "subforge"

        def log_message(self, fmt: str, *args) -> None:
            log.debug("%s %s", self.address_string(), fmt % args)

        def _send_bytes(self, code: int, data: bytes, content_type: str) -> None:
            self.send_response(code)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _send_json(self, code: int, payload: dict) -> None:
            data = (json.dumps(payload, ensure_ascii=False) + "\n").encode("utf-8")
            self._send_bytes(code, data, "application/json; charset=utf-8")

        def _read_json(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length <= 0:
                raise BadRequest("missing request body")
            raw = self.rfile.read(length)
            try:
                payload = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise BadRequest(f"bad JSON body: {exc}") from exc
            if not isinstance(payload, dict):
                raise BadRequest("body must be a JSON object")
            return payload

        def _guard(self, fn: Callable[[], None]) -> None:
            try:
                fn()
            except Conflict as exc:
                self._send_json(exc.status, {"error": str(exc), "revision": exc.revision})
            except ApiError as exc:
                self._send_json(exc.status, {"error": str(exc)})
            except SubforgeError as exc:
                self._send_json(400, {"error": str(exc)})
            except Exception:
                log.exception("internal error on %s %s", self.command, self.path)
                self._send_json(500, {"error": "internal error"})

        # -- GET ------------------------------------------------------------

        def do_GET(self) -> None:
            self._guard(self._get)

        def _get(self) -> None:
            url = urlparse(self.path)
            if url.path == "/api/project":
                project = store.snapshot()
                self._send_json(
                    200,
                    {
                        "episode_id": project.episode_id,
                        "revision": project.revision,
                        "config": config_to_dict(project.config),
                        "segment_count": len(_live(project)),
                    },
                )
            elif url.path == "/api/segments":
                self._send_json(200, _segments_payload(store.snapshot()))
            elif url.path == "/api/export/srt":
                project = store.snapshot()
                data = dumps_srt(_live(project))
                self._send_bytes(200, data, "application/x-subrip; charset=utf-8")
            elif url.path == "/api/frame":
                self._frame(url.query)
            elif assets_root is not None and not url.path.startswith("/api/"):
                self._static(url.path)
            else:
                raise NotFound(f"no such resource: {url.path}")

        def _frame(self, query: str) -> None:
            if frame_provider is None:
                raise NotFound("no media configured")
            params = parse_qs(query)
            try:
                t_ms = int(params["t_ms"][0])
            except (KeyError, IndexError, ValueError) as exc:
                raise BadRequest("t_ms must be an integer") from exc
            if t_ms < 0:
                raise BadRequest("t_ms must be non-negative")
            data = frame_provider.fetch(t_ms)
            self._send_bytes(200, data, _sniff_image(data))

        def _static(self, url_path: str) -> None:
            rel = unquote(url_path).lstrip("/") or "index.html"
            full = os.path.realpath(os.path.join(assets_root, rel))
            if os.path.commonpath([full, assets_root]) != assets_root:
                raise NotFound("no such file")
            if os.path.isdir(full):
                full = os.path.join(full, "index.html")
            if not os.path.isfile(full):
                raise NotFound(f"no such file: {url_path}")
            ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
            with open(full, "rb") as fh:
                self._send_bytes(200, fh.read(), ctype)

        # -- mutations --------------------------------------------------------

        def do_PATCH(self) -> None:
            self._guard(self._patch)

        def _patch(self) -> None:
            match = _SEGMENT_PATH.match(urlparse(self.path).path)
            if not match:
                raise NotFound(f"no such resource: {self.path}")
            seg_id = unquote(match.group(1))
            body = self._read_json()
            revision = _required_revision(body)
            fields = {k: v for k, v in body.items() if k != "revision"}
            project, _ = store.mutate(revision, lambda p: apply_edit(p, seg_id, fields))
            updated = next(s for s in project.segments if s.id == seg_id)
            self._send_json(200, {"revision": project.revision, "segment": _segment_dict(updated)})

        def do_DELETE(self) -> None:
            self._guard(self._delete)

        def _delete(self) -> None:
            url = urlparse(self.path)
            match = _SEGMENT_PATH.match(url.path)
            if not match:
                raise NotFound(f"no such resource: {self.path}")
            seg_id = unquote(match.group(1))
            params = parse_qs(url.query)
            try:
                revision = int(params["revision"][0])
            except (KeyError, IndexError, ValueError) as exc:
                raise BadRequest("revision must be an integer") from exc
            project, _ = store.mutate(
                revision, lambda p: apply_edit(p, seg_id, {"status": "deleted"})
            )
            self._send_json(200, {"revision": project.revision})

        def do_POST(self) -> None:
            self._guard(self._post)

        def _post(self) -> None:
            path = urlparse(self.path).path
            if path == "/api/segments/merge":
                body = self._read_json()
                revision = _required_revision(body)
                project, merged = store.mutate(
                    revision, lambda p: merge_segments(p, body.get("ids"))
                )
                self._send_json(
                    200, {"revision": project.revision, "segment": _segment_dict(merged)}
                )
            elif path == "/api/pipeline/run":
                body = self._read_json()
                detections_path = body.get("detections_path")
                if not isinstance(detections_path, str) or not detections_path:
                    raise BadRequest("detections_path must be a non-empty string")
                project, _ = store.mutate(
                    None, lambda p: run_pipeline(p, detections_path, p.config)
                )
                self._send_json(
                    200,
                    {"revision": project.revision, "segment_count": len(_live(project))},
                )
            else:
                raise NotFound(f"no such resource: {path}")

    return Handler


def create_server(
    project_path: str | os.PathLike,
    media_path: str | None = None,
    frame_cmd: str | None = None,
    port: int = 0,
    host: str = "127.0.0.1",
    assets_dir: str | None = None,
) -> ThreadingHTTPServer:
    store = ProjectStore.open(project_path)
    provider = FrameProvider(frame_cmd, media_path) if frame_cmd and media_path else None
    server = ThreadingHTTPServer((host, port), build_handler(store, provider, assets_dir))
    server.daemon_threads = True
    return server


def serve(
    project_path: str | os.PathLike,
    media_path: str | None,
    frame_cmd: str | None,
    port: int,
    host: str = "127.0.0.1",
    assets_dir: str | None = None,
) -> None:
    server = create_server(project_path, media_path, frame_cmd, port, host, assets_dir)
    bound_host, bound_port = server.server_address[:2]
    print(f"listening on http://{bound_host}:{bound_port}/", file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    finally:
        server.server_close()
