"""Readers and writers for the on-disk formats.

Everything here is byte-stable: writing the same values twice produces the
same bytes, LF is the only line terminator emitted, and encodings are
UTF-8 without BOM. Readers are a little more forgiving than writers.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass
from typing import IO, Iterable

from .config import ConfigError, PipelineConfig, config_to_dict, validate_config
from .miner import VERDICTS, CandidateSegment, EpisodeManifest
from .model import (
    INTERVAL_LABELS,
    SEGMENT_STATUSES,
    LabeledInterval,
    SubforgeError,
    SubtitleSegment,
    normalize_track,
)

__all__ = [
    "Project",
    "SrtError",
    "SrtParseError",
    "SmadParseError",
    "ProjectParseError",
    "ManifestParseError",
    "format_timecode",
    "parse_timecode",
    "dumps_srt",
    "write_srt",
    "read_srt",
    "read_smad",
    "write_smad",
    "read_project",
    "write_project",
    "dumps_project",
    "read_manifest",
    "write_manifest",
    "write_file_atomic",
]


class SrtError(SubforgeError):
    pass


class SrtParseError(SrtError):
    pass


class SmadParseError(SubforgeError):
    pass


class ProjectParseError(SubforgeError):
    pass


class ManifestParseError(SubforgeError):
    pass


@dataclass(frozen=True)
class Project:
    """One episode's editable subtitle document plus the config that made it."""

    episode_id: str
    revision: int
    config: PipelineConfig
    segments: tuple[SubtitleSegment, ...]


# ---------------------------------------------------------------------------
# timecodes

_TIMECODE_RE = re.compile(r"^(\d{2,}):([0-5]\d):([0-5]\d),(\d{3})$")
_TIMELINE_RE = re.compile(
    r"^(\d{2,}):([0-5]\d):([0-5]\d),(\d{3})\s*-->\s*(\d{2,}):([0-5]\d):([0-5]\d),(\d{3})$"
)


def format_timecode(ms: int) -> str:
    """Milliseconds to HH:MM:SS,mmm (hours pad to two digits, then grow)."""
    if ms < 0:
        raise ValueError(f"negative timecode: {ms}")
    h, rem = divmod(ms, 3_600_000)
    m, rem = divmod(rem, 60_000)
    s, milli = divmod(rem, 1000)
    return f"{h:02d}:{m:02d}:{s:02d},{milli:03d}"


def parse_timecode(text: str) -> int:
    match = _TIMECODE_RE.match(text)
    if not match:
        raise SrtParseError(f"bad timecode: {text!r}")
    h, m, s, milli = (int(g) for g in match.groups())
    return h * 3_600_000 + m * 60_000 + s * 1000 + milli


# ---------------------------------------------------------------------------
# SRT

def dumps_srt(segments: Iterable[SubtitleSegment]) -> bytes:
    """Render segments as an SRT document (LF line ends, UTF-8, no BOM)."""
    parts: list[str] = []
    prev: SubtitleSegment | None = None
    for index, seg in enumerate(segments, 1):
        if seg.status == "deleted":
            raise SrtError(f"segment {seg.id}: deleted segments cannot be exported")
        if seg.end_ms <= seg.start_ms:
            raise SrtError(f"segment {seg.id}: empty time range")
        if prev is not None and seg.start_ms < prev.start_ms:
            raise SrtError(f"segment {seg.id}: segments out of order")
        if prev is not None and seg.start_ms < prev.end_ms:
            raise SrtError(f"segment {seg.id}: overlaps {prev.id}")
        if not seg.text.strip():
            raise SrtError(f"segment {seg.id}: empty text")
        if "\r" in seg.text or re.search(r"\n\s*\n", seg.text) or seg.text.strip("\n") != seg.text:
            raise SrtError(f"segment {seg.id}: text would break SRT framing")
        parts.append(
            f"{index}\n"
            f"{format_timecode(seg.start_ms)} --> {format_timecode(seg.end_ms)}\n"
            f"{seg.text}\n\n"
        )
        prev = seg
    return "".join(parts).encode("utf-8")


def write_srt(segments: Iterable[SubtitleSegment], stream: IO[bytes]) -> None:
    stream.write(dumps_srt(segments))


def read_srt(stream: IO) -> list[SubtitleSegment]:
    """Parse an SRT document, tolerating CRLF and a missing trailing blank.

    Parsed segments get fresh sequential ids, confidence 1.0 and status
    "edited": a subtitle file reflects human judgment, not OCR scores.
    """
    data = stream.read()
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if text.startswith("﻿"):
        text = text[1:]
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    body = text.strip("\n")
    if not body.strip():
        return []
    segments: list[SubtitleSegment] = []
    blocks = [b for b in re.split(r"\n{2,}", body) if b.strip()]
    for rec_no, block in enumerate(blocks, 1):
        lines = block.split("\n")
        if len(lines) < 3:
            raise SrtParseError(f"record {rec_no}: truncated record")
        if not re.fullmatch(r"[0-9]+", lines[0].strip()):
            raise SrtParseError(f"record {rec_no}: bad index line: {lines[0]!r}")
        match = _TIMELINE_RE.match(lines[1].strip())
        if not match:
            raise SrtParseError(f"record {rec_no}: bad time line: {lines[1]!r}")
        start_ms = parse_timecode(lines[1].strip().split("-->")[0].strip())
        end_ms = parse_timecode(lines[1].strip().split("-->")[1].strip())
        if end_ms <= start_ms:
            raise SrtParseError(f"record {rec_no}: start must precede end")
        segments.append(
            SubtitleSegment(
                id=f"seg-{rec_no:04d}",
                text="\n".join(lines[2:]),
                start_ms=start_ms,
                end_ms=end_ms,
                conf=1.0,
                status="edited",
            )
        )
    return segments


# ---------------------------------------------------------------------------
# SMAD interval tracks

def read_smad(stream: IO) -> list[LabeledInterval]:
    """Parse a classifier track; the result is sorted and coalesced per label."""
    data = stream.read()
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SmadParseError(f"bad JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise SmadParseError("track must be a JSON array")
    intervals: list[LabeledInterval] = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise SmadParseError(f"interval {i}: must be an object")
        start = item.get("start_ms")
        end = item.get("end_ms")
        label = item.get("label")
        for key, value in (("start_ms", start), ("end_ms", end)):
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise SmadParseError(f"interval {i}: {key} must be a non-negative integer")
        if end <= start:
            raise SmadParseError(f"interval {i}: start must precede end")
        if label not in INTERVAL_LABELS:
            raise SmadParseError(f"interval {i}: unknown label: {label!r}")
        intervals.append(LabeledInterval(start, end, label))
    return normalize_track(intervals)


def write_smad(track: Iterable[LabeledInterval], stream: IO[bytes]) -> None:
    payload = [
        {"start_ms": iv.start_ms, "end_ms": iv.end_ms, "label": iv.label}
        for iv in normalize_track(list(track))
    ]
    stream.write((json.dumps(payload, ensure_ascii=False, indent=2) + "\n").encode("utf-8"))


# ---------------------------------------------------------------------------
# project files

def _parse_segment(raw: object, where: str) -> SubtitleSegment:
    if not isinstance(raw, dict):
        raise ProjectParseError(f"{where}: segment must be an object")
    seg_id = raw.get("id")
    if not isinstance(seg_id, str) or not seg_id:
        raise ProjectParseError(f"{where}: id must be a non-empty string")
    text = raw.get("text")
    if not isinstance(text, str):
        raise ProjectParseError(f"{where}: text must be a string")
    start = raw.get("start_ms")
    end = raw.get("end_ms")
    for key, value in (("start_ms", start), ("end_ms", end)):
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ProjectParseError(f"{where}: {key} must be a non-negative integer")
    if end <= start:
        raise ProjectParseError(f"{where}: start must precede end")
    conf = raw.get("conf")
    if isinstance(conf, bool) or not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
        raise ProjectParseError(f"{where}: conf out of [0,1]: {conf!r}")
    status = raw.get("status")
    if status not in SEGMENT_STATUSES:
        raise ProjectParseError(f"{where}: unknown status: {status!r}")
    return SubtitleSegment(seg_id, text, start, end, float(conf), status)


def read_project(stream: IO) -> Project:
    data = stream.read()
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProjectParseError(f"bad JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ProjectParseError("project must be a JSON object")
    episode_id = raw.get("episode_id")
    if not isinstance(episode_id, str) or not episode_id:
        raise ProjectParseError("episode_id must be a non-empty string")
    revision = raw.get("revision")
    if isinstance(revision, bool) or not isinstance(revision, int) or revision < 0:
        raise ProjectParseError("revision must be a non-negative integer")
    cfg_raw = raw.get("config")
    if not isinstance(cfg_raw, dict):
        raise ProjectParseError("config must be an object")
    try:
        cfg = validate_config(cfg_raw)
    except ConfigError as exc:
        raise ProjectParseError(f"bad embedded config: {exc}") from exc
    seg_raw = raw.get("segments")
    if not isinstance(seg_raw, list):
        raise ProjectParseError("segments must be a list")
    segments = [_parse_segment(item, f"segment {i}") for i, item in enumerate(seg_raw)]
    seen: set[str] = set()
    for seg in segments:
        if seg.id in seen:
            raise ProjectParseError(f"duplicate segment id: {seg.id}")
        seen.add(seg.id)
    segments.sort(key=lambda s: (s.start_ms, s.end_ms, s.id))
    return Project(episode_id, revision, cfg, tuple(segments))


def dumps_project(project: Project) -> bytes:
    payload = {
        "episode_id": project.episode_id,
        "revision": project.revision,
        "config": config_to_dict(project.config),
        "segments": [
            {
                "id": s.id,
                "text": s.text,
                "start_ms": s.start_ms,
                "end_ms": s.end_ms,
                "conf": s.conf,
                "status": s.status,
            }
            for s in project.segments
        ],
    }
    return (json.dumps(payload, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def write_project(project: Project, stream: IO[bytes]) -> None:
    stream.write(dumps_project(project))


# ---------------------------------------------------------------------------
# episode manifests

def read_manifest(stream: IO) -> EpisodeManifest:
    data = stream.read()
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestParseError(f"bad JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ManifestParseError("manifest must be a JSON object")
    episode_id = raw.get("episode_id")
    if not isinstance(episode_id, str) or not episode_id:
        raise ManifestParseError("episode_id must be a non-empty string")
    total_ms = raw.get("total_ms")
    if isinstance(total_ms, bool) or not isinstance(total_ms, int) or total_ms < 0:
        raise ManifestParseError("total_ms must be a non-negative integer")
    cand_raw = raw.get("candidates")
    if not isinstance(cand_raw, list):
        raise ManifestParseError("candidates must be a list")
    candidates: list[CandidateSegment] = []
    for i, item in enumerate(cand_raw):
        where = f"candidate {i}"
        if not isinstance(item, dict):
            raise ManifestParseError(f"{where}: must be an object")
        start = item.get("start_ms")
        end = item.get("end_ms")
        for key, value in (("start_ms", start), ("end_ms", end)):
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ManifestParseError(f"{where}: {key} must be a non-negative integer")
        if end <= start:
            raise ManifestParseError(f"{where}: start must precede end")
        chars = item.get("char_count")
        if isinstance(chars, bool) or not isinstance(chars, int) or chars < 1:
            raise ManifestParseError(f"{where}: char_count must be a positive integer")
        spc = item.get("secs_per_char")
        if isinstance(spc, bool) or not isinstance(spc, (int, float)) or spc <= 0:
            raise ManifestParseError(f"{where}: secs_per_char must be positive")
        ratio = item.get("music_overlap_ratio")
        if isinstance(ratio, bool) or not isinstance(ratio, (int, float)) or not 0.0 <= ratio <= 1.0:
            raise ManifestParseError(f"{where}: music_overlap_ratio out of [0,1]: {ratio!r}")
        verdict = item.get("verdict")
        if verdict not in VERDICTS:
            raise ManifestParseError(f"{where}: unknown verdict: {verdict!r}")
        candidates.append(
            CandidateSegment(
                start_ms=start,
                end_ms=end,
                subtitle_ids=[],
                char_count=chars,
                secs_per_char=float(spc),
                music_overlap_ratio=float(ratio),
                verdict=verdict,
            )
        )
    return EpisodeManifest(episode_id=episode_id, total_ms=total_ms, candidates=candidates)


def write_manifest(manifest: EpisodeManifest, stream: IO[bytes]) -> None:
    payload = {
        "episode_id": manifest.episode_id,
        "total_ms": manifest.total_ms,
        "candidates": [
            {
                "start_ms": c.start_ms,
                "end_ms": c.end_ms,
                "char_count": c.char_count,
                "secs_per_char": c.secs_per_char,
                "music_overlap_ratio": c.music_overlap_ratio,
                "verdict": c.verdict,
            }
            for c in manifest.candidates
        ],
    }
    stream.write((json.dumps(payload, ensure_ascii=False, indent=2) + "\n").encode("utf-8"))


# ---------------------------------------------------------------------------

def write_file_atomic(path: str | os.PathLike, data: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see a torn file."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".subforge-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
