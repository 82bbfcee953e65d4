"""Folding frame lines into subtitle segments.

The stream is reduced with a single active run. A run absorbs frames whose
text is the same modulo end-anchored ellipses, or within a small edit
distance budget scaled by the shorter text's length; anything else closes
the run. Runs shorter than the retention threshold are noise and dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .config import PipelineConfig
from .model import FrameLine, SubtitleSegment

__all__ = [
    "edit_distance",
    "strip_denylist",
    "base_text",
    "is_similar",
    "consolidate_stream",
]

# Similarity budget keyed to the shorter text: very short lines must match
# exactly, mid-length lines may differ by one edit, longer ones by two.
_EXACT_MAX_LEN = 2
_ONE_EDIT_MAX_LEN = 6
_ONE_EDIT = 1
_TWO_EDITS = 2


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance over code points (insert, delete, substitute)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def is_similar(a: str, b: str) -> bool:
    """Whether two lines are close enough to be the same on-screen subtitle."""
    shorter = min(len(a), len(b))
    if shorter <= _EXACT_MAX_LEN:
        return a == b
    budget = _ONE_EDIT if shorter <= _ONE_EDIT_MAX_LEN else _TWO_EDITS
    return edit_distance(a, b) <= budget


def strip_denylist(text: str, cfg: PipelineConfig) -> str:
    """Drop denylisted characters, collapse whitespace runs, trim the ends."""
    cleaned = "".join(ch for ch in text if ch not in cfg.denylist)
    return " ".join(cleaned.split())


def base_text(text: str, cfg: PipelineConfig) -> str:
    """Text with end-anchored ellipsis marks stripped; interior ones are content."""
    marks = sorted(cfg.ellipsis_set, key=len, reverse=True)
    t = text.strip()
    changed = True
    while changed:
        changed = False
        for mark in marks:
            while t.startswith(mark):
                t = t[len(mark):]
                changed = True
            while t.endswith(mark):
                t = t[: -len(mark)]
                changed = True
        if changed:
            t = t.strip()
    return t


@dataclass
class _Run:
    text: str
    conf: float
    start_ms: int
    last_seen_ms: int


def consolidate_stream(
    lines: Iterable[FrameLine], cfg: PipelineConfig
) -> list[SubtitleSegment]:
    """Fold timestamp-ordered frame lines into retained subtitle segments."""
    period = cfg.sampling_period_ms
    out: list[SubtitleSegment] = []

    def close(run: _Run) -> None:
        # a frame stays on screen until the next sample
        end = run.last_seen_ms + period
        if end - run.start_ms >= cfg.retention_t_ms:
            out.append(
                SubtitleSegment(
                    id=f"seg-{len(out) + 1:04d}",
                    text=run.text,
                    start_ms=run.start_ms,
                    end_ms=end,
                    conf=run.conf,
                    status="auto",
                )
            )

    run: _Run | None = None
    last_t: int | None = None
    for line in lines:
        if last_t is not None and line.t_ms <= last_t:
            raise ValueError(f"frame timestamps must increase: {line.t_ms} after {last_t}")
        last_t = line.t_ms
        text = strip_denylist(line.text, cfg)
        if not text:
            # a single missing frame is tolerated, a longer blank gap closes
            if run is not None and line.t_ms - run.last_seen_ms > period:
                close(run)
                run = None
            continue
        if run is not None and line.t_ms - run.last_seen_ms > 2 * period:
            close(run)
            run = None
        if run is None:
            run = _Run(text, line.conf, line.t_ms, line.t_ms)
            continue
        if base_text(text, cfg) == base_text(run.text, cfg):
            if len(text) > len(run.text):
                run.text = text  # the longer variant wins, ellipses and all
            run.conf = max(run.conf, line.conf)
            run.last_seen_ms = line.t_ms
        elif is_similar(text, run.text):
            if line.conf > run.conf:
                run.text = text  # ties keep the incumbent
            run.conf = max(run.conf, line.conf)
            run.last_seen_ms = line.t_ms
        else:
            close(run)
            run = _Run(text, line.conf, line.t_ms, line.t_ms)
    if run is not None:
        close(run)
    return out
