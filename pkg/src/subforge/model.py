"""Core value types shared across the pipeline.

Timestamps are plain integer milliseconds everywhere; fractions only ever
appear when formatting for humans. All spans are half-open [start, end).
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "SubforgeError",
    "TextBox",
    "FrameDetection",
    "FrameLine",
    "SubtitleSegment",
    "LabeledInterval",
    "SEGMENT_STATUSES",
    "INTERVAL_LABELS",
    "normalize_track",
]


class SubforgeError(Exception):
    """Base class for errors a caller is expected to handle."""


@dataclass(frozen=True)
class TextBox:
    """One OCR detection inside a frame, in normalized image coordinates."""

    text: str
    conf: float
    x0: float
    y0: float
    x1: float
    y1: float

    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)


@dataclass(frozen=True)
class FrameDetection:
    """Everything recognized in the frame sampled at t_ms."""

    t_ms: int
    boxes: tuple[TextBox, ...]


@dataclass(frozen=True)
class FrameLine:
    """A frame's detections flattened to a single subtitle line."""

    t_ms: int
    text: str  # "" when the frame shows nothing usable
    conf: float


SEGMENT_STATUSES = ("auto", "edited", "confirmed", "deleted")


@dataclass(frozen=True)
class SubtitleSegment:
    """A consolidated on-screen line spanning [start_ms, end_ms)."""

    id: str
    text: str
    start_ms: int
    end_ms: int
    conf: float
    status: str = "auto"


INTERVAL_LABELS = ("music", "speech")


@dataclass(frozen=True)
class LabeledInterval:
    """Half-open audio span tagged by the music/speech classifier."""

    start_ms: int
    end_ms: int
    label: str


def normalize_track(intervals: list[LabeledInterval]) -> list[LabeledInterval]:
    """Sort intervals and coalesce overlapping or touching ones per label."""
    out: list[LabeledInterval] = []
    for label in sorted({iv.label for iv in intervals}):
        run_start = run_end = None
        same = sorted(
            (iv for iv in intervals if iv.label == label),
            key=lambda x: (x.start_ms, x.end_ms),
        )
        for iv in same:
            if run_end is None:
                run_start, run_end = iv.start_ms, iv.end_ms
            elif iv.start_ms <= run_end:  # touching counts as one span
                run_end = max(run_end, iv.end_ms)
            else:
                out.append(LabeledInterval(run_start, run_end, label))
                run_start, run_end = iv.start_ms, iv.end_ms
        if run_end is not None:
            out.append(LabeledInterval(run_start, run_end, label))
    return sorted(out, key=lambda x: (x.start_ms, x.end_ms, x.label))
