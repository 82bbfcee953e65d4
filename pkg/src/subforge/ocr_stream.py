"""Frame detections: JSON-lines parsing and collapse to one line per frame."""

from __future__ import annotations

import json
from typing import IO, Iterable, Iterator

from .config import PipelineConfig
from .model import FrameDetection, FrameLine, SubforgeError, TextBox

__all__ = ["DetectionParseError", "parse_detections", "assemble_line"]


class DetectionParseError(SubforgeError):
    pass


def _number(value: object) -> bool:
    return not isinstance(value, bool) and isinstance(value, (int, float))


def _parse_box(raw: object, lineno: int) -> TextBox:
    if not isinstance(raw, dict):
        raise DetectionParseError(f"line {lineno}: box must be an object, got {raw!r}")
    text = raw.get("text")
    if not isinstance(text, str) or not text:
        raise DetectionParseError(f"line {lineno}: box text must be a non-empty string")
    conf = raw.get("conf")
    if not _number(conf) or not 0.0 <= conf <= 1.0:
        raise DetectionParseError(f"line {lineno}: conf out of [0,1]: {conf!r}")
    bbox = raw.get("bbox")
    if not isinstance(bbox, list) or len(bbox) != 4 or not all(_number(v) for v in bbox):
        raise DetectionParseError(f"line {lineno}: bbox must be [x0, y0, x1, y1]")
    x0, y0, x1, y1 = (float(v) for v in bbox)
    if not all(0.0 <= v <= 1.0 for v in (x0, y0, x1, y1)):
        raise DetectionParseError(f"line {lineno}: bbox out of [0,1]: {bbox!r}")
    if not (x0 < x1 and y0 < y1):
        raise DetectionParseError(f"line {lineno}: bbox must satisfy x0 < x1 and y0 < y1")
    return TextBox(text=text, conf=float(conf), x0=x0, y0=y0, x1=x1, y1=y1)


def parse_detections(stream: IO) -> Iterator[FrameDetection]:
    """Yield one FrameDetection per JSON line, validating as we go."""
    last_t: int | None = None
    for lineno, raw_line in enumerate(stream, 1):
        if isinstance(raw_line, bytes):
            raw_line = raw_line.decode("utf-8")
        if not raw_line.strip():
            continue
        try:
            record = json.loads(raw_line)
        except json.JSONDecodeError as exc:
            raise DetectionParseError(f"line {lineno}: bad JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise DetectionParseError(f"line {lineno}: record must be an object")
        t_ms = record.get("t_ms")
        if isinstance(t_ms, bool) or not isinstance(t_ms, int) or t_ms < 0:
            raise DetectionParseError(f"line {lineno}: t_ms must be a non-negative integer")
        if last_t is not None and t_ms <= last_t:
            raise DetectionParseError(
                f"line {lineno}: timestamps must increase: {t_ms} after {last_t}"
            )
        last_t = t_ms
        boxes = record.get("boxes")
        if not isinstance(boxes, list):
            raise DetectionParseError(f"line {lineno}: boxes must be a list")
        yield FrameDetection(t_ms=t_ms, boxes=tuple(_parse_box(b, lineno) for b in boxes))


def _box_order(item: tuple[TextBox, str]) -> tuple:
    box, text = item
    # left-to-right; the remaining fields only break exact ties so that
    # permuting the input list cannot change the output
    return (box.x0, box.y0, box.x1, box.y1, text, box.conf)


def assemble_line(frame: FrameDetection, cfg: PipelineConfig) -> FrameLine:
    """Collapse one frame's boxes into a single left-to-right subtitle line.

    Boxes whose center falls outside the region of interest are ignored, as
    are boxes at or below the confidence gate. The line confidence is the
    mean of the surviving box confidences weighted by text length.
    """
    rx0, ry0, rx1, ry1 = cfg.roi
    kept: list[tuple[TextBox, str]] = []
    for box in frame.boxes:
        cx, cy = box.center()
        if not (rx0 <= cx <= rx1 and ry0 <= cy <= ry1):
            continue
        if box.conf <= cfg.conf_gate:  # strict gate: equal-to-gate is dropped
            continue
        text = " ".join(box.text.split())
        if not text:
            continue
        kept.append((box, text))
    if not kept:
        return FrameLine(frame.t_ms, "", 0.0)
    kept.sort(key=_box_order)
    joined = " ".join(text for _, text in kept)
    weight = sum(len(text) for _, text in kept)
    conf = sum(box.conf * len(text) for box, text in kept) / weight
    return FrameLine(frame.t_ms, joined, conf)
