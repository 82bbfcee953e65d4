"""Synthetic episodes with known ground truth, plus scoring.

All randomness flows from one explicit seed through `random.Random`
(CPython's Mersenne Twister); the generator name goes into every report so
a run can be traced back to the algorithm that produced it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .config import PipelineConfig
from .consolidate import edit_distance
from .model import FrameLine, LabeledInterval, SubforgeError, SubtitleSegment, normalize_track

__all__ = [
    "RNG_NAME",
    "GenerationError",
    "EpisodeSpec",
    "NoiseModel",
    "EvalReport",
    "generate_episode",
    "corrupt",
    "evaluate",
    "format_eval_report",
]

RNG_NAME = "python-random-mt19937"

# Distinct CJK characters, free of spaces, ellipses and denylisted marks.
_ALPHABET = (
    "天地玄黃宇宙洪荒日月盈昃辰宿列張寒來暑往秋收冬藏"
    "閏餘成歲律呂調陽雲騰致雨露結為霜金生麗水玉出崑岡"
    "劍號巨闕珠稱夜光果珍李柰菜重芥薑海鹹河淡鱗潛羽翔"
    "龍師火帝鳥官人皇始制文字乃服衣裳推位讓國有虞陶唐"
)

# A recovered segment matches a truth segment when their overlap covers at
# least this share of each side's duration.
_MATCH_MIN_OVERLAP = 0.5

_MIN_ADJACENT_DISTANCE = 4  # keeps neighboring lines dissimilar even after noise


class GenerationError(SubforgeError):
    pass


@dataclass(frozen=True)
class EpisodeSpec:
    """Generation parameters for one synthetic episode."""

    episode_ms: int = 500_000
    n_lines: int = 30
    singing_ratio: float = 0.35
    min_chars: int = 4
    max_chars: int = 12
    singing_secs_per_char: float = 0.9  # sung lines linger on screen
    speech_secs_per_char: float = 0.4
    min_gap_ms: int = 0
    max_gap_ms: int = 3000


@dataclass(frozen=True)
class NoiseModel:
    """OCR corruption knobs; everything is driven by the explicit seed."""

    seed: int
    char_sub_prob: float = 0.0
    dropout_prob: float = 0.0
    ghost_prob: float = 0.0
    conf_mean_true: float = 0.9
    conf_mean_noise: float = 0.35


def _grid_up(ms: float, period: int) -> int:
    whole = int(ms // period)
    if whole * period < ms:
        whole += 1
    return max(period, whole * period)


def _grid_near(ms: float, period: int) -> int:
    return max(period, int(round(ms / period)) * period)


def generate_episode(
    spec: EpisodeSpec, seed: int, cfg: PipelineConfig | None = None
) -> tuple[list[SubtitleSegment], list[LabeledInterval], list[FrameLine]]:
    """Lay out truth lines on the sampling grid and render a noiseless stream.

    Sung lines display around spec.singing_secs_per_char per character and get
    covering music intervals; spoken lines run faster and get speech intervals.
    Every truth line is long enough to survive retention, and neighboring
    lines are kept dissimilar so consolidation can separate them.
    """
    if cfg is None:
        cfg = PipelineConfig()
    rng = random.Random(seed)
    period = cfg.sampling_period_ms
    min_duration = _grid_up(cfg.retention_t_ms, period)

    truth: list[SubtitleSegment] = []
    track: list[LabeledInterval] = []
    cursor = 0
    prev_text = ""
    for i in range(spec.n_lines):
        gap = rng.randint(spec.min_gap_ms // period, spec.max_gap_ms // period) * period
        sing = rng.random() < spec.singing_ratio
        n_chars = rng.randint(spec.min_chars, spec.max_chars)
        for _ in range(200):
            text = "".join(rng.choice(_ALPHABET) for _ in range(n_chars))
            if not prev_text or edit_distance(text, prev_text) >= _MIN_ADJACENT_DISTANCE:
                break
        else:
            raise GenerationError("could not draw a line dissimilar from its neighbor")
        if sing:
            rate = min(max(rng.gauss(spec.singing_secs_per_char, 0.08), 0.6), 1.2)
        else:
            rate = min(max(rng.gauss(spec.speech_secs_per_char, 0.05), 0.24), 0.55)
        duration = max(_grid_near(n_chars * rate * 1000.0, period), min_duration)
        start = cursor + gap
        end = start + duration
        truth.append(SubtitleSegment(f"truth-{i + 1:03d}", text, start, end, 1.0, "confirmed"))
        if sing:
            pad_before = rng.randint(0, 4) * period
            pad_after = rng.randint(0, 4) * period
            track.append(LabeledInterval(max(0, start - pad_before), end + pad_after, "music"))
        else:
            track.append(LabeledInterval(start, end, "speech"))
        cursor = end
        prev_text = text
    if cursor > spec.episode_ms:
        raise GenerationError(
            f"content runs to {cursor} ms but the episode is {spec.episode_ms} ms"
        )
    stream = render_stream(truth, spec.episode_ms, cfg)
    return truth, normalize_track(track), stream


def render_stream(
    truth: Sequence[SubtitleSegment], episode_ms: int, cfg: PipelineConfig
) -> list[FrameLine]:
    """Noiseless frame lines at the sampling cadence over the whole episode."""
    period = cfg.sampling_period_ms
    lines: list[FrameLine] = []
    idx = 0
    for t in range(0, episode_ms, period):
        while idx < len(truth) and truth[idx].end_ms <= t:
            idx += 1
        if idx < len(truth) and truth[idx].start_ms <= t:
            lines.append(FrameLine(t, truth[idx].text, 1.0))
        else:
            lines.append(FrameLine(t, "", 0.0))
    return lines


def _draw_conf(rng: random.Random, mean: float) -> float:
    return min(1.0, max(0.0, rng.gauss(mean, 0.05)))


def corrupt(lines: Sequence[FrameLine], noise: NoiseModel) -> list[FrameLine]:
    """Apply OCR-style noise to a rendered stream.

    A visible frame is dropped whole with probability dropout_prob; otherwise
    it suffers up to two single-character substitutions, each drawn with
    probability char_sub_prob. Blank frames grow short ghost lines with
    probability ghost_prob. Corrupted frames read with low confidence.
    """
    rng = random.Random(noise.seed)
    out: list[FrameLine] = []
    for line in lines:
        if line.text:
            if rng.random() < noise.dropout_prob:
                out.append(FrameLine(line.t_ms, "", 0.0))
                continue
            text = line.text
            subs = 0
            while subs < 2 and rng.random() < noise.char_sub_prob:
                pos = rng.randrange(len(text))
                text = text[:pos] + rng.choice(_ALPHABET) + text[pos + 1:]
                subs += 1
            if text != line.text:
                out.append(FrameLine(line.t_ms, text, _draw_conf(rng, noise.conf_mean_noise)))
            else:
                out.append(FrameLine(line.t_ms, text, _draw_conf(rng, noise.conf_mean_true)))
        elif rng.random() < noise.ghost_prob:
            ghost = "".join(rng.choice(_ALPHABET) for _ in range(rng.randint(1, 2)))
            out.append(FrameLine(line.t_ms, ghost, _draw_conf(rng, noise.conf_mean_noise)))
        else:
            out.append(line)
    return out


@dataclass(frozen=True)
class EvalReport:
    truth_count: int
    recovered_count: int
    matched: int
    segment_recall: float
    segment_precision: float
    text_exact_rate: float
    mean_boundary_error_ms: float


def evaluate(
    truth: Sequence[SubtitleSegment], recovered: Sequence[SubtitleSegment]
) -> EvalReport:
    """Greedy one-to-one matching by overlap, then per-pair scores.

    A pair is matchable when the overlap covers at least half of both
    segments. Boundary error per pair is the mean of the start and end
    offsets. Empty sides score vacuously: no truth means recall 1.0, no
    recovered means precision 1.0, no matches means exact-rate 1.0.
    """
    candidates: list[tuple[int, int, int]] = []
    for i, t in enumerate(truth):
        for j, r in enumerate(recovered):
            overlap = min(t.end_ms, r.end_ms) - max(t.start_ms, r.start_ms)
            if overlap <= 0:
                continue
            if overlap >= _MATCH_MIN_OVERLAP * (t.end_ms - t.start_ms) and overlap >= (
                _MATCH_MIN_OVERLAP * (r.end_ms - r.start_ms)
            ):
                candidates.append((-overlap, i, j))
    candidates.sort()
    used_truth: set[int] = set()
    used_rec: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for _, i, j in candidates:
        if i in used_truth or j in used_rec:
            continue
        used_truth.add(i)
        used_rec.add(j)
        pairs.append((i, j))
    exact = sum(1 for i, j in pairs if truth[i].text == recovered[j].text)
    boundary = [
        (abs(truth[i].start_ms - recovered[j].start_ms) + abs(truth[i].end_ms - recovered[j].end_ms)) / 2.0
        for i, j in pairs
    ]
    return EvalReport(
        truth_count=len(truth),
        recovered_count=len(recovered),
        matched=len(pairs),
        segment_recall=len(pairs) / len(truth) if truth else 1.0,
        segment_precision=len(pairs) / len(recovered) if recovered else 1.0,
        text_exact_rate=exact / len(pairs) if pairs else 1.0,
        mean_boundary_error_ms=sum(boundary) / len(boundary) if boundary else 0.0,
    )


def format_eval_report(seed: int, noise: NoiseModel, reports: Sequence[EvalReport]) -> str:
    """Stable plain-text report; byte-identical for identical inputs."""
    lines = [
        "synthetic evaluation",
        f"rng {RNG_NAME}",
        f"seed {seed}",
        f"episodes {len(reports)}",
        f"char_sub_prob {noise.char_sub_prob:.3f}",
        f"dropout_prob {noise.dropout_prob:.3f}",
        f"ghost_prob {noise.ghost_prob:.3f}",
        "episode truth recovered matched recall precision text_exact boundary_ms",
    ]
    for i, rep in enumerate(reports, 1):
        lines.append(
            f"{i} {rep.truth_count} {rep.recovered_count} {rep.matched}"
            f" {rep.segment_recall:.4f} {rep.segment_precision:.4f}"
            f" {rep.text_exact_rate:.4f} {rep.mean_boundary_error_ms:.1f}"
        )
    count = max(len(reports), 1)
    lines.append(f"mean_recall {sum(r.segment_recall for r in reports) / count:.4f}")
    lines.append(f"mean_precision {sum(r.segment_precision for r in reports) / count:.4f}")
    lines.append(f"mean_text_exact {sum(r.text_exact_rate for r in reports) / count:.4f}")
    lines.append(
        f"mean_boundary_ms {sum(r.mean_boundary_error_ms for r in reports) / count:.1f}"
    )
    return "\n".join(lines) + "\n"
