"""Singing-candidate mining over consolidated subtitles.

Sung lines linger on screen: a line qualifies when it has enough countable
characters and its display time per character is long. Qualifying lines
chain into candidates, which the music/speech track then filters.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass, field

from .config import PipelineConfig
from .model import LabeledInterval, SubforgeError, SubtitleSegment

__all__ = [
    "VERDICTS",
    "CandidateSegment",
    "EpisodeManifest",
    "CorpusStats",
    "StatsError",
    "countable_chars",
    "is_singing_subtitle",
    "build_candidates",
    "music_overlap",
    "filter_by_smad",
    "compute_stats",
    "round_half_up",
    "format_stats",
]

VERDICTS = ("unreviewed", "singing", "not_singing")

_MS_PER_HOUR = 3_600_000.0


class StatsError(SubforgeError):
    pass


@dataclass
class CandidateSegment:
    """A possible singing passage; mutable because review stamps it in place."""

    start_ms: int
    end_ms: int
    subtitle_ids: list[str]
    char_count: int
    secs_per_char: float
    music_overlap_ratio: float = 0.0
    verdict: str = "unreviewed"


@dataclass
class EpisodeManifest:
    """Per-episode audit record tying candidates to their review state."""

    episode_id: str
    total_ms: int
    candidates: list[CandidateSegment] = field(default_factory=list)


def countable_chars(text: str, cfg: PipelineConfig) -> int:
    """Character count for the duration heuristic; spaces and ellipses do not count."""
    for mark in sorted(cfg.ellipsis_set, key=len, reverse=True):
        text = text.replace(mark, "")
    return sum(1 for ch in text if not ch.isspace())


def is_singing_subtitle(seg: SubtitleSegment, cfg: PipelineConfig) -> bool:
    """Long display per character marks a line as sung rather than spoken."""
    n = countable_chars(seg.text, cfg)
    if n == 0:
        raise ValueError(f"segment {seg.id}: no countable characters")
    if n < cfg.singing_min_chars:
        return False
    duration_s = (seg.end_ms - seg.start_ms) / 1000.0
    # strict: exactly at the threshold rate reads as speech
    return duration_s / n > cfg.singing_secs_per_char


def build_candidates(
    segments: list[SubtitleSegment], cfg: PipelineConfig
) -> list[CandidateSegment]:
    """Chain qualifying subtitles into candidates; non-qualifiers break chains."""
    out: list[CandidateSegment] = []
    chain: list[tuple[SubtitleSegment, int]] = []

    def flush() -> None:
        if not chain:
            return
        chars = sum(n for _, n in chain)
        start = chain[0][0].start_ms
        end = chain[-1][0].end_ms
        out.append(
            CandidateSegment(
                start_ms=start,
                end_ms=end,
                subtitle_ids=[seg.id for seg, _ in chain],
                char_count=chars,
                secs_per_char=(end - start) / 1000.0 / chars,
            )
        )
        chain.clear()

    live = sorted(
        (s for s in segments if s.status != "deleted"),
        key=lambda s: (s.start_ms, s.end_ms),
    )
    for seg in live:
        n = countable_chars(seg.text, cfg)
        if n == 0 or not is_singing_subtitle(seg, cfg):
            flush()
            continue
        if chain and seg.start_ms - chain[-1][0].end_ms > cfg.candidate_gap_ms:
            flush()
        chain.append((seg, n))
    flush()
    return out


def music_overlap(candidate: CandidateSegment, track: list[LabeledInterval]) -> float:
    """Fraction of the candidate covered by music; track must be normalized."""
    duration = candidate.end_ms - candidate.start_ms
    if duration <= 0:
        raise ValueError("candidate has no duration")
    covered = 0
    for iv in track:
        if iv.label != "music":
            continue
        lo = max(candidate.start_ms, iv.start_ms)
        hi = min(candidate.end_ms, iv.end_ms)
        if hi > lo:
            covered += hi - lo
    return covered / duration


def filter_by_smad(
    candidates: list[CandidateSegment],
    track: list[LabeledInterval],
    cfg: PipelineConfig,
) -> list[CandidateSegment]:
    """Keep candidates mostly inside music; every input gets its ratio stamped."""
    kept: list[CandidateSegment] = []
    for cand in candidates:
        cand.music_overlap_ratio = music_overlap(cand, track)
        if cand.music_overlap_ratio >= cfg.overlap_theta:  # inclusive threshold
            kept.append(cand)
    return kept


@dataclass(frozen=True)
class CorpusStats:
    """Corpus-level reduction and precision figures, kept at full precision."""

    episodes: int
    total_hours: float
    candidate_count: int
    candidate_hours: float
    reduction_pct: float
    filtered_count: int
    filtered_hours: float
    confirmed_count: int
    confirmed_hours: float
    precision_pct: float
    segments_per_episode: float
    min_len_s: float
    max_len_s: float


def compute_stats(
    manifests: list[EpisodeManifest], cfg: PipelineConfig | None = None
) -> CorpusStats:
    """Aggregate manifests; the config supplies the music-overlap threshold."""
    if cfg is None:
        cfg = PipelineConfig()
    if not manifests:
        raise StatsError("no manifests")
    total_ms = sum(m.total_ms for m in manifests)
    if total_ms <= 0:
        raise StatsError("zero total episode duration")
    candidates = [c for m in manifests for c in m.candidates]
    filtered = [c for c in candidates if c.music_overlap_ratio >= cfg.overlap_theta]
    singing = [c for c in candidates if c.verdict == "singing"]
    if singing and not filtered:
        raise StatsError("confirmed verdicts but zero filtered candidates")
    confirmed = [c for c in filtered if c.verdict == "singing"]

    def hours(cands: list[CandidateSegment]) -> float:
        return sum(c.end_ms - c.start_ms for c in cands) / _MS_PER_HOUR

    total_hours = total_ms / _MS_PER_HOUR
    candidate_hours = hours(candidates)
    confirmed_lens = sorted((c.end_ms - c.start_ms) / 1000.0 for c in confirmed)
    return CorpusStats(
        episodes=len(manifests),
        total_hours=total_hours,
        candidate_count=len(candidates),
        candidate_hours=candidate_hours,
        reduction_pct=100.0 * (total_hours - candidate_hours) / total_hours,
        filtered_count=len(filtered),
        filtered_hours=hours(filtered),
        confirmed_count=len(confirmed),
        confirmed_hours=hours(confirmed),
        precision_pct=100.0 * len(confirmed) / len(filtered) if filtered else 0.0,
        segments_per_episode=len(filtered) / len(manifests),
        min_len_s=confirmed_lens[0] if confirmed_lens else 0.0,
        max_len_s=confirmed_lens[-1] if confirmed_lens else 0.0,
    )


def round_half_up(value: float, ndigits: int = 1) -> float:
    """Round with ties away from zero, the way report tables are read."""
    quantum = decimal.Decimal(1).scaleb(-ndigits)
    return float(decimal.Decimal(str(value)).quantize(quantum, rounding=decimal.ROUND_HALF_UP))


def format_stats(stats: CorpusStats) -> str:
    """One `key value` line per figure; percentages at one decimal, half-up."""
    lines = [
        f"episodes {stats.episodes}",
        f"total_h {round_half_up(stats.total_hours, 2):.2f}",
        f"candidates {stats.candidate_count}",
        f"candidate_h {round_half_up(stats.candidate_hours, 2):.2f}",
        f"reduction {round_half_up(stats.reduction_pct, 1):.1f}%",
        f"filtered {stats.filtered_count}",
        f"filtered_h {round_half_up(stats.filtered_hours, 2):.2f}",
        f"confirmed {stats.confirmed_count}",
        f"confirmed_h {round_half_up(stats.confirmed_hours, 2):.2f}",
        f"precision {round_half_up(stats.precision_pct, 1):.1f}%",
        f"segments_per_episode {round_half_up(stats.segments_per_episode, 1):.1f}",
        f"min_len_s {round_half_up(stats.min_len_s, 2):.2f}",
        f"max_len_s {round_half_up(stats.max_len_s, 2):.2f}",
    ]
    return "\n".join(lines) + "\n"
