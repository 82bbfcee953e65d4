"""Serialization round-trips for SRT, interval tracks, projects and manifests."""

import io
import json
import random

import pytest

from subforge.config import PipelineConfig
from subforge.miner import CandidateSegment, EpisodeManifest
from subforge.model import LabeledInterval, SubtitleSegment
from subforge.subio import (
    ManifestParseError,
    Project,
    ProjectParseError,
    SmadParseError,
    SrtError,
    SrtParseError,
    dumps_project,
    dumps_srt,
    format_timecode,
    parse_timecode,
    read_manifest,
    read_project,
    read_smad,
    read_srt,
    write_file_atomic,
    write_manifest,
    write_smad,
    write_srt,
)


def seg(idx, text, start, end, conf=0.9, status="auto"):
    return SubtitleSegment(f"seg-{idx:04d}", text, start, end, conf, status)


def parse_srt(data: bytes):
    return read_srt(io.BytesIO(data))


# --- timecodes ---


def test_timecode_formatting():
    assert format_timecode(0) == "00:00:00,000"
    assert format_timecode(1500) == "00:00:01,500"
    assert format_timecode(3_600_000) == "01:00:00,000"
    assert format_timecode(3_661_001) == "01:01:01,001"


def test_timecode_round_trip():
    rng = random.Random(5)
    for _ in range(500):
        t = rng.randrange(0, 100 * 3_600_000)
        assert parse_timecode(format_timecode(t)) == t


def test_parse_timecode_rejects_garbage():
    for bad in ("1:00:00,000", "00:61:00,000", "00:00:00.000", "nope"):
        with pytest.raises(SrtParseError):
            parse_timecode(bad)


# --- SRT writing ---


def test_srt_single_record_bytes():
    data = dumps_srt([seg(1, "你好", 0, 1500)])
    assert data == "1\n00:00:00,000 --> 00:00:01,500\n你好\n\n".encode("utf-8")


def test_srt_spec_timecode_pair():
    data = dumps_srt([seg(1, "词", 3_600_000, 3_661_001)])
    assert b"01:00:00,000 --> 01:01:01,001" in data


def test_srt_empty_list():
    assert dumps_srt([]) == b""


def test_srt_record_indices_restart_at_one():
    data = dumps_srt([seg(1, "一", 0, 1000), seg(2, "二", 2000, 3000)]).decode("utf-8")
    records = data.split("\n\n")
    assert records[0].startswith("1\n")
    assert records[1].startswith("2\n")
    assert data.endswith("二\n\n")
    assert "\n\n\n" not in data


def test_srt_multiline_text():
    data = dumps_srt([seg(1, "上行\n下行", 0, 1000)])
    assert "上行\n下行\n\n".encode("utf-8") in data


def test_srt_refuses_deleted_segments():
    # callers must filter; exporting a deleted segment is always a bug
    with pytest.raises(SrtError, match="deleted"):
        dumps_srt([seg(1, "留", 0, 1000), seg(2, "删", 2000, 3000, status="deleted")])


def test_write_srt_streams_same_bytes():
    segments = [seg(1, "同字节", 0, 1000)]
    buf = io.BytesIO()
    write_srt(segments, buf)
    assert buf.getvalue() == dumps_srt(segments)


def test_srt_rejects_bad_segments():
    with pytest.raises(SrtError, match="empty time range"):
        dumps_srt([seg(1, "空跨度", 1000, 1000)])
    with pytest.raises(SrtError, match="out of order"):
        dumps_srt([seg(1, "后", 2000, 3000), seg(2, "前", 0, 1000)])
    with pytest.raises(SrtError, match="overlaps"):
        dumps_srt([seg(1, "甲", 0, 2000), seg(2, "乙", 1000, 3000)])
    with pytest.raises(SrtError, match="empty text"):
        dumps_srt([seg(1, " ", 0, 1000)])
    with pytest.raises(SrtError, match="framing"):
        dumps_srt([seg(1, "断\n\n裂", 0, 1000)])
    with pytest.raises(SrtError, match="framing"):
        dumps_srt([seg(1, "回车\r了", 0, 1000)])


# --- SRT reading ---


def test_srt_round_trip():
    segments = [seg(1, "第一句", 0, 1200), seg(2, "第二句\n两行", 1500, 2800)]
    out = parse_srt(dumps_srt(segments))
    assert [(s.text, s.start_ms, s.end_ms) for s in out] == [
        ("第一句", 0, 1200),
        ("第二句\n两行", 1500, 2800),
    ]
    assert [s.id for s in out] == ["seg-0001", "seg-0002"]
    assert all(s.conf == 1.0 and s.status == "edited" for s in out)


def test_srt_reader_tolerates_crlf_and_bom():
    raw = b"\xef\xbb\xbf1\r\n00:00:00,000 --> 00:00:01,000\r\nCRLF line\r\n\r\n"
    out = parse_srt(raw)
    assert len(out) == 1
    assert out[0].text == "CRLF line"
    assert out[0].end_ms == 1000


def test_srt_reader_tolerates_missing_final_blank():
    raw = "1\n00:00:00,000 --> 00:00:01,000\n尾\n".encode("utf-8")
    assert parse_srt(raw)[0].text == "尾"


def test_srt_reader_accepts_text_streams():
    assert read_srt(io.StringIO("1\n00:00:00,000 --> 00:00:01,000\n字\n\n"))[0].text == "字"


def test_srt_reader_empty_document():
    assert parse_srt(b"") == []
    assert parse_srt(b"\n\n") == []


def test_srt_reader_rejects_garbage():
    with pytest.raises(SrtParseError, match="record 1"):
        parse_srt(b"not\nan\nsrt\n")
    with pytest.raises(SrtParseError, match="record 1"):
        parse_srt(b"1\n00:00:00,000 -> 00:00:01,000\nbad arrow\n\n")
    with pytest.raises(SrtParseError, match="truncated"):
        parse_srt(b"1\n00:00:00,000 --> 00:00:01,000\n")
    with pytest.raises(SrtParseError, match="precede"):
        parse_srt("1\n00:00:02,000 --> 00:00:01,000\n倒放\n\n".encode("utf-8"))


# --- interval tracks ---


def smad_bytes(payload) -> io.BytesIO:
    return io.BytesIO(json.dumps(payload).encode("utf-8"))


def test_smad_round_trip(tmp_path):
    track = [LabeledInterval(0, 5000, "music"), LabeledInterval(7000, 9000, "speech")]
    path = tmp_path / "ep.smad.json"
    with open(path, "wb") as fh:
        write_smad(track, fh)
    with open(path, "rb") as fh:
        assert read_smad(fh) == track


def test_smad_coalesces_overlaps():
    payload = [
        {"start_ms": 0, "end_ms": 5000, "label": "music"},
        {"start_ms": 4000, "end_ms": 9000, "label": "music"},
    ]
    assert read_smad(smad_bytes(payload)) == [LabeledInterval(0, 9000, "music")]


def test_smad_coalesces_touching_intervals():
    payload = [
        {"start_ms": 0, "end_ms": 1000, "label": "music"},
        {"start_ms": 1000, "end_ms": 2000, "label": "music"},
    ]
    assert read_smad(smad_bytes(payload)) == [LabeledInterval(0, 2000, "music")]


def test_smad_labels_do_not_merge_across():
    payload = [
        {"start_ms": 0, "end_ms": 5000, "label": "music"},
        {"start_ms": 3000, "end_ms": 8000, "label": "speech"},
    ]
    assert read_smad(smad_bytes(payload)) == [
        LabeledInterval(0, 5000, "music"),
        LabeledInterval(3000, 8000, "speech"),
    ]


def test_smad_rejects_bad_input():
    with pytest.raises(SmadParseError, match="label"):
        read_smad(smad_bytes([{"start_ms": 0, "end_ms": 100, "label": "noise"}]))
    with pytest.raises(SmadParseError):
        read_smad(smad_bytes([{"start_ms": 500, "end_ms": 100, "label": "music"}]))
    with pytest.raises(SmadParseError):
        read_smad(smad_bytes({}))
    with pytest.raises(SmadParseError, match="bad JSON"):
        read_smad(io.BytesIO(b"{nope"))


# --- project files ---


def test_project_round_trip(tmp_path):
    cfg = PipelineConfig(retention_t_ms=700)
    segments = (
        seg(1, "自动", 0, 1000, 0.8125, "auto"),
        seg(2, "手改", 1500, 2500, 1.0, "edited"),
        seg(3, "已确认", 3000, 4000, 0.9, "confirmed"),
        seg(4, "已删除", 5000, 6000, 0.3, "deleted"),
    )
    project = Project(episode_id="ep001", revision=7, config=cfg, segments=segments)
    path = tmp_path / "ep001.project.json"
    write_file_atomic(path, dumps_project(project))
    with open(path, "rb") as fh:
        assert read_project(fh) == project


def test_project_reader_sorts_segments():
    project = Project(
        episode_id="ep",
        revision=0,
        config=PipelineConfig(),
        segments=(seg(2, "后", 2000, 3000), seg(1, "前", 0, 1000)),
    )
    out = read_project(io.BytesIO(dumps_project(project)))
    assert [s.id for s in out.segments] == ["seg-0001", "seg-0002"]


def test_project_file_is_utf8_json_with_trailing_newline():
    project = Project("ep", 0, PipelineConfig(), (seg(1, "中文", 0, 1000),))
    data = dumps_project(project)
    assert data.endswith(b"\n")
    assert b"\r" not in data
    assert "中文" in data.decode("utf-8")
    parsed = json.loads(data)
    assert parsed["episode_id"] == "ep"
    assert parsed["revision"] == 0


def project_with(**changes) -> dict:
    base = json.loads(dumps_project(Project("ep", 0, PipelineConfig(), (seg(1, "行", 0, 1000),))))
    base.update(changes)
    return base


def as_stream(payload) -> io.BytesIO:
    return io.BytesIO(json.dumps(payload).encode("utf-8"))


def test_project_reader_rejects_bad_files():
    bad = project_with()
    bad["segments"][0]["status"] = "archived"
    with pytest.raises(ProjectParseError, match="status"):
        read_project(as_stream(bad))

    bad = project_with()
    bad["segments"].append(dict(bad["segments"][0]))
    with pytest.raises(ProjectParseError, match="duplicate"):
        read_project(as_stream(bad))

    with pytest.raises(ProjectParseError, match="revision"):
        read_project(as_stream(project_with(revision=-1)))

    bad = project_with()
    bad["config"]["mystery"] = 1
    with pytest.raises(ProjectParseError):
        read_project(as_stream(bad))

    bad = project_with()
    bad["segments"][0]["end_ms"] = 0
    with pytest.raises(ProjectParseError):
        read_project(as_stream(bad))

    with pytest.raises(ProjectParseError):
        read_project(as_stream([]))


# --- candidate manifests ---


def test_manifest_round_trip(tmp_path):
    manifest = EpisodeManifest(
        episode_id="ep042",
        total_ms=3_600_000,
        candidates=[
            CandidateSegment(
                start_ms=1000,
                end_ms=9000,
                subtitle_ids=["seg-0001", "seg-0002"],
                char_count=16,
                secs_per_char=0.5,
                music_overlap_ratio=0.75,
                verdict="singing",
            )
        ],
    )
    path = tmp_path / "ep042.manifest.json"
    with open(path, "wb") as fh:
        write_manifest(manifest, fh)
    with open(path, "rb") as fh:
        out = read_manifest(fh)
    assert out.episode_id == "ep042"
    assert out.total_ms == 3_600_000
    cand = out.candidates[0]
    assert (cand.start_ms, cand.end_ms) == (1000, 9000)
    assert cand.char_count == 16
    assert cand.secs_per_char == 0.5
    assert cand.music_overlap_ratio == 0.75
    assert cand.verdict == "singing"


def test_manifest_rejects_unknown_verdict():
    payload = {
        "episode_id": "ep",
        "total_ms": 1000,
        "candidates": [
            {
                "start_ms": 0,
                "end_ms": 500,
                "char_count": 4,
                "secs_per_char": 0.125,
                "music_overlap_ratio": 0.0,
                "verdict": "maybe",
            }
        ],
    }
    with pytest.raises(ManifestParseError, match="verdict"):
        read_manifest(as_stream(payload))


# --- atomic writes ---


def test_write_file_atomic(tmp_path):
    path = tmp_path / "out.bin"
    write_file_atomic(path, b"first")
    write_file_atomic(path, b"second")
    assert path.read_bytes() == b"second"
    leftovers = [p for p in tmp_path.iterdir() if p.name != "out.bin"]
    assert leftovers == []
