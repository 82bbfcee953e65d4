"""Command-line front end: extraction, mining, stats, synthesis, service.

Exit codes: 0 on success, 1 on input errors (bad files, bad flags, bad
config), 2 on internal errors. Diagnostics go to stderr; data goes to the
requested files or stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import glob
import io
import json
import logging
import os
import random
import sys
import traceback

from .config import PipelineConfig, load_config
from .consolidate import consolidate_stream
from .miner import EpisodeManifest, StatsError, build_candidates, compute_stats, filter_by_smad, format_stats
from .model import SubforgeError
from .ocr_stream import assemble_line, parse_detections
from .service import serve
from .subio import (
    Project,
    dumps_project,
    dumps_srt,
    read_manifest,
    read_project,
    read_smad,
    write_file_atomic,
    write_manifest,
    write_smad,
)
from .synth import EpisodeSpec, NoiseModel, corrupt, evaluate, format_eval_report, generate_episode

__all__ = ["main", "build_parser"]


def _episode_id(path: str) -> str:
    name = os.path.basename(path)
    if name.endswith(".det.jsonl"):
        name = name[: -len(".det.jsonl")]
    else:
        name = os.path.splitext(name)[0]
    return name or "episode"


def cmd_consolidate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    with open(args.detections, "rb") as fh:
        lines = [assemble_line(frame, cfg) for frame in parse_detections(fh)]
    segments = consolidate_stream(lines, cfg)
    project = Project(_episode_id(args.detections), 0, cfg, tuple(segments))
    write_file_atomic(args.out_project, dumps_project(project))
    if args.out_srt:
        write_file_atomic(args.out_srt, dumps_srt(segments))
    print(f"{len(segments)} segments -> {args.out_project}", file=sys.stderr)
    return 0


def cmd_mine(args: argparse.Namespace) -> int:
    with open(args.project, "rb") as fh:
        project = read_project(fh)
    with open(args.smad, "rb") as fh:
        track = read_smad(fh)
    live = [s for s in project.segments if s.status != "deleted"]
    candidates = build_candidates(live, project.config)
    kept = filter_by_smad(candidates, track, project.config)
    total_ms = args.total_ms
    if total_ms is None:
        ends = [s.end_ms for s in live] + [iv.end_ms for iv in track]
        total_ms = max(ends) if ends else 0
    manifest = EpisodeManifest(project.episode_id, total_ms, candidates)
    buf = io.BytesIO()
    write_manifest(manifest, buf)
    write_file_atomic(args.out_manifest, buf.getvalue())
    print(
        f"{len(candidates)} candidates, {len(kept)} past the music filter -> {args.out_manifest}",
        file=sys.stderr,
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    paths = sorted(glob.glob(os.path.join(args.manifests, "*.manifest.json")))
    if not paths:
        raise StatsError(f"no *.manifest.json files in {args.manifests}")
    manifests = []
    for path in paths:
        with open(path, "rb") as fh:
            manifests.append(read_manifest(fh))
    stats = compute_stats(manifests, cfg)
    sys.stdout.write(format_stats(stats))
    if args.json:
        payload = json.dumps(dataclasses.asdict(stats), indent=2) + "\n"
        write_file_atomic(args.json, payload.encode("utf-8"))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = PipelineConfig()
    spec = EpisodeSpec()
    base_noise = NoiseModel(
        seed=args.seed,
        char_sub_prob=args.char_sub,
        dropout_prob=args.dropout,
        ghost_prob=args.ghost,
    )
    rng = random.Random(args.seed)
    reports = []
    for i in range(args.episodes):
        gen_seed = rng.randrange(2**32)
        noise_seed = rng.randrange(2**32)
        truth, track, stream = generate_episode(spec, gen_seed, cfg)
        noisy = corrupt(stream, dataclasses.replace(base_noise, seed=noise_seed))
        recovered = consolidate_stream(noisy, cfg)
        reports.append(evaluate(truth, recovered))
        if args.truth_dir:
            os.makedirs(args.truth_dir, exist_ok=True)
            prefix = os.path.join(args.truth_dir, f"ep{i + 1:03d}")
            write_file_atomic(
                prefix + ".project.json",
                dumps_project(Project(f"ep{i + 1:03d}", 0, cfg, tuple(truth))),
            )
            buf = io.BytesIO()
            write_smad(track, buf)
            write_file_atomic(prefix + ".smad.json", buf.getvalue())
            write_file_atomic(prefix + ".truth.srt", dumps_srt(truth))
    text = format_eval_report(args.seed, base_noise, reports)
    write_file_atomic(args.report, text.encode("utf-8"))
    print(f"{args.episodes} episodes -> {args.report}", file=sys.stderr)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        serve(args.project, args.media, args.frame_cmd, args.port, args.host, args.assets)
    except KeyboardInterrupt:
        pass
    return 0


def cmd_export_srt(args: argparse.Namespace) -> int:
    with open(args.project, "rb") as fh:
        project = read_project(fh)
    live = [s for s in project.segments if s.status != "deleted"]
    write_file_atomic(args.out, dumps_srt(live))
    print(f"{len(live)} segments -> {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subforge",
        description="Burned-in subtitle extraction and singing-segment mining.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("consolidate", help="fold an OCR detection stream into a subtitle project")
    p.add_argument("--detections", required=True, help="*.det.jsonl input")
    p.add_argument("--config", help="config file (default: $SUBFORGE_CONFIG or built-ins)")
    p.add_argument("--out-project", required=True, help="*.project.json output")
    p.add_argument("--out-srt", help="optional SRT export")
    p.set_defaults(func=cmd_consolidate)

    p = sub.add_parser("mine", help="mine singing candidates from a project")
    p.add_argument("--project", required=True)
    p.add_argument("--smad", required=True, help="music/speech interval track")
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--total-ms", type=int, help="episode length; default: last known end")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("stats", help="aggregate corpus statistics over manifests")
    p.add_argument("--manifests", required=True, help="directory of *.manifest.json files")
    p.add_argument("--config")
    p.add_argument("--json", help="also write the raw stats record here")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="score the pipeline on synthetic episodes")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--episodes", type=int, default=5)
    p.add_argument("--char-sub", type=float, default=0.0, help="per-frame substitution probability")
    p.add_argument("--dropout", type=float, default=0.0, help="whole-frame miss probability")
    p.add_argument("--ghost", type=float, default=0.0, help="ghost line probability in blanks")
    p.add_argument("--report", required=True)
    p.add_argument("--truth-dir", help="also write truth files per episode")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="serve a project to the editor UI")
    p.add_argument("--project", required=True)
    p.add_argument("--media", help="video file for frame previews")
    p.add_argument("--frame-cmd", help="frame-grab command template; gets {media}, {t_ms}, {t_s}")
    p.add_argument("--port", type=int, default=8571)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--assets", help="editor UI static files directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export-srt", help="write the live segments as SRT")
    p.add_argument("--project", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_srt)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; bad flags are input errors here
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except SubforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
