"""Command-line interface. Subcommands mirror the pipeline stages:
gen-container, train, make-store, vsp, analyze, schedule, summarize, serve.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .analyzer import AnalyzeConfig, PreferenceProfile, analyze
from .classifier import TrainConfig, train
from .container import decode, encode, generate, generate_from_source, reduction_report
from .errors import ConfigError, DataError, EvsError
from .model import load_model
from .scheduler import build_schedule, emit_edl, segments_from_track
from .synthetic import SyntheticVideo, make_training_set, parse_synthetic_spec


def read_ppm(path: Path) -> np.ndarray:
    """Binary P6 PPM reader for directory ingestion."""
    raw = path.read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos] in b" \t\r\n":
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and raw[pos] not in b" \t\r\n":
            pos += 1
        fields.append(raw[start:pos])
    if fields[0] != b"P6":
        raise DataError(f"{path}: not a binary PPM (P6) file")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise DataError(f"{path}: only maxval 255 supported")
    pos += 1
    return np.frombuffer(raw, np.uint8, count=h * w * 3, offset=pos).reshape(h, w, 3)


def _frames_from_dir(directory: Path, fps: float):
    files = sorted(p for p in directory.iterdir()
                   if p.suffix.lower() in (".ppm", ".npy"))
    if not files:
        raise DataError(f"no .ppm or .npy frames in {directory}")
    for k, p in enumerate(files):
        img = np.load(p) if p.suffix == ".npy" else read_ppm(p)
        yield k / fps, img


def cmd_gen_container(args) -> int:
    if args.infile.startswith("synthetic:"):
        video = parse_synthetic_spec(args.infile)
        c = generate_from_source(video, args.interval, width=args.width,
                                 height=args.height, video_id=args.video_id or video.video_id)
        frame_count = video.frame_count
        frame_bytes = video.width * video.height * 3
    else:
        frames = _frames_from_dir(Path(args.infile), args.fps)
        c = generate(frames, args.interval, width=args.width, height=args.height,
                     fps=args.fps, video_id=args.video_id)
        frame_count = int(round(c.header.duration * c.header.fps)) + 1
        frame_bytes = None
    buf = encode(c)
    Path(args.out).write_bytes(buf)
    print(f"wrote {args.out}: {c.count} thumbnails, {len(buf)} bytes "
          f"({len(buf) / max(c.count, 1):.0f} B/thumbnail)")
    if frame_bytes:
        r = reduction_report(c, frame_count, frame_bytes)
        print(f"count reduction {r.count_reduction_pct:.2f}%  "
              f"volume reduction {r.volume_reduction_pct:.2f}%  "
              f"per-image memory reduction {r.memory_reduction_pct:.2f}%")
    return 0


def cmd_train(args) -> int:
    X, y = make_training_set(args.per_class, args.seed)
    cfg = TrainConfig(learning_rate=args.lr, epochs=args.epochs,
                      batch_size=args.batch_size, seed=args.seed)
    channels = tuple(int(c) for c in args.channels.split(","))
    units = tuple(int(u) for u in args.head.split(","))
    result = train(X, y, cfg, backbone_channels=channels, head_units=units)
    result.model.save(args.out)
    print(f"trained on {len(X)} thumbnails in {result.seconds:.1f}s; "
          f"loss {result.epoch_losses[0]:.3f} -> {result.epoch_losses[-1]:.3f}")
    print(f"wrote {args.out}")
    return 0


def cmd_make_store(args) -> int:
    from .vsp import StoreVideoSpec, build_store

    specs = []
    for i in range(args.videos):
        events = []
        if args.events:
            for span in args.events.split(";"):
                lo, _, hi = span.partition("-")
                events.append((float(lo), float(hi)))
        video = SyntheticVideo(duration=args.duration, fps=args.fps,
                               seed=args.seed + i, event_spans=events,
                               video_id=f"video{i:02d}")
        specs.append(StoreVideoSpec(video=video, title=f"Synthetic video {i}",
                                    interval=args.interval,
                                    segment_seconds=args.segment_seconds))
    catalog = build_store(args.root, specs)
    print(f"store at {args.root}: {len(catalog['videos'])} videos")
    return 0


def cmd_vsp(args) -> int:
    from .vsp import VspServer

    root = args.root or os.environ.get("EVS_VSP_ROOT")
    if not root:
        raise ConfigError("pass --root or set EVS_VSP_ROOT")
    server = VspServer(root, host=args.host, port=args.port)
    print(f"vsp serving {root} on {server.address}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def _load_profile(path: str) -> PreferenceProfile:
    return PreferenceProfile.from_json(Path(path).read_text())


def cmd_analyze(args) -> int:
    container = decode(Path(args.container).read_bytes())
    model = load_model(args.model)
    profile = _load_profile(args.prefs)
    track = analyze(container, model, profile,
                    AnalyzeConfig(args.stride, args.min_stride))
    Path(args.out).write_text(track.to_json())
    positives = track.positives()
    print(f"analyzed {container.count} thumbnails with {track.classifications} "
          f"classifications; {len(positives)} above threshold")
    return 0


def cmd_schedule(args) -> int:
    from .analyzer import RelevanceTrack

    track = RelevanceTrack.from_json(Path(args.track).read_text())
    segments = segments_from_track(track, threshold=args.threshold,
                                   min_duration=args.min_duration,
                                   merge_gap=args.merge_gap)
    duration = track.duration if track.duration > 1e-9 else (
        track.timestamps[-1] + track.interval)
    schedule = build_schedule(segments, args.fast, duration, video_id=track.video_id)
    Path(args.out).write_bytes(emit_edl(schedule))
    preferred = sum(s.length for s in schedule.preferred_intervals())
    print(f"schedule: {len(schedule.entries)} entries, {preferred:.1f}s preferred, "
          f"summary {schedule.summary_duration:.1f}s of {duration:.1f}s")
    return 0


def cmd_summarize(args) -> int:
    from .client import SummarizeConfig, summarize

    model = load_model(args.model)
    profile = _load_profile(args.prefs)
    config = SummarizeConfig(initial_stride=args.stride, fast_speed=args.fast,
                             min_duration=args.min_duration, merge_gap=args.merge_gap)
    session = summarize(args.vsp, args.video, profile, model, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "track.json").write_text(session.track.to_json())
    (out / "edl.json").write_bytes(session.edl)
    (out / "metrics.json").write_text(json.dumps(
        {"metrics_ms": session.metrics_ms, "stats": session.stats}, indent=2, sort_keys=True))
    (out / "manifest.json").write_text(json.dumps(
        [vars(m) for m in session.manifest], indent=2, sort_keys=True))
    print(f"session written to {out}/")
    print(f"summary {session.schedule.summary_duration:.1f}s of "
          f"{session.schedule.duration:.1f}s; downloaded "
          f"{session.stats['downloaded_bytes'] / 1e6:.2f} MB of a "
          f"{session.stats['full_video_bytes'] / 1e6:.0f} MB video")
    return 0


def cmd_serve(args) -> int:
    from .local_api import LocalApiServer

    model = load_model(args.model)
    server = LocalApiServer(args.vsp, model, host=args.host, port=args.port,
                            ui_dir=args.ui)
    print(f"edge api on {server.address}" + (f", ui at {server.address}/ui/" if args.ui else ""))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evs", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-container", help="build a thumbnail container")
    g.add_argument("--in", dest="infile", required=True,
                   help="frame directory or synthetic:duration=...,fps=...")
    g.add_argument("--interval", type=float, default=1.0)
    g.add_argument("--out", required=True)
    g.add_argument("--width", type=int, default=160)
    g.add_argument("--height", type=int, default=90)
    g.add_argument("--fps", type=float, default=30.0)
    g.add_argument("--video-id", default="")
    g.set_defaults(fn=cmd_gen_container)

    t = sub.add_parser("train", help="train the two-style demo classifier")
    t.add_argument("--out", required=True)
    t.add_argument("--per-class", type=int, default=24)
    t.add_argument("--epochs", type=int, default=16)
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--batch-size", type=int, default=8)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--channels", default="8,16,32")
    t.add_argument("--head", default="64,64")
    t.set_defaults(fn=cmd_train)

    m = sub.add_parser("make-store", help="build a synthetic VSP store")
    m.add_argument("--root", required=True)
    m.add_argument("--videos", type=int, default=1)
    m.add_argument("--duration", type=float, default=600.0)
    m.add_argument("--fps", type=float, default=30.0)
    m.add_argument("--interval", type=float, default=1.0)
    m.add_argument("--segment-seconds", type=float, default=10.0)
    m.add_argument("--events", default="200-260")
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(fn=cmd_make_store)

    v = sub.add_parser("vsp", help="serve a store directory")
    v.add_argument("--root", default=None)
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8470)
    v.set_defaults(fn=cmd_vsp)

    a = sub.add_parser("analyze", help="score a container against preferences")
    a.add_argument("--container", required=True)
    a.add_argument("--model", required=True)
    a.add_argument("--prefs", required=True)
    a.add_argument("--stride", type=int, default=8)
    a.add_argument("--min-stride", type=int, default=1)
    a.add_argument("--out", required=True)
    a.set_defaults(fn=cmd_analyze)

    s = sub.add_parser("schedule", help="turn a track into a playback schedule")
    s.add_argument("--track", required=True)
    s.add_argument("--threshold", type=float, default=None)
    s.add_argument("--fast", type=float, default=8.0)
    s.add_argument("--min-duration", type=float, default=0.0)
    s.add_argument("--merge-gap", type=float, default=0.0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_schedule)

    z = sub.add_parser("summarize", help="full loop against a running VSP")
    z.add_argument("--vsp", required=True)
    z.add_argument("--video", required=True)
    z.add_argument("--prefs", required=True)
    z.add_argument("--model", required=True)
    z.add_argument("--out", required=True)
    z.add_argument("--stride", type=int, default=8)
    z.add_argument("--fast", type=float, default=8.0)
    z.add_argument("--min-duration", type=float, default=0.0)
    z.add_argument("--merge-gap", type=float, default=0.0)
    z.set_defaults(fn=cmd_summarize)

    e = sub.add_parser("serve", help="edge-local API for the demo console")
    e.add_argument("--vsp", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--host", default="127.0.0.1")
    e.add_argument("--port", type=int, default=8471)
    e.add_argument("--ui", default=None, help="static frontend directory")
    e.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except EvsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
