"""Command-line entry points.

  glassboard serve     run the session server (TCP + WebSocket bridge)
  glassboard simulate  replay a scenario script headlessly, write artifacts
  glassboard analyze   build the engagement comparison report for a dataset
  glassboard synth     generate a synthetic two-group dataset

Exit codes: 0 success, 2 configuration or schema errors, 3 runtime errors.
The HOLO_LOG environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import hashlib
import importlib.resources
import json
import logging
import os
import sys
from pathlib import Path

from .board import SlideDeck, load_deck
from .config import EngineConfig, load_config
from .errors import (
    ConfigInvalid,
    GlassboardError,
    MissingVariable,
    PortInUse,
    SchemaViolation,
    ScriptInvalid,
)
from .protocol import Message, decode, encode
from .server import BoardServer
from .session import Session

log = logging.getLogger("glassboard")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

BUNDLED_SCENARIOS = ("presentation", "roleplay_afterimage", "ball_handoff")


def _setup_logging() -> None:
    level = os.environ.get("HOLO_LOG", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _load_engine_config(path: str | None, port: int | None, seed: int | None) -> EngineConfig:
    cfg = load_config(path)
    if port is not None:
        cfg = EngineConfig(**{**cfg.__dict__, "port": port})
    if seed is not None:
        cfg = EngineConfig(**{**cfg.__dict__, "seed": seed})
    return cfg


def _load_deck_for(cfg: EngineConfig) -> SlideDeck:
    if cfg.deck_path:
        if cfg.deck_path == "demo":
            ref = importlib.resources.files("glassboard") / "assets" / "deck_demo.json"
            return load_deck(str(ref))
        return load_deck(cfg.deck_path)
    ref = importlib.resources.files("glassboard") / "assets" / "deck_demo.json"
    return load_deck(str(ref))


# -- scenario scripts ------------------------------------------------------------


def resolve_script(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    stem = name_or_path.removesuffix(".jsonl")
    if stem in BUNDLED_SCENARIOS:
        ref = importlib.resources.files("glassboard") / "scenarios" / f"{stem}.jsonl"
        return Path(str(ref))
    raise ScriptInvalid(0, f"script {name_or_path!r} not found "
                           f"(bundled: {', '.join(BUNDLED_SCENARIOS)})")


def load_script(path: Path) -> list[tuple[int, Message]]:
    """Parse a scenario script: JSONL of wire messages, each timed by
    payload.at_us (commands) or payload.timestamp_us (pose updates)."""
    entries: list[tuple[int, Message]] = []
    last_at = -1
    with path.open("rb") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                msg = decode(raw)
            except GlassboardError as e:
                raise ScriptInvalid(line_no, str(e)) from None
            at = msg.payload.get("at_us")
            if at is None:
                at = msg.payload.get("timestamp_us")
            if not isinstance(at, int) or isinstance(at, bool) or at < 0:
                raise ScriptInvalid(line_no, "entry needs at_us or timestamp_us timing")
            if at < last_at:
                raise ScriptInvalid(line_no, "timestamps must be non-decreasing")
            last_at = at
            entries.append((at, msg))
    return entries


def display_digests(snapshot: Message) -> tuple[str, str]:
    """Content hash per side of one snapshot's display lists (primitives
    only, so idle frames hash identically)."""
    def h(side: str) -> str:
        blob = json.dumps(snapshot.payload["display"][side]["primitives"],
                          sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()
    return h("front"), h("back")


def run_simulation(cfg: EngineConfig, script: list[tuple[int, Message]],
                   out_dir: Path, tail_s: float = 2.0) -> dict:
    """Tick the session against the script without sockets; write the event
    log, final snapshot, and per-frame display digests."""
    session = Session(cfg, _load_deck_for(cfg))
    period_us = max(1, int(round(1_000_000 / cfg.tick_rate_hz)))
    end_us = (script[-1][0] if script else 0) + int(tail_s * 1_000_000)
    out_dir.mkdir(parents=True, exist_ok=True)

    idx = 0
    digests: list[str] = []
    last_snapshot: Message | None = None
    now = 0
    while now <= end_us:
        now += period_us
        while idx < len(script) and script[idx][0] <= now:
            session.submit(script[idx][1])
            idx += 1
        result = session.tick(now)
        front, back = display_digests(result.snapshot)
        digests.append(f"{result.snapshot.payload['frame_id']} {front} {back}")
        last_snapshot = result.snapshot

    (out_dir / "events.jsonl").write_bytes(b"".join(session.event_log))
    (out_dir / "digests.txt").write_text("\n".join(digests) + "\n", encoding="utf-8")
    if last_snapshot is not None:
        (out_dir / "final_snapshot.json").write_bytes(encode(last_snapshot))
    return {"frames": len(digests), "events": len(session.event_log)}


# -- subcommands --------------------------------------------------------------------


def cmd_serve(args) -> int:
    cfg = _load_engine_config(args.config, args.port, None)
    deck = _load_deck_for(cfg)
    server = BoardServer(cfg, deck, record_path=args.record)
    server.start(host=args.host)
    log.info("session server on port %d (Ctrl-C to stop)", server.port)
    server.serve_forever()
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_engine_config(args.config, None, args.seed)
    script = load_script(resolve_script(args.script))
    stats = run_simulation(cfg, script, Path(args.out), tail_s=args.tail)
    log.info("simulated %d frames, %d events -> %s", stats["frames"], stats["events"], args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    from .analytics.io import load_dataset
    from .analytics.report import build_report, report_to_files

    group_a, group_b = load_dataset(args.input)
    report = build_report(group_a, group_b)
    json_path, text_path = report_to_files(report, args.out)
    log.info("report written: %s, %s", json_path, text_path)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_synth(args) -> int:
    from .analytics.synth import make_synthetic_dataset

    close = 0.0 if args.null else args.close_posture_s
    gain = 1.0 if args.null else args.loudness_gain
    make_synthetic_dataset(Path(args.out), seed=args.seed, n_students=args.students,
                           inject_close_posture_s=close, inject_loudness_gain=gain)
    log.info("synthetic dataset written to %s", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glassboard",
        description="Double-sided teaching board engine: session server, "
                    "headless scenario replay, and engagement analytics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the session server")
    p.add_argument("--config", default=None, help="engine config JSON")
    p.add_argument("--port", type=int, default=None, help="override config port")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--record", default=None, help="write the event log here on shutdown")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("simulate", help="replay a scenario script headlessly")
    p.add_argument("--script", required=True,
                   help="script path or bundled name: " + ", ".join(BUNDLED_SCENARIOS))
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="artifact directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--tail", type=float, default=2.0,
                   help="seconds to keep ticking after the last entry")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("analyze", help="build the engagement comparison report")
    p.add_argument("--in", dest="input", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic two-group dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--students", type=int, default=18)
    p.add_argument("--close-posture-s", type=float, default=30.0,
                   help="extra close-posture seconds injected into group A")
    p.add_argument("--loudness-gain", type=float, default=1.5,
                   help="amplitude gain on group A audio after the baseline quarter")
    p.add_argument("--null", action="store_true", help="no injected effects")
    p.set_defaults(fn=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigInvalid, SchemaViolation, ScriptInvalid, MissingVariable) as e:
        log.error("%s", e)
        return EXIT_CONFIG
    except PortInUse as e:
        log.error("%s", e)
        return EXIT_RUNTIME
    except GlassboardError as e:
        log.error("%s", e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
