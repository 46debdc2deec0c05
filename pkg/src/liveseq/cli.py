"""Command line entry point.

Loads a module directory, plays the entry term through the chosen sink,
and optionally exposes the HTTP editing service while the music runs.
Headless runs with --max-items and --virtual-clock are fully
deterministic, which is how the acceptance suite drives everything.
"""

from __future__ import annotations

import argparse
import sys
import threading
import time
from pathlib import Path

from .control import SessionController, parse_mode
from .engine import Budget, EngineError
from .scheduler import (
    DeliveryQueue, IllegalTransport, LatencyConfig, Session, VirtualClock,
    WallClock, run_headless,
)
from .sinks import CollectSink, LogSink, NullSink
from .smf import write_smf
from .store import StartupError, load_directory
from .stream import StreamError

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liveseq",
        description="Live-coding music sequencer: plays lazily evaluated "
                    "event-list programs and lets them change mid-song.")
    parser.add_argument("--dir", required=True, help="module directory (*.hs files)")
    parser.add_argument("--entry", default="Main.main",
                        help="start term as module.function (default Main.main)")
    parser.add_argument("--mode", choices=("realtime", "slow", "step"), default="realtime")
    parser.add_argument("--latency", type=int, default=100, metavar="MS",
                        help="lookahead window d in ms (default 100)")
    parser.add_argument("--step-pause", type=int, default=500, metavar="MS",
                        help="slow-motion pause per element (default 500)")
    parser.add_argument("--sink", choices=("log", "smf", "null"), default="log")
    parser.add_argument("--out", default=None, metavar="PATH",
                        help="sink output file (log default: stdout; smf default: out.mid)")
    parser.add_argument("--serve", default=None, metavar="ADDR:PORT",
                        help="expose the HTTP editing service")
    parser.add_argument("--max-items", type=int, default=None, metavar="N",
                        help="stop after N stream items (headless/testing)")
    parser.add_argument("--seed", type=int, default=None, help="reserved, no effect")
    parser.add_argument("--virtual-clock", action="store_true",
                        help="deterministic clock that jumps instead of waiting")
    parser.add_argument("--persist-edits", action="store_true",
                        help="write accepted edits back to the module files")
    parser.add_argument("--figure", default=None, metavar="PATH",
                        help="after the run, render a piano-roll figure of the output")
    parser.add_argument("--ui-dir", default=None, metavar="PATH",
                        help="static files served under /ui/ (default: bundled frontend)")
    return parser


def _default_ui_dir() -> Path:
    return Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if "." not in args.entry:
        parser.error("--entry must look like Module.function")
    entry_module, entry_function = args.entry.rsplit(".", 1)

    try:
        store, program = load_directory(args.dir, persist_edits=args.persist_edits)
    except StartupError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1

    clock = VirtualClock() if args.virtual_clock else WallClock()

    log_handle = None
    if args.sink == "log":
        log_handle = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
        sink = LogSink(log_handle)
    elif args.sink == "smf":
        sink = CollectSink()
    else:
        sink = NullSink()

    queue = DeliveryQueue(clock, sink)
    try:
        mode = parse_mode(args.mode, args.step_pause)
        latency = LatencyConfig(args.latency)
    except ValueError as err:
        parser.error(str(err))
    session = Session(
        program, clock, queue,
        entry=(entry_module, entry_function),
        latency=latency,
        budget=Budget(),
        mode=mode,
        max_items=args.max_items,
    )

    exit_code = 0
    try:
        if args.serve:
            exit_code = _run_serving(args, store, program, session, clock, queue)
        else:
            try:
                run_headless(session, clock)
            except (EngineError, StreamError, IllegalTransport) as err:
                print(f"error: {err}", file=sys.stderr)
                exit_code = 1
    finally:
        if session.phase != "stopped":
            session.stop()
        delivered = [d.message for d in queue.delivered]
        if args.sink == "smf":
            out = args.out or "out.mid"
            write_smf(delivered, out)
            print(f"wrote {out} ({len(delivered)} messages)", file=sys.stderr)
        if args.figure:
            from .report import save_piano_roll
            save_piano_roll(delivered, args.figure)
            print(f"wrote {args.figure}", file=sys.stderr)
        if log_handle is not None and log_handle is not sys.stdout:
            log_handle.close()
    return exit_code


def _run_serving(args, store, program, session, clock, queue) -> int:
    import uvicorn

    from .service import build_app

    host, _, port_text = args.serve.rpartition(":")
    if not host or not port_text.isdigit():
        print(f"error: --serve expects ADDR:PORT, got {args.serve!r}", file=sys.stderr)
        return 2
    controller = SessionController(store, program, session, clock)
    ui_dir = Path(args.ui_dir) if args.ui_dir else _default_ui_dir()
    app = build_app(controller, ui_dir=ui_dir if ui_dir.is_dir() else None)

    stop_flag = threading.Event()

    def loop() -> None:
        try:
            controller.transport("play")
        except IllegalTransport:
            pass
        while not stop_flag.is_set():
            try:
                controller.tick()
            except (EngineError, StreamError) as err:
                print(f"error: {err}", file=sys.stderr)
            time.sleep(0.005)

    worker = threading.Thread(target=loop, daemon=True)
    worker.start()
    try:
        uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    finally:
        stop_flag.set()
        worker.join(timeout=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
