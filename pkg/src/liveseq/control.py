"""Coordination between the store, the engine and the transport.

All mutations (transport commands, edits, the run loop's ticks) are
serialized through one lock, so the engine has a single logical owner.
Every change publishes a fresh immutable state snapshot with a strictly
increasing sequence number; long-polling readers wait on it without
ever delaying the scheduler.
"""

from __future__ import annotations

import threading
import time
from typing import Optional

from .scheduler import (
    PLAYING, LatencyConfig, Mode, RealTime, Session, SingleStep, SlowMotion,
)
from .store import (
    Accepted, CheckResult, EditSubmission, Store, submit_edit,
)
from .syntax import render_term
from .engine import Program

__all__ = ["SessionController", "StaleGeneration", "mode_name", "parse_mode"]

DEFAULT_TERM_DEPTH = 100


class StaleGeneration(Exception):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"expected generation {expected}, store is at {actual}")
        self.expected = expected
        self.actual = actual


def mode_name(mode: Mode) -> str:
    if isinstance(mode, RealTime):
        return "realtime"
    if isinstance(mode, SlowMotion):
        return "slow"
    return "step"


def parse_mode(name: str, step_pause_ms: int = 500) -> Mode:
    if name == "realtime":
        return RealTime()
    if name == "slow":
        return SlowMotion(step_pause_ms)
    if name == "step":
        return SingleStep()
    raise ValueError(f"unknown mode {name!r}")


class SessionController:
    def __init__(self, store: Store, program: Program, session: Session,
                 clock, term_depth: int = DEFAULT_TERM_DEPTH):
        self.store = store
        self.program = program
        self.session = session
        self.clock = clock
        self.term_depth = term_depth
        self.lock = threading.RLock()
        self._changed = threading.Condition(self.lock)
        self.seq = 0
        self._body: dict = {}
        self._next_slow_step: Optional[int] = None
        with self.lock:
            self._publish()

    # -- snapshots

    def _build_body(self) -> dict:
        session = self.session
        term_text = "" if session.term is None else render_term(session.term, self.term_depth)
        highlights = sorted(
            ({"module": s.module, "start": s.start, "end": s.end}
             for s in session.last_highlights),
            key=lambda h: (h["module"], h["start"], h["end"]),
        )
        transport = {"phase": session.phase, "mode": mode_name(session.mode)}
        if isinstance(session.mode, SlowMotion):
            transport["step_pause_ms"] = session.mode.step_pause_ms
        return {
            "generation": self.program.generation,
            "transport": transport,
            "current_term": term_text,
            "highlights": highlights,
        }

    def _publish(self) -> None:
        body = self._build_body()
        if body != self._body:
            self._body = body
            self.seq += 1
            self._changed.notify_all()

    def snapshot(self) -> dict:
        with self.lock:
            return {"seq": self.seq, **self._body}

    def wait_for_snapshot(self, since: int, timeout: float) -> dict:
        """Return once seq passes `since`, or the current one on timeout."""
        end = time.monotonic() + timeout
        with self._changed:
            while self.seq <= since:
                remaining = end - time.monotonic()
                if remaining <= 0 or not self._changed.wait(remaining):
                    break
            return {"seq": self.seq, **self._body}

    # -- store views

    def modules(self) -> list[dict]:
        with self.lock:
            return [
                {"name": name, "has_marker": self.store.buffers[name].has_marker}
                for name in self.store.module_names()
            ]

    def module_view(self, name: str) -> dict:
        with self.lock:
            buffer = self.store.buffer(name)
            return {
                "name": buffer.name,
                "header": buffer.header,
                "editable": buffer.editable,
                "has_marker": buffer.has_marker,
                "generation": self.program.generation,
            }

    # -- mutations

    def submit(self, module: str, editable_text: str,
               expected_generation: Optional[int] = None) -> CheckResult:
        with self.lock:
            if (expected_generation is not None
                    and expected_generation != self.program.generation):
                raise StaleGeneration(expected_generation, self.program.generation)
            sub = EditSubmission(module=module, editable_text=editable_text,
                                 submitted_at=self.clock.now())
            result, new_program = submit_edit(self.store, self.program, sub)
            if isinstance(result, Accepted):
                self.program = new_program
                self.session.program = new_program
            self._publish()
            return result

    def transport(self, action: str, mode: Optional[str] = None,
                  step_pause_ms: Optional[int] = None) -> dict:
        with self.lock:
            session = self.session
            if mode is not None:
                pause = step_pause_ms
                if pause is None:
                    current = session.mode
                    pause = current.step_pause_ms if isinstance(current, SlowMotion) else 500
                session.set_mode(parse_mode(mode, pause))
                self._next_slow_step = None
            if action == "play":
                session.play()
            elif action == "pause":
                session.pause()
            elif action == "continue":
                session.resume()
            elif action == "stop":
                session.stop()
            elif action == "step":
                session.step_once()
            elif action != "none":
                raise ValueError(f"unknown transport action {action!r}")
            self._publish()
            return dict(self._body["transport"])

    # -- the live loop

    def tick(self) -> None:
        """One scheduler heartbeat; called repeatedly by the run loop."""
        with self.lock:
            session = self.session
            session.queue.poll()
            if session.phase != PLAYING:
                return
            if isinstance(session.mode, RealTime):
                session.pump()
                self._publish()
            elif isinstance(session.mode, SlowMotion):
                now = self.clock.now()
                if self._next_slow_step is None:
                    self._next_slow_step = now
                if now >= self._next_slow_step:
                    session.step_once()
                    self._next_slow_step = now + session.mode.step_pause_ms
                    self._publish()
            # single step: only explicit transport commands advance
