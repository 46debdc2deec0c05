"""Transport and timing: turn the extracted stream into timestamped
messages under a lookahead-latency model.

In real-time mode the session computes ahead until the computed
timestamps are `d` milliseconds past the current time, so delivery
never waits on computation. Pause halts the queue clock (messages for
the next `d` ms stay queued with their timestamps); continue resumes
it; stop jumps the queue clock by `d` so everything left goes out.
Slow-motion and single-step ignore waits and deliver one element per
trigger, for study and debugging.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Union

from .engine import Budget, EngineError, Program
from .sinks import DeliveryQueue, ScheduledMessage, message_at
from .stream import (
    END_OF_STREAM, EndOfStream, Ev, ExtractionResult, StreamError, WaitMs,
    next_item,
)
from .terms import Name, SourceSpan, Term

__all__ = [
    "WallClock", "VirtualClock", "LatencyConfig",
    "RealTime", "SlowMotion", "SingleStep", "Mode",
    "PLAYING", "PAUSED", "STOPPED", "TransportState", "IllegalTransport",
    "Session", "run_headless",
]


class WallClock:
    """Monotonic wall time in integer milliseconds."""

    def __init__(self) -> None:
        self._t0 = time.monotonic()

    def now(self) -> int:
        return int((time.monotonic() - self._t0) * 1000)


class VirtualClock:
    """Manually advanced clock; makes every timing test deterministic."""

    def __init__(self, start: int = 0):
        self._now = start

    def now(self) -> int:
        return self._now

    def advance(self, ms: int) -> int:
        if ms < 0:
            raise ValueError("clock cannot go backwards")
        self._now += ms
        return self._now

    def advance_to(self, ms: int) -> int:
        if ms < self._now:
            raise ValueError("clock cannot go backwards")
        self._now = ms
        return self._now


@dataclass(frozen=True)
class LatencyConfig:
    d: int = 100

    def __post_init__(self) -> None:
        if self.d <= 0:
            raise ValueError("latency must be positive")


@dataclass(frozen=True)
class RealTime:
    pass


@dataclass(frozen=True)
class SlowMotion:
    step_pause_ms: int = 500

    def __post_init__(self) -> None:
        if self.step_pause_ms <= 0:
            raise ValueError("step pause must be positive")


@dataclass(frozen=True)
class SingleStep:
    pass


Mode = Union[RealTime, SlowMotion, SingleStep]

PLAYING = "playing"
PAUSED = "paused"
STOPPED = "stopped"


@dataclass(frozen=True)
class TransportState:
    phase: str
    stream_time: Optional[int]
    queue_halted_at: Optional[int]


class IllegalTransport(Exception):
    pass


class Session:
    """One playing song: current term, transport phase, output queue.

    Exactly one logical thread may drive a session at a time; the
    program snapshot is replaced wholesale on hot swaps and only read
    here.
    """

    def __init__(self, program: Program, clock, queue: DeliveryQueue,
                 entry: tuple[str, str] = ("Main", "main"),
                 latency: LatencyConfig = LatencyConfig(),
                 budget: Budget = Budget(),
                 mode: Mode = RealTime(),
                 max_items: Optional[int] = None):
        self.program = program
        self.clock = clock
        self.queue = queue
        self.entry = entry
        self.latency = latency
        self.budget = budget
        self.mode: Mode = mode
        self.max_items = max_items

        self.phase = STOPPED
        self.term: Optional[Term] = None
        self.stream_time: Optional[int] = None
        self.items_extracted = 0
        self.ended = False
        self.last_highlights: set[SourceSpan] = set()

    # -- inspection

    def transport_state(self) -> TransportState:
        return TransportState(
            phase=self.phase,
            stream_time=self.stream_time,
            queue_halted_at=self.queue.halted_at,
        )

    def _at_item_limit(self) -> bool:
        return self.max_items is not None and self.items_extracted >= self.max_items

    # -- transport commands

    def play(self) -> None:
        if self.phase != STOPPED:
            raise IllegalTransport(f"cannot play while {self.phase}")
        module, function = self.entry
        self.term = Name(function, module)
        self.ended = False
        self.items_extracted = 0
        self.last_highlights = set()
        self.stream_time = self.queue.queue_time(self.clock.now())
        self.phase = PLAYING

    def pause(self) -> None:
        if self.phase != PLAYING:
            raise IllegalTransport(f"cannot pause while {self.phase}")
        self.queue.halt_clock(self.clock.now())
        self.phase = PAUSED

    def resume(self) -> None:
        if self.phase != PAUSED:
            raise IllegalTransport(f"cannot continue while {self.phase}")
        self.queue.resume_clock()
        self.phase = PLAYING

    def stop(self) -> None:
        """Flush everything still queued and halt; play() starts over."""
        if self.phase == STOPPED:
            return
        if self.queue.halted:
            self.queue.resume_clock()
        self.queue.advance_clock(self.latency.d)
        self.queue.poll()
        self.phase = STOPPED

    def set_mode(self, mode: Mode) -> None:
        self.mode = mode

    # -- producing output

    def _extract_one(self) -> Union[ExtractionResult, EndOfStream]:
        assert self.term is not None
        try:
            result = next_item(self.program, self.term, self.budget)
        except (EngineError, StreamError) as err:
            # Keep the failing term so it can be inspected.
            partial = getattr(err, "partial_term", None)
            if partial is not None:
                self.term = partial
            self.phase = STOPPED
            raise
        if isinstance(result, EndOfStream):
            self.ended = True
            return result
        self.term = result.rest
        self.last_highlights = result.highlights
        self.items_extracted += 1
        return result

    def pump(self) -> list[ScheduledMessage]:
        """Compute ahead until timestamps pass now + d; real time only."""
        if self.phase != PLAYING:
            raise IllegalTransport(f"cannot pump while {self.phase}")
        if not isinstance(self.mode, RealTime):
            raise IllegalTransport("pump is only valid in real-time mode")
        assert self.stream_time is not None
        scheduled: list[ScheduledMessage] = []
        horizon = self.queue.queue_time(self.clock.now()) + self.latency.d
        while self.stream_time <= horizon and not self._at_item_limit():
            result = self._extract_one()
            if isinstance(result, EndOfStream):
                self.stop()
                break
            if isinstance(result.item, Ev):
                msg = message_at(self.stream_time, result.item.event)
                self.queue.schedule(msg)
                scheduled.append(msg)
            else:
                assert isinstance(result.item, WaitMs)
                self.stream_time += result.item.duration
        self.queue.poll()
        return scheduled

    def step_once(self) -> Union[ExtractionResult, EndOfStream]:
        """Extract one element and deliver it immediately.

        Wait instructions are reported but add no delay; used by the
        slow-motion cadence and the single-step trigger.
        """
        if self.phase != PLAYING:
            raise IllegalTransport(f"cannot step while {self.phase}")
        if isinstance(self.mode, RealTime):
            raise IllegalTransport("step is only valid in slow-motion or single-step mode")
        result = self._extract_one()
        if isinstance(result, EndOfStream):
            self.stop()
            return result
        if isinstance(result.item, Ev):
            self.queue.deliver_now(message_at(self.clock.now(), result.item.event))
        return result


def run_headless(session: Session, clock) -> None:
    """Play to the end of the stream or the session's item limit.

    With a VirtualClock the run is fully deterministic: the clock jumps
    to the next point where the scheduler has work. With a wall clock
    it sleeps between pumps.
    """
    virtual = isinstance(clock, VirtualClock)
    session.play()
    mode = session.mode
    if isinstance(mode, RealTime):
        while session.phase == PLAYING:
            session.pump()
            if session._at_item_limit():
                session.stop()
                break
            if session.phase != PLAYING:
                break
            assert session.stream_time is not None
            next_pump = session.stream_time - session.latency.d
            if virtual:
                if next_pump > clock.now():
                    clock.advance_to(next_pump)
                session.queue.poll()
            else:
                wait_s = max(0.0, (next_pump - clock.now()) / 1000.0)
                time.sleep(min(wait_s, session.latency.d / 2000.0))
                session.queue.poll()
        return
    step_pause = mode.step_pause_ms if isinstance(mode, SlowMotion) else 0
    while session.phase == PLAYING:
        session.step_once()
        if session._at_item_limit():
            session.stop()
            break
        if step_pause:
            if virtual:
                clock.advance(step_pause)
            else:
                time.sleep(step_pause / 1000.0)
