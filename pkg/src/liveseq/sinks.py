"""Output sinks behind a haltable queue clock.

The delivery queue mirrors what a sequencer queue offers: messages are
scheduled with future timestamps on the queue's own clock; pausing
halts that clock (deliveries freeze, timestamps keep their values),
continuing resumes it, and stopping jumps it forward so everything
still pending goes out at once.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass
from typing import Optional, Protocol, TextIO

from .stream import (
    Controller, MidiEvent, NoteOff, NoteOn, ProgramChange, split_channel,
)

__all__ = [
    "ScheduledMessage", "Delivered", "message_at", "log_sink_format",
    "parse_log_line", "Sink", "LogSink", "CollectSink", "NullSink",
    "DeliveryQueue",
]


@dataclass(frozen=True)
class ScheduledMessage:
    """A MIDI message bound to an absolute queue-clock timestamp.

    `port`/`channel` are the split of the event's virtual channel;
    channel is always < 16.
    """

    timestamp: int
    port: int
    channel: int
    event: MidiEvent

    def __post_init__(self) -> None:
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")
        if not (0 <= self.channel < 16):
            raise ValueError("channel must be 0..15")


@dataclass(frozen=True)
class Delivered:
    wall_time: int
    message: ScheduledMessage


def message_at(timestamp: int, event: MidiEvent) -> ScheduledMessage:
    port, channel = split_channel(event.channel)
    return ScheduledMessage(timestamp=timestamp, port=port, channel=channel, event=event)


def log_sink_format(msg: ScheduledMessage) -> str:
    """One fixed-layout text line per message, newline terminated."""
    prefix = f"t={msg.timestamp} port={msg.port} ch={msg.channel}"
    ev = msg.event
    if isinstance(ev, NoteOn):
        return f"{prefix} ON pitch={ev.pitch} vel={ev.velocity}\n"
    if isinstance(ev, NoteOff):
        return f"{prefix} OFF pitch={ev.pitch} vel={ev.velocity}\n"
    if isinstance(ev, ProgramChange):
        return f"{prefix} PGM prog={ev.program}\n"
    if isinstance(ev, Controller):
        return f"{prefix} CC cc={ev.controller} val={ev.value}\n"
    raise TypeError(f"not a MIDI event: {ev!r}")


_LOG_RE = re.compile(
    r"^t=(\d+) port=(\d+) ch=(\d+) (ON|OFF|PGM|CC)((?: \w+=\d+)*)$")


def parse_log_line(line: str) -> ScheduledMessage:
    """Inverse of log_sink_format (test support)."""
    m = _LOG_RE.match(line.rstrip("\n"))
    if m is None:
        raise ValueError(f"not a log line: {line!r}")
    timestamp, port, channel = int(m.group(1)), int(m.group(2)), int(m.group(3))
    kind = m.group(4)
    fields = dict(part.split("=") for part in m.group(5).split())
    virtual = port * 16 + channel
    if kind == "ON":
        event: MidiEvent = NoteOn(virtual, int(fields["pitch"]), int(fields["vel"]))
    elif kind == "OFF":
        event = NoteOff(virtual, int(fields["pitch"]), int(fields["vel"]))
    elif kind == "PGM":
        event = ProgramChange(virtual, int(fields["prog"]))
    else:
        event = Controller(virtual, int(fields["cc"]), int(fields["val"]))
    return ScheduledMessage(timestamp=timestamp, port=port, channel=channel, event=event)


class Sink(Protocol):
    def emit(self, msg: ScheduledMessage) -> None: ...


class LogSink:
    """Writes one formatted line per delivered message."""

    def __init__(self, out: TextIO):
        self.out = out

    def emit(self, msg: ScheduledMessage) -> None:
        self.out.write(log_sink_format(msg))


class CollectSink:
    """Keeps delivered messages in memory (SMF export, figures, tests)."""

    def __init__(self) -> None:
        self.messages: list[ScheduledMessage] = []

    def emit(self, msg: ScheduledMessage) -> None:
        self.messages.append(msg)


class NullSink:
    def emit(self, msg: ScheduledMessage) -> None:
        pass


class DeliveryQueue:
    """Pending messages against a clock that can halt and jump.

    queue time = wall time - (accumulated halts) + (accumulated jumps);
    a message delivers once queue time reaches its timestamp, in
    timestamp order with ties broken by scheduling order. Nothing
    delivers while the clock is halted.
    """

    def __init__(self, clock, sink: Optional[Sink] = None):
        self.clock = clock
        self.sink = sink if sink is not None else NullSink()
        self._pending: list[tuple[int, int, ScheduledMessage]] = []
        self._seq = 0
        self._halted_at: Optional[int] = None
        self._pause_accum = 0
        self._advance_accum = 0
        self.delivered: list[Delivered] = []

    @property
    def halted(self) -> bool:
        return self._halted_at is not None

    @property
    def halted_at(self) -> Optional[int]:
        return self._halted_at

    def queue_time(self, wall: Optional[int] = None) -> int:
        if self._halted_at is not None:
            wall = self._halted_at
        elif wall is None:
            wall = self.clock.now()
        return wall - self._pause_accum + self._advance_accum

    def schedule(self, msg: ScheduledMessage) -> None:
        heapq.heappush(self._pending, (msg.timestamp, self._seq, msg))
        self._seq += 1

    def halt_clock(self, at_ms: int) -> None:
        if self._halted_at is not None:
            raise RuntimeError("queue clock already halted")
        self._halted_at = at_ms

    def resume_clock(self) -> None:
        if self._halted_at is None:
            raise RuntimeError("queue clock is not halted")
        self._pause_accum += self.clock.now() - self._halted_at
        self._halted_at = None

    def advance_clock(self, by_ms: int) -> None:
        self._advance_accum += by_ms

    def poll(self) -> list[Delivered]:
        """Deliver everything due at the current queue time."""
        if self._halted_at is not None:
            return []
        now = self.clock.now()
        due = self.queue_time(now)
        out: list[Delivered] = []
        while self._pending and self._pending[0][0] <= due:
            _, _, msg = heapq.heappop(self._pending)
            delivered = Delivered(wall_time=now, message=msg)
            self.delivered.append(delivered)
            out.append(delivered)
            self.sink.emit(msg)
        return out

    def deliver_now(self, msg: ScheduledMessage) -> Delivered:
        """Bypass the queue (slow-motion / single-step delivery)."""
        delivered = Delivered(wall_time=self.clock.now(), message=msg)
        self.delivered.append(delivered)
        self.sink.emit(msg)
        return delivered

    def pending_messages(self) -> list[ScheduledMessage]:
        return [msg for _, _, msg in sorted(self._pending)]

    def drain(self) -> list[Delivered]:
        out = self.delivered[:]
        self.delivered.clear()
        return out
