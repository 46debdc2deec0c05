"""Standard MIDI File writer.

Format 0, 1000 ticks per quarter at 60 bpm, so one tick is exactly one
millisecond and delta times are the millisecond differences between
consecutive messages. Lets a finite or bounded run be auditioned in any
MIDI player.
"""

from __future__ import annotations

import struct
import sys
from typing import BinaryIO, Sequence, Union

from .sinks import ScheduledMessage
from .stream import Controller, NoteOff, NoteOn, ProgramChange

__all__ = ["write_smf", "NonMonotoneTimestamps", "encode_smf"]

DIVISION = 1000  # ticks per quarter note
TEMPO_US_PER_QUARTER = 1_000_000  # 60 bpm


class NonMonotoneTimestamps(Exception):
    def __init__(self, index: int):
        super().__init__(f"message {index} has a smaller timestamp than its predecessor")
        self.index = index


def _vlq(value: int) -> bytes:
    """MIDI variable-length quantity, 7 bits per byte, high bit chains."""
    if value < 0:
        raise ValueError("delta times must be >= 0")
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(chunks))


def _event_bytes(msg: ScheduledMessage) -> bytes:
    ev = msg.event
    ch = msg.channel
    if isinstance(ev, NoteOn):
        return bytes((0x90 | ch, ev.pitch, ev.velocity))
    if isinstance(ev, NoteOff):
        return bytes((0x80 | ch, ev.pitch, ev.velocity))
    if isinstance(ev, ProgramChange):
        return bytes((0xC0 | ch, ev.program))
    if isinstance(ev, Controller):
        return bytes((0xB0 | ch, ev.controller, ev.value))
    raise TypeError(f"not a MIDI event: {ev!r}")


def encode_smf(messages: Sequence[ScheduledMessage]) -> bytes:
    """Serialize timestamp-sorted messages to SMF bytes."""
    track = bytearray()
    track += _vlq(0)
    track += bytes((0xFF, 0x51, 0x03))
    track += TEMPO_US_PER_QUARTER.to_bytes(3, "big")

    prev = 0
    ports_flattened = False
    for index, msg in enumerate(messages):
        if msg.timestamp < prev:
            raise NonMonotoneTimestamps(index)
        if msg.port > 0:
            ports_flattened = True
        track += _vlq(msg.timestamp - prev)
        track += _event_bytes(msg)
        prev = msg.timestamp
    if ports_flattened:
        print("warning: SMF output flattens ports > 0 onto one track",
              file=sys.stderr)

    track += _vlq(0)
    track += bytes((0xFF, 0x2F, 0x00))

    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, DIVISION)
    return header + b"MTrk" + struct.pack(">I", len(track)) + bytes(track)


def write_smf(messages: Sequence[ScheduledMessage],
              path_or_file: Union[str, BinaryIO]) -> int:
    """Write the file; returns the number of bytes written."""
    data = encode_smf(messages)
    if hasattr(path_or_file, "write"):
        path_or_file.write(data)  # type: ignore[union-attr]
    else:
        with open(path_or_file, "wb") as handle:  # type: ignore[arg-type]
            handle.write(data)
    return len(data)
