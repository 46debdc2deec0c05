"""Minimal independent Standard MIDI File reader (test oracle).

Parses format-0 files back into (milliseconds, status, data...) tuples,
computing real time from the division and tempo events rather than
assuming the writer's 1-tick-per-ms convention.
"""

from __future__ import annotations

import struct
from fractions import Fraction


def read_vlq(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    while True:
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos


def read_smf(data: bytes) -> dict:
    assert data[:4] == b"MThd"
    header_len, fmt, ntrks, division = struct.unpack(">IHHH", data[4:14])
    assert header_len == 6
    assert division & 0x8000 == 0, "SMPTE division not supported"
    pos = 14
    assert data[pos:pos + 4] == b"MTrk"
    (track_len,) = struct.unpack(">I", data[pos + 4:pos + 8])
    pos += 8
    end = pos + track_len

    events = []
    tempo_us = 500_000  # MIDI default until a tempo event appears
    ticks = 0
    ms = Fraction(0)
    running_status = None
    while pos < end:
        delta, pos = read_vlq(data, pos)
        ticks += delta
        ms += Fraction(delta * tempo_us, division * 1000)
        status = data[pos]
        if status & 0x80:
            pos += 1
            running_status = status
        else:
            status = running_status
        if status == 0xFF:
            meta_type = data[pos]
            pos += 1
            length, pos = read_vlq(data, pos)
            payload = data[pos:pos + length]
            pos += length
            if meta_type == 0x51:
                tempo_us = int.from_bytes(payload, "big")
            events.append((ms, "meta", meta_type, payload))
            continue
        kind = status & 0xF0
        channel = status & 0x0F
        if kind in (0x80, 0x90, 0xA0, 0xB0, 0xE0):
            d1, d2 = data[pos], data[pos + 1]
            pos += 2
            events.append((ms, "ch", kind, channel, d1, d2))
        elif kind in (0xC0, 0xD0):
            d1 = data[pos]
            pos += 1
            events.append((ms, "ch", kind, channel, d1))
        else:
            raise ValueError(f"unexpected status byte {status:#x}")
    return {"format": fmt, "ntrks": ntrks, "division": division, "events": events}


def channel_events_ms(data: bytes) -> list[tuple]:
    """(ms, kind, channel, data...) for channel events; ms must be integral."""
    out = []
    for event in read_smf(data)["events"]:
        if event[1] != "ch":
            continue
        ms = event[0]
        assert ms.denominator == 1, f"non-integral millisecond time {ms}"
        out.append((int(ms),) + event[2:])
    return out
