"""Piano-roll rendering of a run's delivered messages.

Gives a bounded or finite run a visual artifact next to the log file:
note bars per (port, channel), program changes and controller moves as
markers.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .sinks import ScheduledMessage
from .stream import Controller, NoteOff, NoteOn, ProgramChange

__all__ = ["save_piano_roll"]


def _lane(msg: ScheduledMessage) -> tuple[int, int]:
    return (msg.port, msg.channel)


def save_piano_roll(messages: Sequence[ScheduledMessage], path: str,
                    title: str = "liveseq run") -> str:
    """Render messages as a piano roll and write the figure to `path`."""
    notes: list[tuple[int, int, int, tuple[int, int]]] = []  # start, end, pitch, lane
    marks: list[tuple[int, int, str, tuple[int, int]]] = []
    open_notes: dict[tuple[tuple[int, int], int], list[int]] = {}
    max_t = 0
    for msg in messages:
        max_t = max(max_t, msg.timestamp)
        ev = msg.event
        lane = _lane(msg)
        if isinstance(ev, NoteOn):
            open_notes.setdefault((lane, ev.pitch), []).append(msg.timestamp)
        elif isinstance(ev, NoteOff):
            starts = open_notes.get((lane, ev.pitch))
            if starts:
                notes.append((starts.pop(0), msg.timestamp, ev.pitch, lane))
        elif isinstance(ev, ProgramChange):
            marks.append((msg.timestamp, ev.program, "P", lane))
        elif isinstance(ev, Controller):
            marks.append((msg.timestamp, ev.value, "C", lane))
    for (lane, pitch), starts in open_notes.items():
        for start in starts:
            notes.append((start, max(max_t, start + 1), pitch, lane))

    lanes = sorted({lane for *_rest, lane in notes} | {lane for *_r, lane in marks}) or [(0, 0)]
    colors = plt.get_cmap("tab10")
    lane_color = {lane: colors(i % 10) for i, lane in enumerate(lanes)}

    fig, ax = plt.subplots(figsize=(10, 4))
    for start, end, pitch, lane in notes:
        ax.broken_barh([(start, max(end - start, 1))], (pitch - 0.4, 0.8),
                       color=lane_color[lane])
    for t, value, kind, lane in marks:
        ax.plot(t, value, marker="v" if kind == "P" else "^",
                color=lane_color[lane], linestyle="none", markersize=4)
    ax.set_xlabel("time [ms]")
    ax.set_ylabel("pitch / value")
    ax.set_title(title)
    handles = [plt.Line2D([], [], color=lane_color[lane], lw=4,
                          label=f"port {lane[0]} ch {lane[1]}") for lane in lanes]
    if handles:
        ax.legend(handles=handles, loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
