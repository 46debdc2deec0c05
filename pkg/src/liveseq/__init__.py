"""liveseq: live-coding music via a lazy term-rewriting interpreter.

Programs in a small Haskell-like language denote (possibly infinite)
lists of MIDI events and waits. The interpreter expands the program
term only as far as the next event requires, so rules can be replaced
while the music plays: parts already expanded finish as written, parts
not yet expanded pick up the new definitions. A latency-compensated
scheduler sends the events to pluggable sinks, and an HTTP service lets
participants edit marked module regions from their browsers mid-song.
"""

from .engine import (
    Budget, Program, ReductionStep, eval_builtin, force, link_program, match,
    swap_module, term_node_count, whnf,
)
from .scheduler import (
    LatencyConfig, RealTime, Session, SingleStep, SlowMotion, VirtualClock,
    WallClock, run_headless,
)
from .sinks import DeliveryQueue, LogSink, ScheduledMessage
from .store import load_directory, submit_edit
from .stream import (
    Controller, Ev, MidiEvent, NoteOff, NoteOn, ProgramChange, StreamItem,
    WaitMs, decode_event, merge_oracle, next_item, split_channel,
)
from .syntax import parse_module, parse_term, render_term, tokenize

__version__ = "0.1.0"
