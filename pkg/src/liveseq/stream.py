"""Turning terms into music: extract the next wait/event from the
current term, validate event shapes, and map virtual channels to
(port, channel) pairs.

A song term denotes a list whose elements are either `Wait n` (n in
milliseconds) or `Event e` where e is one of

    On pitch velocity | Off pitch velocity
    | PgmChange program | Controller controller value

optionally wrapped as `Channel ch e` to address a nonzero virtual
channel. Virtual channels are unbounded; every 16 of them map to one
output port.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .engine import Budget, Program, Reducer, ReductionStep
from .syntax import render_term
from .terms import Apply, Con, IntLit, Name, SourceSpan, Term

__all__ = [
    "NoteOn", "NoteOff", "ProgramChange", "Controller", "MidiEvent",
    "WaitMs", "Ev", "StreamItem", "ExtractionResult", "EndOfStream",
    "END_OF_STREAM", "StreamError", "IllFormedStream", "IllFormedEvent",
    "next_item", "next_element", "decode_event", "split_channel",
    "merge_oracle", "stream_to_term", "term_to_stream", "total_duration",
]


@dataclass(frozen=True)
class NoteOn:
    channel: int
    pitch: int
    velocity: int


@dataclass(frozen=True)
class NoteOff:
    channel: int
    pitch: int
    velocity: int


@dataclass(frozen=True)
class ProgramChange:
    channel: int
    program: int


@dataclass(frozen=True)
class Controller:
    channel: int
    controller: int
    value: int


MidiEvent = Union[NoteOn, NoteOff, ProgramChange, Controller]


@dataclass(frozen=True)
class WaitMs:
    duration: int


@dataclass(frozen=True)
class Ev:
    event: MidiEvent


StreamItem = Union[WaitMs, Ev]


class EndOfStream:
    """The song term reduced to the empty list; a finite song is over."""

    def __repr__(self) -> str:
        return "EndOfStream"


END_OF_STREAM = EndOfStream()


@dataclass
class ExtractionResult:
    item: StreamItem
    rest: Term
    highlights: set[SourceSpan]
    steps_used: int
    steps: list[ReductionStep]


class StreamError(Exception):
    pass


class IllFormedStream(StreamError):
    def __init__(self, rendered: str):
        super().__init__(f"term is not a list: {rendered}")
        self.rendered = rendered


_ACCEPTED_SHAPES = ("Wait n | Event (On p v) | Event (Off p v) | "
                    "Event (PgmChange pr) | Event (Controller cc val), "
                    "each event optionally Event (Channel ch e)")


class IllFormedEvent(StreamError):
    def __init__(self, rendered: str, reason: str = ""):
        detail = f" ({reason})" if reason else ""
        super().__init__(
            f"not a recognizable stream element: {rendered}{detail}; accepted: {_ACCEPTED_SHAPES}")
        self.rendered = rendered
        self.reason = reason


def split_channel(virtual_channel: int) -> tuple[int, int]:
    """Virtual channel -> (port, local channel); 16 channels per port."""
    if virtual_channel < 0:
        raise ValueError("virtual channel must be >= 0")
    return divmod(virtual_channel, 16)


def _spine(term: Term) -> tuple[Term, list[Apply]]:
    head: Term = term
    applies: list[Apply] = []
    while isinstance(head, Apply):
        applies.append(head)
        head = head.fun
    applies.reverse()
    return head, applies


def _int_field(term: Term, what: str, rendered: str, low: int = 0, high: int = 127) -> int:
    if not isinstance(term, IntLit):
        raise IllFormedEvent(rendered, f"{what} is not an integer")
    if not (low <= term.value <= high):
        raise IllFormedEvent(rendered, f"{what} {term.value} out of {low}..{high}")
    return term.value


def decode_event(value: Term) -> StreamItem:
    """Decode a fully forced term into a stream item.

    `Wait n` needs n >= 0; event payloads must sit in the 7-bit MIDI
    range; `Channel ch e` sets the virtual channel (default 0).
    """
    rendered = render_term(value, max_depth=8)
    head, applies = _spine(value)
    if not isinstance(head, Con):
        raise IllFormedEvent(rendered)
    args = [node.arg for node in applies]
    if head.name == "Wait":
        if len(args) != 1:
            raise IllFormedEvent(rendered, "Wait takes one duration")
        if not isinstance(args[0], IntLit):
            raise IllFormedEvent(rendered, "duration is not an integer")
        if args[0].value < 0:
            raise IllFormedEvent(rendered, f"negative duration {args[0].value}")
        return WaitMs(args[0].value)
    if head.name != "Event" or len(args) != 1:
        raise IllFormedEvent(rendered)

    channel = 0
    payload = args[0]
    inner_head, inner_applies = _spine(payload)
    if isinstance(inner_head, Con) and inner_head.name == "Channel":
        if len(inner_applies) != 2:
            raise IllFormedEvent(rendered, "Channel takes a channel and an event")
        ch_term = inner_applies[0].arg
        if not isinstance(ch_term, IntLit) or ch_term.value < 0:
            raise IllFormedEvent(rendered, "channel must be an integer >= 0")
        channel = ch_term.value
        payload = inner_applies[1].arg
        inner_head, inner_applies = _spine(payload)
    if not isinstance(inner_head, Con):
        raise IllFormedEvent(rendered)
    inner_args = [node.arg for node in inner_applies]

    if inner_head.name == "On" and len(inner_args) == 2:
        return Ev(NoteOn(channel,
                         _int_field(inner_args[0], "pitch", rendered),
                         _int_field(inner_args[1], "velocity", rendered)))
    if inner_head.name == "Off" and len(inner_args) == 2:
        return Ev(NoteOff(channel,
                          _int_field(inner_args[0], "pitch", rendered),
                          _int_field(inner_args[1], "velocity", rendered)))
    if inner_head.name == "PgmChange" and len(inner_args) == 1:
        return Ev(ProgramChange(channel, _int_field(inner_args[0], "program", rendered)))
    if inner_head.name == "Controller" and len(inner_args) == 2:
        return Ev(Controller(channel,
                             _int_field(inner_args[0], "controller", rendered),
                             _int_field(inner_args[1], "value", rendered)))
    raise IllFormedEvent(rendered)


def _extract(program: Program, term: Term, budget: Budget,
             decode: bool) -> Union[ExtractionResult, EndOfStream]:
    reducer = Reducer(program, budget)
    term = reducer.whnf_term(term)
    head, applies = _spine(term)
    if isinstance(head, Con) and head.name == "[]" and not applies:
        return END_OF_STREAM
    if not (isinstance(head, Con) and head.name == ":" and len(applies) == 2):
        raise IllFormedStream(render_term(term, max_depth=8))
    element_holder, rest_holder = applies
    # Force the leading element in place: the session term visibly
    # contains the forced value until the item is consumed.
    element_holder.arg = reducer.force_term(element_holder.arg, (0, 1))
    value = element_holder.arg
    item: StreamItem = decode_event(value) if decode else value  # type: ignore[assignment]
    return ExtractionResult(
        item=item,
        rest=rest_holder.arg,
        highlights={step.highlight_span for step in reducer.steps},
        steps_used=len(reducer.steps),
        steps=reducer.steps,
    )


def next_item(program: Program, term: Term,
              budget: Budget) -> Union[ExtractionResult, EndOfStream]:
    """Reduce the term far enough to peel off one wait or MIDI event.

    The head of the list is forced completely and decoded; the tail is
    returned untouched. Highlights are the source spans expanded while
    producing this item.
    """
    return _extract(program, term, budget, decode=True)


def next_element(program: Program, term: Term,
                 budget: Budget) -> Union[ExtractionResult, EndOfStream]:
    """Like next_item but the element stays a term (no event decoding).

    Lets non-musical list programs (number streams etc.) run through
    the same machinery.
    """
    return _extract(program, term, budget, decode=False)


# --- native merge reference ---------------------------------------------


def total_duration(items: Sequence[StreamItem]) -> int:
    return sum(item.duration for item in items if isinstance(item, WaitMs))


def merge_oracle(a: Sequence[StreamItem], b: Sequence[StreamItem]) -> list[StreamItem]:
    """Test-only native reference for the interpreted parallel merge.

    Both streams are laid out on an absolute timeline; events are
    merged by time with ties broken a-before-b (each stream keeping its
    internal order), then waits are re-derived as the gaps between
    event times, with a trailing wait padding to the longer total
    duration. No zero waits and no adjacent waits can appear.
    """
    tagged: list[tuple[int, int, int, StreamItem]] = []
    durations = []
    for src, items in enumerate((a, b)):
        t = 0
        for idx, item in enumerate(items):
            if isinstance(item, WaitMs):
                t += item.duration
            else:
                tagged.append((t, src, idx, item))
        durations.append(t)
    tagged.sort(key=lambda entry: (entry[0], entry[1], entry[2]))
    out: list[StreamItem] = []
    now = 0
    for t, _src, _idx, item in tagged:
        if t > now:
            out.append(WaitMs(t - now))
            now = t
        out.append(item)
    total = max(durations)
    if total > now:
        out.append(WaitMs(total - now))
    return out


# --- term <-> stream helpers ----------------------------------------------


def _event_term(event: MidiEvent) -> Term:
    if isinstance(event, NoteOn):
        inner: Term = Apply(Apply(Con("On"), IntLit(event.pitch)), IntLit(event.velocity))
    elif isinstance(event, NoteOff):
        inner = Apply(Apply(Con("Off"), IntLit(event.pitch)), IntLit(event.velocity))
    elif isinstance(event, ProgramChange):
        inner = Apply(Con("PgmChange"), IntLit(event.program))
    elif isinstance(event, Controller):
        inner = Apply(Apply(Con("Controller"), IntLit(event.controller)), IntLit(event.value))
    else:
        raise TypeError(f"not a MIDI event: {event!r}")
    if event.channel != 0:
        inner = Apply(Apply(Con("Channel"), IntLit(event.channel)), inner)
    return Apply(Con("Event"), inner)


def stream_to_term(items: Sequence[StreamItem]) -> Term:
    """Build the list term denoting a finite stream (tests, demos)."""
    out: Term = Con("[]")
    for item in reversed(items):
        if isinstance(item, WaitMs):
            element: Term = Apply(Con("Wait"), IntLit(item.duration))
        else:
            element = _event_term(item.event)
        out = Apply(Apply(Con(":"), element), out)
    return out


def term_to_stream(value: Term) -> list[StreamItem]:
    """Decode a fully forced list term into stream items."""
    items: list[StreamItem] = []
    cur = value
    while True:
        head, applies = _spine(cur)
        if isinstance(head, Con) and head.name == "[]" and not applies:
            return items
        if not (isinstance(head, Con) and head.name == ":" and len(applies) == 2):
            raise IllFormedStream(render_term(cur, max_depth=8))
        items.append(decode_event(applies[0].arg))
        cur = applies[1].arg
