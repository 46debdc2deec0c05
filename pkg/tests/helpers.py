"""Shared fixtures: program texts and extraction helpers."""

from __future__ import annotations

import random

from liveseq.engine import Budget, Program, link_program
from liveseq.prelude import prelude_sources
from liveseq.stream import (
    EndOfStream, Ev, NoteOff, NoteOn, StreamItem, WaitMs, next_item,
)
from liveseq.syntax import parse_module, parse_term
from liveseq.terms import Term

# The quarter-note melody program (finite form).
MELODY = """\
main =
   note qn c ++ note qn d ++
   note qn e ++ note qn f ++
   note hn g ++ note hn g ;

note duration pitch =
   [ Event (On pitch normalVelocity)
   , Wait duration
   , Event (Off pitch normalVelocity)
   ] ;

qn = 200 ;  -- quarter note
hn = 2*qn ; -- half note

c = 60 ;
d = 62 ;
e = 64 ;
f = 65 ;
g = 67 ;
normalVelocity = 64 ;
"""

# Looped form: the melody repeats by calling main again.
LOOP = MELODY.replace("note hn g ++ note hn g ;", "note hn g ++ note hn g ++ main ;")

# Loop continuation target with a distinct melody of its own.
LOOP_A = LOOP + """
loopA =
   note qn g ++ note qn f ++
   note qn e ++ note qn d ++ loopA ;
"""

FIB = """\
main = fix fibs ;
fibs x = 0 : 1 : zipWith (+) x (tail x) ;
fix f = f (fix f) ;
"""


def build_program(extra: dict[str, str]) -> Program:
    modules = {name: parse_module(src, name) for name, src in prelude_sources().items()}
    for name, src in extra.items():
        modules[name] = parse_module(src, name)
    return link_program(modules)


def entry_term(module: str = "Main", function: str = "main") -> Term:
    return parse_term(function, module)


def extract_items(program: Program, term: Term, limit: int,
                  budget: Budget = Budget()) -> tuple[list[StreamItem], Term]:
    items: list[StreamItem] = []
    while len(items) < limit:
        result = next_item(program, term, budget)
        if isinstance(result, EndOfStream):
            break
        items.append(result.item)
        term = result.rest
    return items, term


def extract_all(program: Program, term: Term, hard_limit: int = 10_000,
                budget: Budget = Budget()) -> list[StreamItem]:
    items, _ = extract_items(program, term, hard_limit, budget)
    assert len(items) < hard_limit, "stream did not end"
    return items


# Expected items of one full melody pass (also one loop iteration).
def melody_items() -> list[StreamItem]:
    items: list[StreamItem] = []
    for pitch, duration in ((60, 200), (62, 200), (64, 200), (65, 200),
                            (67, 400), (67, 400)):
        items.append(Ev(NoteOn(0, pitch, 64)))
        items.append(WaitMs(duration))
        items.append(Ev(NoteOff(0, pitch, 64)))
    return items


def random_normalized_stream(rng: random.Random, max_len: int = 20) -> list[StreamItem]:
    """A well-formed finite stream: waits 1..10 ms, never adjacent,
    never trailing; events carry distinct pitches so order mismatches
    show up."""
    length = rng.randrange(0, max_len + 1)
    items: list[StreamItem] = []
    wait_ok = True
    pitch = rng.randrange(0, 40)
    while len(items) < length:
        if wait_ok and rng.random() < 0.45:
            items.append(WaitMs(rng.randrange(1, 11)))
            wait_ok = False
        else:
            pitch = (pitch + 1) % 128
            items.append(Ev(NoteOn(rng.randrange(0, 3), pitch, 64)))
            wait_ok = True
    while items and isinstance(items[-1], WaitMs):
        items.pop()
    return items
