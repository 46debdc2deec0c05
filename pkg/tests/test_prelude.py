"""The interpreted standard modules: List helpers and the parallel merge."""

import random

from liveseq.engine import Budget, force, link_program
from liveseq.prelude import prelude_sources
from liveseq.stream import (
    Ev, NoteOff, NoteOn, WaitMs, merge_oracle, stream_to_term, term_to_stream,
    total_duration,
)
from liveseq.syntax import parse_module, parse_term, render_term
from liveseq.terms import Apply, Name

from helpers import build_program, extract_items, random_normalized_stream

BUDGET = Budget()


def test_prelude_parses():
    for name, source in prelude_sources().items():
        module = parse_module(source, name)
        assert module.name == name
        assert module.rules


def test_note_forces_to_three_elements():
    program = build_program({"Main": "import Midi ;"})
    value, _ = force(program, parse_term("note 200 60", "Main"), BUDGET)
    assert term_to_stream(value) == [
        Ev(NoteOn(0, 60, 64)), WaitMs(200), Ev(NoteOff(0, 60, 64))]


def test_pitch_constants():
    program = build_program({"Main": "import Midi ;"})
    for name, value in (("c", 60), ("d", 62), ("e", 64), ("f", 65), ("g", 67),
                        ("normalVelocity", 64)):
        term, _ = force(program, parse_term(name, "Main"), BUDGET)
        assert term.value == value, name


def _merge(program, a, b):
    term = Apply(Apply(Name("=:=", "Main"), stream_to_term(a)), stream_to_term(b))
    value, _ = force(program, term, BUDGET)
    return term_to_stream(value)


def test_merge_equal_waits_emit_once():
    program = build_program({"Main": "import Midi ;"})
    assert _merge(program, [WaitMs(4)], [WaitMs(4)]) == [WaitMs(4)]


def test_merge_empty_left():
    program = build_program({"Main": "import Midi ;"})
    assert _merge(program, [], [WaitMs(7)]) == [WaitMs(7)]


def test_merge_first_rule_wins():
    """(Wait 3 : []) =:= (Event e : []) must take rule 2 (event first),
    not the generic left-head rule 3."""
    program = build_program({"Main": "import Midi ;"})
    e = Ev(NoteOn(0, 5, 64))
    assert _merge(program, [WaitMs(3)], [e]) == [e, WaitMs(3)]


def test_merge_agrees_with_oracle_randomized():
    program = build_program({"Main": "import Midi ;"})
    rng = random.Random(4711)
    for _ in range(150):
        a = random_normalized_stream(rng)
        b = random_normalized_stream(rng)
        merged = _merge(program, a, b)
        assert merged == merge_oracle(a, b)
        assert total_duration(merged) == max(total_duration(a), total_duration(b))


def test_cycle_equals_unrolled_append():
    """cycle xs == xs ++ cycle xs on the first N items."""
    base = "import Midi ;\nxs = note 10 60 ++ note 20 62 ;"
    p1 = build_program({"Main": base + "\nmain = cycle xs ;"})
    p2 = build_program({"Main": base + "\nmain = xs ++ cycle xs ;"})
    items1, _ = extract_items(p1, parse_term("main", "Main"), 100)
    items2, _ = extract_items(p2, parse_term("main", "Main"), 100)
    assert len(items1) == 100
    assert items1 == items2


def test_list_helpers_behave():
    program = build_program({"Main": "inc x = x + 1 ;"})
    cases = [
        ("map inc (1 : 2 : [])", "2 : 3 : []"),
        ("concat ((1 : []) : (2 : 3 : []) : [])", "1 : 2 : 3 : []"),
        ("replicate 3 7", "7 : 7 : 7 : []"),
        ("zipWith (+) (1 : 2 : []) (10 : 20 : 30 : [])", "11 : 22 : []"),
        ("tail (1 : 2 : [])", "2 : []"),
    ]
    for source, expected in cases:
        value, _ = force(program, parse_term(source, "Main"), BUDGET)
        assert render_term(value) == expected, source
