"""Stream extraction, event decoding, channel splitting, merge oracle."""

import random

import pytest

from liveseq.engine import Budget
from liveseq.stream import (
    Controller, EndOfStream, Ev, IllFormedEvent, IllFormedStream, NoteOff,
    NoteOn, ProgramChange, WaitMs, decode_event, merge_oracle, next_item,
    split_channel, stream_to_term, term_to_stream, total_duration,
)
from liveseq.syntax import parse_term, render_term
from liveseq.terms import Con

from helpers import MELODY, build_program, entry_term, random_normalized_stream

BUDGET = Budget()


# --- next_item --------------------------------------------------------------


def test_first_melody_item():
    program = build_program({"Main": MELODY})
    result = next_item(program, entry_term(), BUDGET)
    assert result.item == Ev(NoteOn(0, 60, 64))
    assert result.steps_used > 0
    # The rest term still shows the unexpanded remainder of the song.
    assert "note" in render_term(result.rest)


def test_empty_list_ends_stream():
    program = build_program({})
    assert isinstance(next_item(program, Con("[]"), BUDGET), EndOfStream)


def test_wait_head_no_rule_highlights():
    program = build_program({"Main": "rest = [] ;"})
    result = next_item(program, parse_term("Wait 100 : rest", "Main"), BUDGET)
    assert result.item == WaitMs(100)
    assert result.highlights == set()  # no named rule fired
    assert render_term(result.rest) == "rest"


def test_rest_is_untouched_tail():
    program = build_program({"Main": MELODY})
    result = next_item(program, entry_term(), BUDGET)
    # The second element of the cons is returned as-is, not forced:
    # the wait is still the unevaluated name `qn` inside.
    assert "qn" in render_term(result.rest)


def test_ill_formed_stream_head():
    program = build_program({})
    with pytest.raises(IllFormedStream):
        next_item(program, parse_term("42"), BUDGET)


def test_ill_formed_element():
    program = build_program({})
    with pytest.raises(IllFormedEvent):
        next_item(program, parse_term("Bogus 1 : []"), BUDGET)


def test_extraction_preserves_total_duration():
    """However extraction is interleaved, the waits sum the same."""
    program = build_program({"Main": MELODY})
    items = []
    term = entry_term()
    while True:
        result = next_item(program, term, BUDGET)
        if isinstance(result, EndOfStream):
            break
        items.append(result.item)
        term = result.rest
    assert total_duration(items) == 200 * 4 + 400 * 2


# --- decode_event -----------------------------------------------------------


def test_decode_note_on():
    assert decode_event(parse_term("Event (On 60 64)")) == Ev(NoteOn(0, 60, 64))


def test_decode_channel_wrapper():
    item = decode_event(parse_term("Event (Channel 40 (On 60 64))"))
    assert item == Ev(NoteOn(40, 60, 64))


def test_decode_rejects_out_of_range_pitch():
    with pytest.raises(IllFormedEvent):
        decode_event(parse_term("Event (On 200 64)"))


def test_decode_rejects_negative_wait():
    with pytest.raises(IllFormedEvent):
        decode_event(parse_term("Wait (-1)"))


def test_decode_zero_wait_is_legal():
    assert decode_event(parse_term("Wait 0")) == WaitMs(0)


def test_decode_other_kinds():
    assert decode_event(parse_term("Event (PgmChange 12)")) == Ev(ProgramChange(0, 12))
    assert decode_event(parse_term("Event (Controller 7 0)")) == Ev(Controller(0, 7, 0))
    assert decode_event(parse_term("Event (Channel 17 (Off 60 0))")) == Ev(NoteOff(17, 60, 0))


def test_decode_rejects_unknown_shapes():
    for bad in ("Event 5", "Event (On 60)", "Event (Channel 1 2)", "On 60 64"):
        with pytest.raises(IllFormedEvent):
            decode_event(parse_term(bad))


def test_decode_render_roundtrip_identity():
    """decode . parse . render . encode is the identity on items."""
    items = [WaitMs(0), WaitMs(7), Ev(NoteOn(0, 60, 64)), Ev(NoteOff(40, 1, 2)),
             Ev(ProgramChange(3, 9)), Ev(Controller(16, 64, 127))]
    term = stream_to_term(items)
    again = term_to_stream(parse_term(render_term(term)))
    assert again == items


# --- split_channel ----------------------------------------------------------


def test_split_channel_paper_example():
    assert split_channel(40) == (2, 8)


def test_split_channel_edges():
    assert split_channel(0) == (0, 0)
    assert split_channel(15) == (0, 15)
    assert split_channel(16) == (1, 0)


def test_split_channel_bijection():
    for virtual in range(0, 1000):
        port, local = split_channel(virtual)
        assert 0 <= local < 16
        assert port * 16 + local == virtual


# --- merge_oracle -----------------------------------------------------------

X = Ev(NoteOn(0, 1, 64))
Y = Ev(NoteOn(0, 2, 64))


def test_merge_oracle_offset_waits():
    assert merge_oracle([WaitMs(100), X], [WaitMs(50), Y]) == [
        WaitMs(50), Y, WaitMs(50), X]


def test_merge_oracle_empty_left():
    stream = [WaitMs(3), X, WaitMs(4), Y]
    assert merge_oracle([], stream) == stream
    assert merge_oracle(stream, []) == stream


def test_merge_oracle_simultaneous_events_left_first():
    assert merge_oracle([X], [Y]) == [X, Y]


def test_merge_oracle_trailing_wait_padding():
    assert merge_oracle([X, WaitMs(7)], [Y]) == [X, Y, WaitMs(7)]


def test_merge_duration_is_max():
    rng = random.Random(11)
    for _ in range(200):
        a = random_normalized_stream(rng)
        b = random_normalized_stream(rng)
        merged = merge_oracle(a, b)
        assert total_duration(merged) == max(total_duration(a), total_duration(b))
