"""Tokenizer, parser and renderer behavior."""

import random

import pytest

from liveseq.syntax import (
    CONID, IDENT, INT, OP, PUNCT, STRING,
    EApp, EInt, EList, EName, EOp,
    LexError, ParseError, PCon, PInt, PVar, PWild,
    desugar, parse_module, parse_term, render_term, tokenize,
)
from liveseq.terms import (
    Apply, Con, IntLit, Name, StrLit, term_node_count, terms_equal,
)

from helpers import MELODY


# --- tokenize ---------------------------------------------------------------


def test_tokenize_simple_rule():
    tokens = tokenize("qn = 200 ;")
    assert [(t.kind, t.text) for t in tokens] == [
        (IDENT, "qn"), (OP, "="), (INT, "200"), (PUNCT, ";")]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_skips_comment():
    tokens = tokenize("2*qn ; -- half")
    assert [(t.kind, t.text) for t in tokens] == [
        (INT, "2"), (OP, "*"), (IDENT, "qn"), (PUNCT, ";")]


def test_tokenize_comment_token_kept_on_request():
    tokens = tokenize("x -- note\n", keep_comments=True)
    assert tokens[-1].kind == "comment"
    assert tokens[-1].text == "-- note"


def test_tokens_reconstruct_source():
    source = MELODY + '\ns = "a\\nb" ;  -- trailing\n'
    tokens = tokenize(source, keep_comments=True)
    # Spans are ordered, non-overlapping, and exactly cover the non-blank text.
    pos = 0
    for tok in tokens:
        assert tok.span.start >= pos
        assert source[tok.span.start:tok.span.end] == tok.text
        assert source[pos:tok.span.start].strip() == ""
        pos = tok.span.end
    assert source[pos:].strip() == ""


def test_tokenize_multichar_operators():
    tokens = tokenize("a =:= b ++ c == d")
    ops = [t.text for t in tokens if t.kind == OP]
    assert ops == ["=:=", "++", "=="]


def test_tokenize_constructor_vs_identifier():
    tokens = tokenize("Wait duration _eq c5")
    assert [(t.kind, t.text) for t in tokens] == [
        (CONID, "Wait"), (IDENT, "duration"), (IDENT, "_eq"), (IDENT, "c5")]


def test_tokenize_unterminated_string():
    with pytest.raises(LexError):
        tokenize('x = "abc')
    with pytest.raises(LexError):
        tokenize('x = "abc\n" ;')


def test_tokenize_illegal_character():
    with pytest.raises(LexError):
        tokenize("x = \x01 ;")


def test_string_escapes_roundtrip():
    tokens = tokenize('"a\\nb\\"c\\\\d"')
    assert tokens[0].kind == STRING
    term = parse_term('"a\\nb\\"c\\\\d"')
    assert isinstance(term, StrLit)
    assert term.value == 'a\nb"c\\d'
    assert render_term(term) == '"a\\nb\\"c\\\\d"'


# --- parse_module -----------------------------------------------------------


def test_parse_melody_module_has_ten_rules():
    module = parse_module(MELODY, "Main")
    assert [r.function for r in module.rules] == [
        "main", "note", "qn", "hn", "c", "d", "e", "f", "g", "normalVelocity"]
    assert module.name == "Main"
    assert module.exports is None
    assert module.imports == ()


def test_missing_semicolon_rejected():
    with pytest.raises(ParseError):
        parse_module("x = 1", "M")


def test_note_rule_shape():
    module = parse_module(
        "note duration pitch = [ Event (On pitch normalVelocity) , "
        "Wait duration , Event (Off pitch normalVelocity) ] ;", "M")
    (rule,) = module.rules
    assert rule.function == "note"
    assert rule.params == (PVar("duration"), PVar("pitch"))
    # Desugared body is a three-element cons chain.
    expected = parse_term(
        "Event (On pitch normalVelocity) : Wait duration : "
        "Event (Off pitch normalVelocity) : []", "M")
    assert terms_equal(rule.body, expected)


def test_module_header_and_imports():
    module = parse_module(
        "module Song (main) where import Midi ; main = note qn c ; qn = 200 ;",
        "Whatever")
    assert module.name == "Song"
    assert module.exports == ("main",)
    assert module.imports == ("Midi",)
    assert module.exported_names() == {"main"}


def test_layout_is_ignored():
    a = parse_module("main =\n  1 :\n      2 : [] ;", "M")
    b = parse_module("main = 1 : 2 : [] ;", "M")
    assert terms_equal(a.rules[0].body, b.rules[0].body)


def test_infix_operator_definition():
    module = parse_module("(x : xs) ++ ys = x : (xs ++ ys) ;\n[] ++ ys = ys ;", "M")
    assert [r.function for r in module.rules] == ["++", "++"]
    first = module.rules[0]
    assert first.params == (PCon(":", (PVar("x"), PVar("xs"))), PVar("ys"))
    assert module.rules[1].params[0] == PCon("[]")


def test_rule_order_preserved_per_function():
    module = parse_module("f 0 = 1 ;\ng = 2 ;\nf x = x ;", "M")
    assert [(r.function, r.params) for r in module.rules] == [
        ("f", (PInt(0),)), ("g", ()), ("f", (PVar("x"),))]


def test_wildcard_and_underscore_names():
    module = parse_module("f _ _x = _x ;", "M")
    assert module.rules[0].params == (PWild(), PVar("_x"))


def test_nonlinear_pattern_rejected():
    with pytest.raises(ParseError):
        parse_module("f x x = x ;", "M")
    # but _ may repeat
    parse_module("f _ _ = 1 ;", "M")


@pytest.mark.parametrize("source", [
    "main = [ x | x ] ;",            # list comprehension
    "main = (+ 3) ;",                # operator section
    "main = do x ;",                 # do notation
    "main = let x ;",                # let
    "main = case x of ;",            # case
    "infixl 5 ## ;",                 # custom fixity
    "main :: Stream ;",              # type signature
    "main = a ## b ;",               # unknown operator
    "main = a == b == c ;",          # non-associative chain
])
def test_excluded_syntax_rejected(source):
    with pytest.raises(ParseError):
        parse_module(source, "M")


def test_parse_errors_are_atomic():
    # A later bad rule rejects the whole module, not a prefix of it.
    with pytest.raises(ParseError):
        parse_module("good = 1 ;\nbad = ;\n", "M")


# --- desugar ----------------------------------------------------------------


def test_desugar_list_literal():
    term = desugar(EList((EApp(EName("Wait"), EInt(100)),)))
    expected = Apply(Apply(Con(":"), Apply(Name("Wait"), IntLit(100))), Con("[]"))
    assert terms_equal(term, expected)


def test_desugar_cons_right_associative():
    term = parse_term("1 : 2 : []")
    expected = Apply(Apply(Con(":"), IntLit(1)),
                     Apply(Apply(Con(":"), IntLit(2)), Con("[]")))
    assert terms_equal(term, expected)


def test_desugar_append():
    term = parse_term("note hn g ++ main")
    expected = Apply(
        Apply(Name("++"),
              Apply(Apply(Name("note"), Name("hn")), Name("g"))),
        Name("main"))
    assert terms_equal(term, expected)


def test_operator_precedence():
    assert terms_equal(parse_term("1+2*3"), parse_term("1+(2*3)"))
    assert terms_equal(parse_term("1 : 2+3 : []"), parse_term("1 : (2+3) : []"))
    assert terms_equal(parse_term("a-b-c"), parse_term("(a-b)-c"))
    assert terms_equal(parse_term("a div b mod c"), parse_term("(a div b) mod c"))


def test_prefix_operator_form():
    term = parse_term("zipWith (+) x (tail x)")
    assert isinstance(term, Apply)
    plus = term.fun.fun.arg
    assert isinstance(plus, Name) and plus.ident == "+"
    cons = parse_term("(:)")
    assert isinstance(cons, Con) and cons.name == ":"


def test_negative_literal_atom():
    term = parse_term("(-5)")
    assert isinstance(term, IntLit) and term.value == -5


# --- render_term ------------------------------------------------------------


def test_render_interpreter_state_example():
    source = "Wait 200 : (Event (Off g normalVelocity) : (note hn g ++ main))"
    term = parse_term(source, "M")
    rendered = render_term(term)
    assert rendered == "Wait 200 : Event (Off g normalVelocity) : (note hn g ++ main)"
    assert terms_equal(parse_term(rendered, "M"), term)


def test_render_integer():
    assert render_term(IntLit(5)) == "5"
    assert render_term(IntLit(-5)) == "(-5)"


def test_render_no_sharing_display():
    term = parse_term("5 : (2+3) : []")
    assert render_term(term) == "5 : (2+3) : []"


def test_render_depth_limit():
    term = parse_term("1 : 2 : 3 : []")
    assert "..." in render_term(term, max_depth=2)
    assert render_term(term, max_depth=50) == "1 : 2 : 3 : []"


def _random_term(rng: random.Random, depth: int):
    roll = rng.random()
    if depth <= 0 or roll < 0.25:
        return rng.choice([
            IntLit(rng.randrange(-20, 100)),
            Name(rng.choice(["x", "foo", "mergeWait", "negate"]), "M"),
            Con(rng.choice(["Wait", "On", "True", "[]"])),
            StrLit(rng.choice(["", "a b", 'quo"te', "line\nbreak"])),
        ])
    if roll < 0.55:
        op = rng.choice(["+", "-", "*", ":", "++", "=:=", "<", "==", "div"])
        head = Con(":") if op == ":" else Name(op, "M")
        return Apply(Apply(head, _random_term(rng, depth - 1)),
                     _random_term(rng, depth - 1))
    return Apply(_random_term(rng, depth - 1), _random_term(rng, depth - 1))


def test_render_parse_roundtrip_random_terms():
    """parse(render(T)) is structurally identical to T."""
    rng = random.Random(7)
    for _ in range(300):
        term = _random_term(rng, 5)
        rendered = render_term(term)
        again = parse_term(rendered, "M")
        assert terms_equal(term, again), rendered


def test_render_roundtrip_preserves_node_count():
    rng = random.Random(8)
    for _ in range(100):
        term = _random_term(rng, 4)
        again = parse_term(render_term(term), "M")
        assert term_node_count(again) == term_node_count(term)


def test_tokenize_parse_deterministic():
    source = MELODY
    assert tokenize(source) == tokenize(source)
    m1, m2 = parse_module(source, "M"), parse_module(source, "M")
    assert [r.span for r in m1.rules] == [r.span for r in m2.rules]
    assert all(terms_equal(a.body, b.body) for a, b in zip(m1.rules, m2.rules))
