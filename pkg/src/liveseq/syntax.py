"""Tokenizer, parser and pretty-printer for the interpreted language.

The language is a dynamically typed Haskell-like notation with no layout
rule: every declaration ends with an explicit `;`, indentation carries no
meaning, and `--` starts a line comment. Values are integers, text
literals and constructor applications; programs are ordered rewrite
rules grouped into modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .terms import Apply, Con, IntLit, Name, SourceSpan, StrLit, Term

# Token kinds
IDENT = "identifier"
CONID = "constructor-name"
INT = "integer-literal"
STRING = "string-literal"
OP = "operator"
PUNCT = "punctuation"
COMMENT = "comment"

_OP_CHARS = set("!#$%&*+./<=>?@^|~:-")
_PUNCT_CHARS = set("()[],;")

# Fixed operator table: (precedence, associativity). Higher binds tighter.
OPERATOR_TABLE: dict[str, tuple[int, str]] = {
    "*": (7, "left"),
    "div": (7, "left"),
    "mod": (7, "left"),
    "+": (6, "left"),
    "-": (6, "left"),
    ":": (5, "right"),
    "++": (5, "right"),
    "=:=": (5, "right"),
    "==": (4, "non"),
    "/=": (4, "non"),
    "<": (4, "non"),
    "<=": (4, "non"),
    ">": (4, "non"),
    ">=": (4, "non"),
}

# Operators that read naturally without surrounding spaces.
_TIGHT_OPS = {"*", "+", "-", "==", "/=", "<", "<=", ">", ">="}

_RESERVED = {
    "module", "where", "import",
    "do", "let", "in", "case", "of", "if", "then", "else",
    "data", "type", "newtype", "class", "instance", "deriving",
    "infix", "infixl", "infixr",
}


class SourceError(Exception):
    """Base for errors that point at a span of module source."""

    def __init__(self, span: SourceSpan, message: str):
        super().__init__(f"{span.module}[{span.start}..{span.end}]: {message}")
        self.span = span
        self.message = message


class LexError(SourceError):
    pass


class ParseError(SourceError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan


def tokenize(source: str, module: str = "<input>", keep_comments: bool = False) -> list[Token]:
    """Split source into tokens; comments are dropped unless asked for.

    Joining token texts with the skipped whitespace/comments reproduces
    the input exactly (tokens carry their spans).
    """
    tokens: list[Token] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            i += 1
            continue
        start = i
        if source.startswith("--", i):
            while i < n and source[i] != "\n":
                i += 1
            if keep_comments:
                tokens.append(Token(COMMENT, source[start:i], SourceSpan(module, start, i)))
            continue
        if ch in _PUNCT_CHARS:
            i += 1
            tokens.append(Token(PUNCT, ch, SourceSpan(module, start, i)))
            continue
        if ch.isdigit():
            while i < n and source[i].isdigit():
                i += 1
            tokens.append(Token(INT, source[start:i], SourceSpan(module, start, i)))
            continue
        if ch.isalpha() or ch == "_":
            i += 1
            while i < n and (source[i].isalnum() or source[i] in "_'"):
                i += 1
            kind = CONID if ch.isupper() else IDENT
            tokens.append(Token(kind, source[start:i], SourceSpan(module, start, i)))
            continue
        if ch == '"':
            i += 1
            while True:
                if i >= n or source[i] == "\n":
                    raise LexError(SourceSpan(module, start, i), "unterminated string literal")
                if source[i] == "\\":
                    if i + 1 >= n or source[i + 1] not in '\\"n':
                        raise LexError(SourceSpan(module, i, i + 2), "unsupported escape sequence")
                    i += 2
                    continue
                if source[i] == '"':
                    i += 1
                    break
                i += 1
            tokens.append(Token(STRING, source[start:i], SourceSpan(module, start, i)))
            continue
        if ch in _OP_CHARS:
            while i < n and source[i] in _OP_CHARS and not source.startswith("--", i):
                i += 1
            tokens.append(Token(OP, source[start:i], SourceSpan(module, start, i)))
            continue
        raise LexError(SourceSpan(module, start, start + 1), f"illegal character {ch!r}")
    return tokens


def decode_string(token_text: str) -> str:
    body = token_text[1:-1]
    out = []
    i = 0
    while i < len(body):
        if body[i] == "\\":
            out.append({"\\": "\\", '"': '"', "n": "\n"}[body[i + 1]])
            i += 2
        else:
            out.append(body[i])
            i += 1
    return "".join(out)


def encode_string(value: str) -> str:
    out = ['"']
    for ch in value:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


# --- patterns -----------------------------------------------------------


class Pattern:
    __slots__ = ()


@dataclass(frozen=True)
class PVar(Pattern):
    name: str


@dataclass(frozen=True)
class PWild(Pattern):
    pass


@dataclass(frozen=True)
class PInt(Pattern):
    value: int


@dataclass(frozen=True)
class PStr(Pattern):
    value: str


@dataclass(frozen=True)
class PCon(Pattern):
    name: str
    subpatterns: tuple[Pattern, ...] = ()


def pattern_variables(pattern: Pattern) -> list[str]:
    if isinstance(pattern, PVar):
        return [pattern.name]
    if isinstance(pattern, PCon):
        out: list[str] = []
        for sub in pattern.subpatterns:
            out.extend(pattern_variables(sub))
        return out
    return []


# --- sugared expressions -------------------------------------------------


class TermExpr:
    __slots__ = ()


@dataclass(frozen=True)
class EName(TermExpr):
    ident: str
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class ECon(TermExpr):
    name: str


@dataclass(frozen=True)
class EInt(TermExpr):
    value: int


@dataclass(frozen=True)
class EStr(TermExpr):
    value: str


@dataclass(frozen=True)
class EApp(TermExpr):
    fun: TermExpr
    arg: TermExpr


@dataclass(frozen=True)
class EOp(TermExpr):
    op: str
    left: TermExpr
    right: TermExpr
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class EList(TermExpr):
    items: tuple[TermExpr, ...]


def desugar(expr: TermExpr, module: str = "") -> Term:
    """Lower the sugared AST to a plain operator tree.

    `[a, b]` becomes `a : (b : [])`, infix applications become binary
    apply spines, `:`/`[]` become constructor symbols.
    """
    if isinstance(expr, EName):
        return Name(expr.ident, module, expr.span)
    if isinstance(expr, ECon):
        return Con(expr.name)
    if isinstance(expr, EInt):
        return IntLit(expr.value)
    if isinstance(expr, EStr):
        return StrLit(expr.value)
    if isinstance(expr, EApp):
        return Apply(desugar(expr.fun, module), desugar(expr.arg, module))
    if isinstance(expr, EOp):
        if expr.op == ":":
            head: Term = Con(":")
        else:
            head = Name(expr.op, module, expr.span)
        return Apply(Apply(head, desugar(expr.left, module)), desugar(expr.right, module))
    if isinstance(expr, EList):
        out: Term = Con("[]")
        for item in reversed(expr.items):
            out = Apply(Apply(Con(":"), desugar(item, module)), out)
        return out
    raise TypeError(f"not an expression: {expr!r}")


# --- rules and modules ----------------------------------------------------


@dataclass
class Rule:
    """One rewrite rule `f p1 .. pn = body ;` (body already desugared)."""

    function: str
    params: tuple[Pattern, ...]
    body: Term
    span: SourceSpan
    name_span: SourceSpan

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass
class ParsedModule:
    name: str
    exports: Optional[tuple[str, ...]]  # None means export everything
    imports: tuple[str, ...]
    rules: tuple[Rule, ...]
    source: str

    def exported_names(self) -> set[str]:
        defined = {rule.function for rule in self.rules}
        if self.exports is None:
            return defined
        return defined & set(self.exports)


class _Cursor:
    def __init__(self, tokens: list[Token], module: str, length: int):
        self.tokens = tokens
        self.module = module
        self.pos = 0
        self.length = length

    def eof_span(self) -> SourceSpan:
        return SourceSpan(self.module, self.length, self.length)

    def peek(self, ahead: int = 0) -> Optional[Token]:
        index = self.pos + ahead
        return self.tokens[index] if index < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError(self.eof_span(), "unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok is None:
            want = text or kind
            raise ParseError(self.eof_span(), f"expected {want!r} but input ended")
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise ParseError(tok.span, f"expected {want!r}, found {tok.text!r}")
        self.pos += 1
        return tok

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind and (text is None or tok.text == text)


def _check_not_reserved(tok: Token) -> None:
    if tok.kind == IDENT and tok.text in _RESERVED:
        raise ParseError(tok.span, f"reserved word {tok.text!r} is not supported here")


_PATTERN_START = {IDENT, CONID, INT, STRING}


def _parse_atomic_pattern(cur: _Cursor) -> Pattern:
    tok = cur.peek()
    if tok is None:
        raise ParseError(cur.eof_span(), "expected a pattern")
    if tok.kind == IDENT:
        _check_not_reserved(tok)
        cur.next()
        return PWild() if tok.text == "_" else PVar(tok.text)
    if tok.kind == INT:
        cur.next()
        return PInt(int(tok.text))
    if tok.kind == STRING:
        cur.next()
        return PStr(decode_string(tok.text))
    if tok.kind == CONID:
        cur.next()
        return PCon(tok.text)
    if tok.kind == PUNCT and tok.text == "(":
        cur.next()
        inner = _parse_pattern(cur)
        cur.expect(PUNCT, ")")
        return inner
    if tok.kind == PUNCT and tok.text == "[":
        cur.next()
        items: list[Pattern] = []
        if not cur.at(PUNCT, "]"):
            items.append(_parse_pattern(cur))
            while cur.at(PUNCT, ","):
                cur.next()
                items.append(_parse_pattern(cur))
        cur.expect(PUNCT, "]")
        out: Pattern = PCon("[]")
        for item in reversed(items):
            out = PCon(":", (item, out))
        return out
    raise ParseError(tok.span, f"expected a pattern, found {tok.text!r}")


def _starts_atomic_pattern(cur: _Cursor) -> bool:
    tok = cur.peek()
    if tok is None:
        return False
    if tok.kind in _PATTERN_START:
        return not (tok.kind == IDENT and tok.text in _RESERVED)
    return tok.kind == PUNCT and tok.text in "(["


def _parse_pattern(cur: _Cursor) -> Pattern:
    tok = cur.peek()
    if tok is not None and tok.kind == CONID:
        cur.next()
        subs = []
        while _starts_atomic_pattern(cur):
            subs.append(_parse_atomic_pattern(cur))
        left: Pattern = PCon(tok.text, tuple(subs))
    else:
        left = _parse_atomic_pattern(cur)
    if cur.at(OP, ":"):
        cur.next()
        right = _parse_pattern(cur)  # : is right-associative
        return PCon(":", (left, right))
    return left


# --- expression parsing ---------------------------------------------------


def _peek_operator(cur: _Cursor) -> Optional[str]:
    tok = cur.peek()
    if tok is None:
        return None
    if tok.kind == OP and tok.text != "=":
        return tok.text
    if tok.kind == IDENT and tok.text in ("div", "mod"):
        return tok.text
    return None


def _parse_atom(cur: _Cursor) -> Optional[TermExpr]:
    tok = cur.peek()
    if tok is None:
        return None
    if tok.kind == IDENT:
        if tok.text in _RESERVED:
            return None
        if tok.text in ("div", "mod"):
            return None  # infix only; prefix form is written (div)
        cur.next()
        return EName(tok.text, tok.span)
    if tok.kind == CONID:
        cur.next()
        return ECon(tok.text)
    if tok.kind == INT:
        cur.next()
        return EInt(int(tok.text))
    if tok.kind == STRING:
        cur.next()
        return EStr(decode_string(tok.text))
    if tok.kind == PUNCT and tok.text == "(":
        cur.next()
        inner = cur.peek()
        if inner is None:
            raise ParseError(cur.eof_span(), "unclosed parenthesis")
        # Prefix form of an operator: (++), (:), (div); also the
        # parenthesized negative literal (-5).
        if inner.kind == OP or (inner.kind == IDENT and inner.text in ("div", "mod")):
            op_tok = cur.next()
            if op_tok.text == "-" and cur.at(INT):
                value_tok = cur.next()
                cur.expect(PUNCT, ")")
                return EInt(-int(value_tok.text))
            if cur.at(PUNCT, ")"):
                cur.next()
                if op_tok.text == ":":
                    return ECon(":")
                if op_tok.text == "=" or op_tok.text not in OPERATOR_TABLE:
                    raise ParseError(op_tok.span, f"unknown operator {op_tok.text!r}")
                return EName(op_tok.text, op_tok.span)
            raise ParseError(op_tok.span, "operator sections are not supported")
        expr = _parse_expr(cur, 0)
        if cur.at(PUNCT, ","):
            raise ParseError(cur.peek().span, "tuples are not supported")
        cur.expect(PUNCT, ")")
        return expr
    if tok.kind == PUNCT and tok.text == "[":
        cur.next()
        items: list[TermExpr] = []
        if not cur.at(PUNCT, "]"):
            items.append(_parse_expr(cur, 0))
            if cur.at(OP, "|"):
                raise ParseError(cur.peek().span, "list comprehensions are not supported")
            while cur.at(PUNCT, ","):
                cur.next()
                items.append(_parse_expr(cur, 0))
        cur.expect(PUNCT, "]")
        return EList(tuple(items))
    return None


def _parse_application(cur: _Cursor) -> TermExpr:
    first = _parse_atom(cur)
    if first is None:
        tok = cur.peek()
        if tok is None:
            raise ParseError(cur.eof_span(), "expected an expression")
        if tok.kind == IDENT and tok.text in _RESERVED:
            raise ParseError(tok.span, f"{tok.text!r} notation is not supported")
        raise ParseError(tok.span, f"expected an expression, found {tok.text!r}")
    expr = first
    while True:
        arg = _parse_atom(cur)
        if arg is None:
            return expr
        expr = EApp(expr, arg)


def _parse_expr(cur: _Cursor, min_prec: int) -> TermExpr:
    left = _parse_application(cur)
    while True:
        op = _peek_operator(cur)
        if op is None:
            return left
        if op == "::":
            raise ParseError(cur.peek().span, "type signatures are not supported")
        if op not in OPERATOR_TABLE:
            raise ParseError(cur.peek().span, f"unknown operator {op!r}")
        prec, assoc = OPERATOR_TABLE[op]
        if prec < min_prec:
            return left
        op_tok = cur.next()
        if assoc == "left":
            right = _parse_expr(cur, prec + 1)
        elif assoc == "right":
            right = _parse_expr(cur, prec)
        else:
            right = _parse_expr(cur, prec + 1)
            follow = _peek_operator(cur)
            if follow is not None and follow in OPERATOR_TABLE and OPERATOR_TABLE[follow][0] == prec:
                raise ParseError(cur.peek().span,
                                 f"non-associative operators {op!r} and {follow!r} cannot be chained")
        left = EOp(op_tok.text, left, right, op_tok.span)


# --- declarations ----------------------------------------------------------


def _parse_rule(cur: _Cursor, module: str) -> Rule:
    start_tok = cur.peek()
    assert start_tok is not None
    _check_not_reserved(start_tok)

    name: str
    name_span: SourceSpan
    params: list[Pattern]

    # A definition is either `f p1 .. pn = body ;` or `lhs <op> rhs = body ;`.
    if start_tok.kind == IDENT and not (cur.at(IDENT) and _peek_operator_after_single_ident(cur)):
        head = cur.next()
        name, name_span = head.text, head.span
        params = []
        while _starts_atomic_pattern(cur):
            params.append(_parse_atomic_pattern(cur))
        if not cur.at(OP, "="):
            tok = cur.peek()
            span = tok.span if tok is not None else cur.eof_span()
            found = tok.text if tok is not None else "end of input"
            raise ParseError(span, f"expected '=' in definition of {name!r}, found {found!r}")
        cur.next()
    else:
        left = _parse_atomic_pattern(cur)
        op_tok = cur.peek()
        if op_tok is None or op_tok.kind != OP or op_tok.text in ("=", ":", "::"):
            span = op_tok.span if op_tok is not None else cur.eof_span()
            raise ParseError(span, "expected an operator definition")
        if op_tok.text not in OPERATOR_TABLE:
            raise ParseError(op_tok.span, f"unknown operator {op_tok.text!r}")
        cur.next()
        right = _parse_atomic_pattern(cur)
        name, name_span = op_tok.text, op_tok.span
        params = [left, right]
        cur.expect(OP, "=")

    body_expr = _parse_expr(cur, 0)
    end_tok = cur.expect(PUNCT, ";")

    seen: set[str] = set()
    for var in [v for p in params for v in pattern_variables(p)]:
        if var in seen:
            raise ParseError(name_span, f"pattern variable {var!r} bound twice in one rule")
        seen.add(var)

    return Rule(
        function=name,
        params=tuple(params),
        body=desugar(body_expr, module),
        span=SourceSpan(module, start_tok.span.start, end_tok.span.end),
        name_span=name_span,
    )


def _peek_operator_after_single_ident(cur: _Cursor) -> bool:
    """True when the decl looks like `x <op> pat = ...` (infix def)."""
    tok = cur.peek(1)
    return tok is not None and tok.kind == OP and tok.text not in ("=",)


def parse_module(source: str, expected_name: str) -> ParsedModule:
    """Parse one module's full source.

    The `module Name [ (exports) ] where` header and `import Name ;`
    statements are optional; without a header the module is named
    `expected_name` and everything is exported. Any parse failure
    rejects the module as a whole.
    """
    tokens = tokenize(source, expected_name)
    cur = _Cursor(tokens, expected_name, len(source))

    name = expected_name
    exports: Optional[tuple[str, ...]] = None
    if cur.at(IDENT, "module"):
        cur.next()
        name_tok = cur.expect(CONID)
        name = name_tok.text
        if cur.at(PUNCT, "("):
            cur.next()
            export_names: list[str] = []
            if not cur.at(PUNCT, ")"):
                export_names.append(_parse_export(cur))
                while cur.at(PUNCT, ","):
                    cur.next()
                    export_names.append(_parse_export(cur))
            cur.expect(PUNCT, ")")
            exports = tuple(export_names)
        cur.expect(IDENT, "where")

    imports: list[str] = []
    while cur.at(IDENT, "import"):
        cur.next()
        mod_tok = cur.expect(CONID)
        cur.expect(PUNCT, ";")
        imports.append(mod_tok.text)

    rules: list[Rule] = []
    while cur.peek() is not None:
        rules.append(_parse_rule(cur, name))

    return ParsedModule(
        name=name,
        exports=exports,
        imports=tuple(imports),
        rules=tuple(rules),
        source=source,
    )


def _parse_export(cur: _Cursor) -> str:
    if cur.at(PUNCT, "("):
        cur.next()
        op_tok = cur.next()
        if op_tok.kind not in (OP, IDENT):
            raise ParseError(op_tok.span, "expected an operator name")
        cur.expect(PUNCT, ")")
        return op_tok.text
    tok = cur.expect(IDENT)
    _check_not_reserved(tok)
    return tok.text


def parse_term(source: str, module: str = "<term>") -> Term:
    """Parse a standalone expression into a term (mainly for tests/entry)."""
    tokens = tokenize(source, module)
    cur = _Cursor(tokens, module, len(source))
    expr = _parse_expr(cur, 0)
    trailing = cur.peek()
    if trailing is not None:
        raise ParseError(trailing.span, f"unexpected {trailing.text!r} after expression")
    return desugar(expr, module)


# --- rendering -------------------------------------------------------------

_ELIDED = "..."


def render_term(term: Term, max_depth: Optional[int] = None) -> str:
    """Render a term to parseable text.

    Infix operators render infix; an operand that is itself an infix
    application gets parentheses unless it continues the same operator
    chain on its associative side (so `5 : (2+3) : []`, not
    `5 : ((2+3) : [])`). With unlimited depth the output re-parses to a
    structurally identical term; beyond `max_depth` subtrees render as
    `...`.
    """
    return _render(term, 0, max_depth, infix_context=None, is_argument=False)


def _infix_head(term: Term) -> Optional[tuple[str, Term, Term]]:
    if (isinstance(term, Apply) and isinstance(term.fun, Apply)
            and not isinstance(term.fun.fun, Apply)):
        head = term.fun.fun
        if isinstance(head, Con) and head.name == ":":
            return (":", term.fun.arg, term.arg)
        if isinstance(head, Name) and head.ident in OPERATOR_TABLE:
            return (head.ident, term.fun.arg, term.arg)
    return None


def _render_op_symbol(op: str) -> str:
    return op if op in _TIGHT_OPS else f" {op} "


def _render(term: Term, depth: int, max_depth: Optional[int],
            infix_context: Optional[tuple[str, str]], is_argument: bool) -> str:
    if max_depth is not None and depth > max_depth:
        return _ELIDED

    if isinstance(term, IntLit):
        return f"({term.value})" if term.value < 0 else str(term.value)
    if isinstance(term, StrLit):
        return encode_string(term.value)
    if isinstance(term, Name):
        if term.ident in OPERATOR_TABLE:
            return f"({term.ident})"
        return term.ident
    if isinstance(term, Con):
        return f"({term.name})" if term.name == ":" else term.name

    infix = _infix_head(term)
    if infix is not None:
        op, left, right = infix
        _, assoc = OPERATOR_TABLE[op]
        left_text = _render(left, depth + 1, max_depth, (op, "left"), False)
        right_text = _render(right, depth + 1, max_depth, (op, "right"), False)
        text = f"{left_text}{_render_op_symbol(op)}{right_text}"
        needs_parens = is_argument
        if infix_context is not None:
            parent_op, side = infix_context
            _, parent_assoc = OPERATOR_TABLE[parent_op]
            same_chain = parent_op == op and (
                (parent_assoc == "right" and side == "right")
                or (parent_assoc == "left" and side == "left")
            )
            needs_parens = not same_chain
        return f"({text})" if needs_parens else text

    # Plain application spine.
    head = term
    args: list[Term] = []
    while isinstance(head, Apply):
        args.append(head.arg)
        head = head.fun
    args.reverse()
    head_text = _render(head, depth + 1, max_depth, None, False)
    arg_texts = [_render(a, depth + 1, max_depth, None, True) for a in args]
    text = " ".join([head_text] + arg_texts)
    return f"({text})" if is_argument else text
