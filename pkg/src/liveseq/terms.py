"""Runtime terms: mutable operator trees without sharing.

The whole state of a running song is a single term. Reduction rewrites
parts of the tree in place, so every node has exactly one parent and a
subterm is never reachable twice (substitution copies, see engine).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    """Half-open offset range [start, end) into a module's source text.

    Offsets are code-point indices into the module's current source.
    """

    module: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start <= self.end):
            raise ValueError(f"bad span {self.start}..{self.end}")


class Term:
    __slots__ = ()


class Apply(Term):
    """Binary application node; the only node kind with children.

    `fun` and `arg` are deliberately mutable: reduction replaces them
    in place so that forced subterms stay forced in the session state.
    """

    __slots__ = ("fun", "arg")

    def __init__(self, fun: Term, arg: Term):
        self.fun = fun
        self.arg = arg

    def __repr__(self) -> str:
        return f"Apply({self.fun!r}, {self.arg!r})"


class Name(Term):
    """Reference to a rule-defined or builtin function.

    `module` is the module whose scope resolves the name (where the
    occurrence was written). `span` is the occurrence site, if any;
    synthetic names (entry terms, builtins) carry None.
    """

    __slots__ = ("ident", "module", "span")

    def __init__(self, ident: str, module: str = "", span: Optional[SourceSpan] = None):
        self.ident = ident
        self.module = module
        self.span = span

    def __repr__(self) -> str:
        return f"Name({self.ident!r})"


class Con(Term):
    """Constructor symbol, e.g. `Wait`, `On`, `True`, `:`, `[]`."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __repr__(self) -> str:
        return f"Con({self.name!r})"


class IntLit(Term):
    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value

    def __repr__(self) -> str:
        return f"IntLit({self.value})"


class StrLit(Term):
    __slots__ = ("value",)

    def __init__(self, value: str):
        self.value = value

    def __repr__(self) -> str:
        return f"StrLit({self.value!r})"


Atom = Union[Name, Con, IntLit, StrLit]


def copy_term(term: Term) -> Term:
    """Deep copy. Used by substitution so the result stays a tree."""
    if not isinstance(term, Apply):
        # Leaves are immutable in practice (reduction replaces whole
        # nodes, never leaf fields), so they could be shared -- but the
        # no-sharing contract is easier to trust if we never do.
        if isinstance(term, Name):
            return Name(term.ident, term.module, term.span)
        if isinstance(term, Con):
            return Con(term.name)
        if isinstance(term, IntLit):
            return IntLit(term.value)
        if isinstance(term, StrLit):
            return StrLit(term.value)
        raise TypeError(f"not a term: {term!r}")
    # Iterative copy; terms can be deeper than the recursion limit.
    root = Apply(term.fun, term.arg)
    stack = [root]
    while stack:
        node = stack.pop()
        for field in ("fun", "arg"):
            child = getattr(node, field)
            if isinstance(child, Apply):
                dup = Apply(child.fun, child.arg)
                setattr(node, field, dup)
                stack.append(dup)
            else:
                setattr(node, field, copy_term(child))
    return root


def term_node_count(term: Term) -> int:
    """Number of tree nodes, counting every Apply and every leaf."""
    count = 0
    stack = [term]
    while stack:
        node = stack.pop()
        count += 1
        if isinstance(node, Apply):
            stack.append(node.fun)
            stack.append(node.arg)
    return count


def terms_equal(a: Term, b: Term) -> bool:
    """Structural equality, ignoring Name origin spans."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if type(x) is not type(y):
            return False
        if isinstance(x, Apply):
            stack.append((x.fun, y.fun))
            stack.append((x.arg, y.arg))
        elif isinstance(x, Name):
            if x.ident != y.ident:
                return False
        elif isinstance(x, Con):
            if x.name != y.name:
                return False
        elif isinstance(x, IntLit):
            if x.value != y.value:
                return False
        elif isinstance(x, StrLit):
            if x.value != y.value:
                return False
        else:
            return False
    return True


def spine(term: Term) -> tuple[Term, list[Apply]]:
    """Unwind the application spine.

    Returns (head, applies) where applies[0] is the node closest to the
    head; args in application order are [n.arg for n in applies].
    """
    applies: list[Apply] = []
    cur = term
    while isinstance(cur, Apply):
        applies.append(cur)
        cur = cur.fun
    applies.reverse()
    return cur, applies


def subterm_at(term: Term, path: tuple[int, ...]) -> Term:
    """Resolve a redex path: 0 descends into fun, 1 into arg."""
    cur = term
    for step in path:
        if not isinstance(cur, Apply):
            raise KeyError(f"path {path} leaves the tree")
        cur = cur.fun if step == 0 else cur.arg
    return cur


def iter_nodes(term: Term) -> Iterator[Term]:
    stack = [term]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Apply):
            stack.append(node.fun)
            stack.append(node.arg)
