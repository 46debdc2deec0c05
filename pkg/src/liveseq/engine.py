"""Term rewriting engine: lazy leftmost-outermost reduction over a
sharing-free tree, with swappable rule sets.

The program is a set of rewrite rules grouped into modules; the running
song is a single term that gets rewritten just far enough to expose the
next list element. Replacing a module changes which rules fire for names
that have not been expanded yet; parts of the term that were already
expanded keep playing as they are.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from .syntax import (
    ParsedModule, Pattern, PCon, PInt, PStr, PVar, PWild, Rule, render_term,
)
from .terms import (
    Apply, Con, IntLit, Name, SourceSpan, StrLit, Term, copy_term,
    term_node_count,
)

__all__ = [
    "Budget", "ReductionStep", "Program", "link_program", "swap_module",
    "whnf", "force", "match", "eval_builtin", "term_node_count",
    "EngineError", "UndefinedName", "NoMatchingRule", "StepBudgetExceeded",
    "TermSizeExceeded", "DepthExceeded", "TypeMismatch",
    "SwapError", "UnresolvedImport", "ImportCycle", "NameClash",
    "BUILTIN_ARITY", "Reducer",
]

# Modules whose exports are visible everywhere without an import.
IMPLICIT_MODULES = ("List",)

BUILTIN_ARITY = {
    "+": 2, "-": 2, "*": 2, "div": 2, "mod": 2, "negate": 1,
    "==": 2, "/=": 2, "<": 2, "<=": 2, ">": 2, ">=": 2,
}

_NODE_CHECK_INTERVAL = 256
_MAX_FORCE_DEPTH = 2000


@dataclass(frozen=True)
class Budget:
    """Resource limits for one reduction request."""

    max_steps: int = 1_000_000
    max_term_nodes: int = 10_000_000

    def __post_init__(self) -> None:
        if self.max_steps <= 0 or self.max_term_nodes <= 0:
            raise ValueError("budget limits must be positive")


@dataclass(frozen=True)
class ReductionStep:
    """One applied named rule.

    `rule_span` is where the fired rule is defined; `call_span` is the
    occurrence of the name that got expanded (None for synthetic names
    such as the entry term). Builtin arithmetic records no steps.
    """

    rule_span: SourceSpan
    rule_name_span: SourceSpan
    call_span: Optional[SourceSpan]
    redex_path: tuple[int, ...]
    generation: int

    @property
    def highlight_span(self) -> SourceSpan:
        return self.call_span if self.call_span is not None else self.rule_name_span


class EngineError(Exception):
    """Base class; reductions abort but the session stays resettable."""

    partial_term: Optional[Term] = None


class UndefinedName(EngineError):
    def __init__(self, ident: str, span: Optional[SourceSpan]):
        where = f" at {span.module}[{span.start}..{span.end}]" if span else ""
        super().__init__(f"undefined name {ident!r}{where}")
        self.ident = ident
        self.span = span


class NoMatchingRule(EngineError):
    def __init__(self, ident: str, args_rendered: str):
        super().__init__(f"no rule of {ident!r} matches: {ident} {args_rendered}")
        self.ident = ident
        self.args_rendered = args_rendered


class StepBudgetExceeded(EngineError):
    def __init__(self, steps: int):
        super().__init__(f"reduction exceeded the step budget ({steps} steps)")
        self.steps = steps


class TermSizeExceeded(EngineError):
    def __init__(self, nodes: int):
        super().__init__(f"term grew past the node budget ({nodes} nodes)")
        self.nodes = nodes


class DepthExceeded(EngineError):
    """Nested forcing went past the fixed depth guard."""

    def __init__(self) -> None:
        super().__init__(f"forcing nested deeper than {_MAX_FORCE_DEPTH} levels")


class TypeMismatch(EngineError):
    def __init__(self, op: str, detail: str):
        super().__init__(f"builtin {op!r} applied to unsuitable arguments: {detail}")
        self.op = op


class SwapError(EngineError):
    pass


class UnresolvedImport(SwapError):
    def __init__(self, module: str, imported: str):
        super().__init__(f"module {module!r} imports unknown module {imported!r}")
        self.module = module
        self.imported = imported


class ImportCycle(SwapError):
    def __init__(self, chain: Sequence[str]):
        super().__init__("import cycle: " + " -> ".join(chain))
        self.chain = tuple(chain)


class NameClash(SwapError):
    def __init__(self, module: str, name: str, other: str):
        super().__init__(
            f"module {module!r} defines or imports {name!r} which is already "
            f"provided by {other!r}")
        self.module = module
        self.name = name
        self.other = other


@dataclass(frozen=True)
class Program:
    """Immutable snapshot of all loaded modules plus name scopes.

    `scopes[m][f]` holds the source-ordered rules that an occurrence of
    `f` written in module `m` resolves to. Swaps build a whole new
    Program; the generation counter increases by exactly one per
    successful swap.
    """

    modules: Mapping[str, ParsedModule]
    scopes: Mapping[str, Mapping[str, tuple[Rule, ...]]]
    generation: int

    def rules_for(self, module: str, ident: str) -> Optional[tuple[Rule, ...]]:
        scope = self.scopes.get(module)
        if scope is None:
            return None
        return scope.get(ident)


def _group_rules(module: ParsedModule) -> dict[str, tuple[Rule, ...]]:
    grouped: dict[str, list[Rule]] = {}
    for rule in module.rules:
        grouped.setdefault(rule.function, []).append(rule)
    return {name: tuple(rules) for name, rules in grouped.items()}


def _check_import_cycles(modules: Mapping[str, ParsedModule]) -> None:
    WHITE, GREY, BLACK = 0, 1, 2
    state = {name: WHITE for name in modules}
    stack: list[str] = []

    def visit(name: str) -> None:
        state[name] = GREY
        stack.append(name)
        for imported in modules[name].imports:
            if imported not in modules:
                continue  # reported separately as UnresolvedImport
            if state[imported] == GREY:
                cycle = stack[stack.index(imported):] + [imported]
                raise ImportCycle(cycle)
            if state[imported] == WHITE:
                visit(imported)
        stack.pop()
        state[name] = BLACK

    for name in modules:
        if state[name] == WHITE:
            visit(name)


def link_program(modules: Mapping[str, ParsedModule], generation: int = 0) -> Program:
    """Build the name scopes for a set of parsed modules.

    Exports of the implicit prelude modules are visible everywhere;
    anything else must be imported. A name reachable twice in one scope
    (own definition vs import, or two imports) is a load error.
    """
    modules = dict(modules)
    for module in modules.values():
        for imported in module.imports:
            if imported not in modules:
                raise UnresolvedImport(module.name, imported)
    _check_import_cycles(modules)

    grouped = {name: _group_rules(mod) for name, mod in modules.items()}
    scopes: dict[str, dict[str, tuple[Rule, ...]]] = {}
    for name, module in modules.items():
        scope: dict[str, tuple[Rule, ...]] = {}
        provider: dict[str, str] = {}

        def take(source_module: str, idents: set[str]) -> None:
            for ident in sorted(idents):
                if ident in scope and provider[ident] != source_module:
                    raise NameClash(name, ident, provider[ident])
                scope[ident] = grouped[source_module][ident]
                provider[ident] = source_module

        take(name, set(grouped[name].keys()))
        for implicit in IMPLICIT_MODULES:
            if implicit in modules and implicit != name:
                take(implicit, modules[implicit].exported_names())
        for imported in module.imports:
            take(imported, modules[imported].exported_names())
        scopes[name] = scope
    return Program(modules=modules, scopes=scopes, generation=generation)


def swap_module(program: Program, new_module: ParsedModule) -> Program:
    """Replace (or add) one module, atomically.

    On failure the old program object is untouched and remains in
    force. The current term of a running session is not rewritten:
    already-expanded parts keep their old expansions, names expanded
    later resolve against the new rules.
    """
    modules = dict(program.modules)
    modules[new_module.name] = new_module
    return link_program(modules, generation=program.generation + 1)


# --- builtins ---------------------------------------------------------------


def _render_args(args: Sequence[Term]) -> str:
    return " ".join(render_term(a, max_depth=6) for a in args)


def eval_builtin(op: str, args: Sequence[Term]) -> Term:
    """Apply a builtin to arguments already in WHNF.

    Arithmetic works on integers; comparisons work on two integers or
    two texts and return the constructors True/False. Anything else is
    a runtime type error (the language is weakly typed, so this is
    where mistyped programs fail).
    """
    if len(args) != BUILTIN_ARITY[op]:
        raise TypeMismatch(op, f"expected {BUILTIN_ARITY[op]} arguments, got {len(args)}")
    if op == "negate":
        (a,) = args
        if isinstance(a, IntLit):
            return IntLit(-a.value)
        raise TypeMismatch(op, _render_args(args))
    a, b = args
    if op in ("+", "-", "*", "div", "mod"):
        if not (isinstance(a, IntLit) and isinstance(b, IntLit)):
            raise TypeMismatch(op, _render_args(args))
        if op == "+":
            return IntLit(a.value + b.value)
        if op == "-":
            return IntLit(a.value - b.value)
        if op == "*":
            return IntLit(a.value * b.value)
        if b.value == 0:
            raise TypeMismatch(op, "division by zero")
        # Python's // and % round toward negative infinity, same as
        # Haskell's div/mod.
        return IntLit(a.value // b.value if op == "div" else a.value % b.value)
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        left: Union[int, str] = a.value
        right: Union[int, str] = b.value
    elif isinstance(a, StrLit) and isinstance(b, StrLit):
        left, right = a.value, b.value
    else:
        raise TypeMismatch(op, _render_args(args))
    result = {
        "==": left == right,
        "/=": left != right,
        "<": left < right,
        "<=": left <= right,
        ">": left > right,
        ">=": left >= right,
    }[op]
    return Con("True" if result else "False")


# --- the reducer ------------------------------------------------------------


class _NoMatch:
    __slots__ = ()

    def __bool__(self) -> bool:
        return False


NO_MATCH = _NoMatch()


class Reducer:
    """One reduction request: carries the budget, step log and guards.

    A Reducer may be reused across the whnf + element-forcing phases of
    a single stream-item extraction so that they share one budget.
    """

    def __init__(self, program: Program, budget: Budget):
        self.program = program
        self.budget = budget
        self.steps: list[ReductionStep] = []
        self.root: Optional[Term] = None
        self._fires = 0
        self._depth = 0
        limit = _MAX_FORCE_DEPTH * 8 + 1000
        if sys.getrecursionlimit() < limit:
            sys.setrecursionlimit(limit)

    # -- public-ish entry points

    def whnf_term(self, term: Term, path: tuple[int, ...] = ()) -> Term:
        if self.root is None:
            self.root = term
        result = self._whnf(term, path)
        if path == ():
            self.root = result
        return result

    def force_term(self, term: Term, path: tuple[int, ...] = ()) -> Term:
        if self.root is None:
            self.root = term
        result = self._force(term, path)
        if path == ():
            self.root = result
        return result

    # -- reduction machinery

    def _whnf(self, term: Term, path: tuple[int, ...]) -> Term:
        self._depth += 1
        if self._depth > _MAX_FORCE_DEPTH:
            raise DepthExceeded()
        try:
            while True:
                head: Term = term
                applies: list[Apply] = []
                while isinstance(head, Apply):
                    applies.append(head)
                    head = head.fun
                applies.reverse()  # applies[0] is nearest the head
                nargs = len(applies)

                if isinstance(head, (Con, IntLit, StrLit)):
                    return term

                assert isinstance(head, Name)
                rules = self.program.rules_for(head.module, head.ident)
                if rules is not None:
                    usable = [r for r in rules if r.arity <= nargs]
                    if not usable:
                        return term  # partial application is WHNF
                    fired = False
                    for rule in usable:
                        bindings = self._match_params(rule.params, applies, path, nargs)
                        if bindings is not NO_MATCH:
                            term = self._fire(rule, bindings, head, applies, path, term)
                            fired = True
                            break
                    if not fired:
                        max_arity = max(r.arity for r in usable)
                        args = [node.arg for node in applies[:max_arity]]
                        raise NoMatchingRule(head.ident, _render_args(args))
                    continue

                arity = BUILTIN_ARITY.get(head.ident)
                if arity is None:
                    raise UndefinedName(head.ident, head.span)
                if nargs < arity:
                    return term  # partial builtin application is WHNF
                args = []
                for i in range(arity):
                    node = applies[i]
                    node.arg = self._whnf(node.arg, self._arg_path(path, nargs, i))
                    args.append(node.arg)
                value = eval_builtin(head.ident, args)
                term = self._replace_redex(term, applies, arity, value)
        finally:
            self._depth -= 1

    def _force(self, term: Term, path: tuple[int, ...]) -> Term:
        """Reduce to full normal form (as far as rules allow)."""
        term = self._whnf(term, path)
        head: Term = term
        applies: list[Apply] = []
        while isinstance(head, Apply):
            applies.append(head)
            head = head.fun
        applies.reverse()
        nargs = len(applies)
        for i, node in enumerate(applies):
            node.arg = self._force(node.arg, self._arg_path(path, nargs, i))
        return term

    @staticmethod
    def _arg_path(path: tuple[int, ...], nargs: int, i: int) -> tuple[int, ...]:
        # applies[i].arg sits below (nargs-1-i) fun-hops from the subterm root.
        return path + (0,) * (nargs - 1 - i) + (1,)

    def _fire(self, rule: Rule, bindings: dict, head: Name,
              applies: list[Apply], path: tuple[int, ...], term: Term) -> Term:
        if len(self.steps) >= self.budget.max_steps:
            raise StepBudgetExceeded(len(self.steps))
        arity = rule.arity
        redex_path = path + (0,) * (len(applies) - arity)
        self.steps.append(ReductionStep(
            rule_span=rule.span,
            rule_name_span=rule.name_span,
            call_span=head.span,
            redex_path=redex_path,
            generation=self.program.generation,
        ))
        instance = _instantiate(rule.body, bindings)
        self._fires += 1
        if self._fires % _NODE_CHECK_INTERVAL == 0 and self.root is not None:
            nodes = term_node_count(self.root)
            if nodes > self.budget.max_term_nodes:
                raise TermSizeExceeded(nodes)
        return self._replace_redex(term, applies, arity, instance)

    def _replace_redex(self, term: Term, applies: list[Apply],
                       consumed: int, replacement: Term) -> Term:
        """Splice `replacement` over the head plus `consumed` spine nodes."""
        if consumed == len(applies):
            if self.root is term:
                self.root = replacement
            return replacement
        applies[consumed].fun = replacement
        return term

    # -- pattern matching

    def _match_params(self, params: Sequence[Pattern], applies: list[Apply],
                      path: tuple[int, ...], nargs: int):
        bindings: dict[str, Term] = {}
        for i, pattern in enumerate(params):
            node = applies[i]
            if not self._match_slot(pattern, node, self._arg_path(path, nargs, i), bindings):
                return NO_MATCH
        return bindings

    def _match_slot(self, pattern: Pattern, holder: Apply,
                    path: tuple[int, ...], bindings: dict[str, Term]) -> bool:
        """Match `pattern` against holder.arg, forcing in place as needed."""
        if isinstance(pattern, PWild):
            return True
        if isinstance(pattern, PVar):
            bindings[pattern.name] = holder.arg
            return True
        holder.arg = self._whnf(holder.arg, path)
        term = holder.arg
        if isinstance(pattern, PInt):
            return isinstance(term, IntLit) and term.value == pattern.value
        if isinstance(pattern, PStr):
            return isinstance(term, StrLit) and term.value == pattern.value
        assert isinstance(pattern, PCon)
        head: Term = term
        applies: list[Apply] = []
        while isinstance(head, Apply):
            applies.append(head)
            head = head.fun
        applies.reverse()
        if not isinstance(head, Con) or head.name != pattern.name:
            return False
        if len(applies) != len(pattern.subpatterns):
            return False
        nargs = len(applies)
        for i, sub in enumerate(pattern.subpatterns):
            if not self._match_slot(sub, applies[i], self._arg_path(path, nargs, i), bindings):
                return False
        return True


def _instantiate(body: Term, bindings: dict[str, Term]) -> Term:
    """Copy a rule body, splicing a fresh deep copy of each binding in.

    Every occurrence gets its own copy, so the result is a tree with no
    shared subterms: evaluating one occurrence later will not evaluate
    the others.
    """
    if isinstance(body, Name) and body.ident in bindings:
        return copy_term(bindings[body.ident])
    if not isinstance(body, Apply):
        return copy_term(body)
    root = Apply(body.fun, body.arg)
    stack = [root]
    while stack:
        node = stack.pop()
        for fld in ("fun", "arg"):
            child = getattr(node, fld)
            if isinstance(child, Apply):
                dup = Apply(child.fun, child.arg)
                setattr(node, fld, dup)
                stack.append(dup)
            elif isinstance(child, Name) and child.ident in bindings:
                setattr(node, fld, copy_term(bindings[child.ident]))
            else:
                setattr(node, fld, copy_term(child))
    return root


# --- public operations ------------------------------------------------------


def whnf(program: Program, term: Term, budget: Budget) -> tuple[Term, list[ReductionStep]]:
    """Reduce until the head is a constructor, a literal, or a partial
    application; leftmost-outermost, first matching rule wins.

    The input term is consumed: reduction mutates it in place and the
    result shares structure with it.
    """
    reducer = Reducer(program, budget)
    try:
        result = reducer.whnf_term(term)
    except EngineError as err:
        if err.partial_term is None:
            err.partial_term = reducer.root
        raise
    return result, reducer.steps


def force(program: Program, term: Term, budget: Budget) -> tuple[Term, list[ReductionStep]]:
    """Reduce to full normal form (used on list elements)."""
    reducer = Reducer(program, budget)
    try:
        result = reducer.force_term(term)
    except EngineError as err:
        if err.partial_term is None:
            err.partial_term = reducer.root
        raise
    return result, reducer.steps


def match(pattern: Pattern, term: Term, program: Program,
          budget: Budget) -> tuple[Optional[dict], Term, list[ReductionStep]]:
    """Match one pattern, forcing the term as far as the pattern needs.

    Returns (bindings-or-None, the possibly-reduced term, forcing steps).
    Variable patterns bind without forcing.
    """
    reducer = Reducer(program, budget)
    holder = Apply(Con("<match>"), term)
    reducer.root = holder
    ok = reducer._match_slot(pattern, holder, (1,), bindings := {})
    return (bindings if ok else None), holder.arg, reducer.steps
