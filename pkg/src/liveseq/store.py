"""Module source buffers with a protected header / editable region
split, and the check-then-swap pathway for live edits.

A module may contain a marker line (`-- EDITABLE`, whitespace-trimmed
exact match). Everything up to and including that line is the header:
participants never change it, whatever they submit. A submission
replaces the text below the marker, is parsed as a whole module, and is
swapped into the running program only if the parse (and relink)
succeeds; otherwise nothing changes anywhere.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .engine import Program, SwapError, link_program, swap_module
from .prelude import prelude_sources
from .syntax import ParsedModule, SourceError, parse_module, render_term
from .terms import SourceSpan

__all__ = [
    "MARKER", "ModuleBuffer", "EditSubmission", "Accepted", "Rejected",
    "CheckResult", "Store", "StoreError", "NoSuchModule", "NoEditableRegion",
    "StartupError", "load_directory", "submit_edit", "get_module_view",
    "store_hash", "program_fingerprint",
]

MARKER = "-- EDITABLE"


class StoreError(Exception):
    pass


class NoSuchModule(StoreError):
    def __init__(self, name: str):
        super().__init__(f"no module named {name!r}")
        self.name = name


class NoEditableRegion(StoreError):
    def __init__(self, name: str):
        super().__init__(f"module {name!r} has no {MARKER} marker")
        self.name = name


class StartupError(StoreError):
    """One or more module files failed to load; nothing runs."""

    def __init__(self, errors: list[tuple[str, str]]):
        lines = "\n".join(f"  {name}: {message}" for name, message in errors)
        super().__init__(f"module loading failed:\n{lines}")
        self.errors = errors


def find_marker_offset(source: str) -> Optional[int]:
    """Offset of the first character after the marker line, if any."""
    offset = 0
    for line in source.splitlines(keepends=True):
        if line.rstrip("\r\n").strip() == MARKER:
            return offset + len(line)
        offset += len(line)
    return None


@dataclass
class ModuleBuffer:
    """One module's source, split at the marker (when present).

    Only the first marker counts; later occurrences are plain text.
    The header includes the marker line itself.
    """

    name: str
    full_source: str
    marker_offset: Optional[int] = None
    from_prelude: bool = False

    @classmethod
    def from_source(cls, name: str, source: str, from_prelude: bool = False) -> "ModuleBuffer":
        return cls(name=name, full_source=source,
                   marker_offset=find_marker_offset(source),
                   from_prelude=from_prelude)

    @property
    def has_marker(self) -> bool:
        return self.marker_offset is not None

    @property
    def header(self) -> str:
        if self.marker_offset is None:
            return self.full_source
        return self.full_source[:self.marker_offset]

    @property
    def editable(self) -> str:
        if self.marker_offset is None:
            return ""
        return self.full_source[self.marker_offset:]


@dataclass(frozen=True)
class EditSubmission:
    module: str
    editable_text: str
    submitted_at: int = 0


@dataclass(frozen=True)
class Accepted:
    generation: int


@dataclass(frozen=True)
class Rejected:
    errors: tuple[tuple[Optional[SourceSpan], str], ...]


CheckResult = Union[Accepted, Rejected]


@dataclass
class Store:
    buffers: dict[str, ModuleBuffer] = field(default_factory=dict)
    persist_dir: Optional[Path] = None

    def buffer(self, name: str) -> ModuleBuffer:
        try:
            return self.buffers[name]
        except KeyError:
            raise NoSuchModule(name) from None

    def module_names(self) -> list[str]:
        return sorted(self.buffers)


def load_directory(path: Union[str, Path], persist_edits: bool = False) -> tuple[Store, Program]:
    """Load the prelude plus every `.hs` file in the directory.

    Fails fast: any parse error (or a user module reusing a prelude
    module's name) aborts startup with all problems listed.
    """
    directory = Path(path)
    if not directory.is_dir():
        raise StartupError([(str(directory), "not a directory")])

    store = Store(persist_dir=directory if persist_edits else None)
    modules: dict[str, ParsedModule] = {}
    errors: list[tuple[str, str]] = []

    for name, source in prelude_sources().items():
        modules[name] = parse_module(source, name)
        store.buffers[name] = ModuleBuffer.from_source(name, source, from_prelude=True)

    for file in sorted(directory.glob("*.hs")):
        expected = file.stem
        try:
            source = file.read_text(encoding="utf-8")
        except OSError as err:
            errors.append((file.name, str(err)))
            continue
        try:
            parsed = parse_module(source, expected)
        except SourceError as err:
            errors.append((file.name, str(err)))
            continue
        if parsed.name in modules:
            errors.append((file.name, f"module name {parsed.name!r} is already taken"))
            continue
        modules[parsed.name] = parsed
        store.buffers[parsed.name] = ModuleBuffer.from_source(parsed.name, source)

    if errors:
        raise StartupError(errors)
    try:
        program = link_program(modules, generation=0)
    except SwapError as err:
        raise StartupError([("<link>", str(err))]) from err
    return store, program


def submit_edit(store: Store, program: Program, sub: EditSubmission) -> tuple[CheckResult, Program]:
    """Validate a participant edit and apply it atomically.

    The candidate source is the stored header plus the submitted text.
    On success the buffer is committed and the new program returned; on
    any failure both store and program are left exactly as they were
    (the caller keeps the submitted text on the participant's side).
    """
    buffer = store.buffer(sub.module)
    if not buffer.has_marker:
        raise NoEditableRegion(sub.module)
    candidate = buffer.header + sub.editable_text
    try:
        parsed = parse_module(candidate, buffer.name)
    except SourceError as err:
        return Rejected(((err.span, err.message),)), program
    if parsed.name != buffer.name:
        return Rejected(((None, f"module must keep its name {buffer.name!r}"),)), program
    try:
        new_program = swap_module(program, parsed)
    except SwapError as err:
        return Rejected(((None, str(err)),)), program

    buffer.full_source = candidate
    if store.persist_dir is not None and not buffer.from_prelude:
        (store.persist_dir / f"{buffer.name}.hs").write_text(candidate, encoding="utf-8")
    return Accepted(new_program.generation), new_program


def get_module_view(store: Store, name: str) -> tuple[str, str, bool]:
    """(header, editable, has_marker); marker-less modules are all header."""
    buffer = store.buffer(name)
    return buffer.header, buffer.editable, buffer.has_marker


def store_hash(store: Store) -> str:
    """Hash of every buffer's committed source; stable across reads."""
    digest = hashlib.sha256()
    for name in store.module_names():
        digest.update(name.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(store.buffers[name].full_source.encode("utf-8"))
        digest.update(b"\x01")
    return digest.hexdigest()


def program_fingerprint(program: Program) -> str:
    """Hash over a rendering of every rule of every module.

    Two programs fingerprint equal exactly when all their rules render
    identically (used to verify swap atomicity and store/program
    agreement).
    """
    digest = hashlib.sha256()
    for name in sorted(program.modules):
        module = program.modules[name]
        digest.update(name.encode("utf-8"))
        for rule in module.rules:
            digest.update(f"{rule.function}/{rule.arity}:".encode("utf-8"))
            digest.update(repr(rule.params).encode("utf-8"))
            digest.update(render_term(rule.body).encode("utf-8"))
            digest.update(b"\n")
    return digest.hexdigest()
