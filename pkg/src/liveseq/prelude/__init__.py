"""Standard modules written in the interpreted language.

They ship as plain text and load exactly like user modules, so a
performer can read them and, by editing a copy, change them mid-song.
`List` is visible everywhere without an import; `Midi` (note helper,
pitch constants, the parallel merge `=:=`) must be imported, which
keeps its names free for programs that define their own.
"""

from importlib import resources

PRELUDE_MODULE_NAMES = ("List", "Midi")


def prelude_sources() -> dict[str, str]:
    """Module name -> source text for every shipped prelude module."""
    out: dict[str, str] = {}
    for name in PRELUDE_MODULE_NAMES:
        out[name] = (
            resources.files(__package__).joinpath(f"{name}.hs").read_text(encoding="utf-8")
        )
    return out
