"""Flat ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored.  Every error carries
the file name and line number of the offending entry.

Example::

    task = wander-1K
    algorithm = tosl
    selection = qbiassr
    steps = 3600
    repetitions = 30
    seed = 1
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    def __init__(self, message: str, source: str | None = None, line: int | None = None):
        self.message = message
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class Entry:
    value: str
    line: int | None
    source: str = "<string>"


def parse_kv(text: str, source: str = "<string>") -> dict[str, Entry]:
    out: dict[str, Entry] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", source, n)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError("missing key before '='", source, n)
        if key in out:
            raise ConfigError(f"duplicate key {key!r} (first set on line {out[key].line})", source, n)
        out[key] = Entry(value, n, source)
    return out


def parse_override(text: str) -> tuple[str, Entry]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override must look like key=value, got {text!r}", "--override")
    return key.strip(), Entry(value.strip(), None, "--override")


def read_kv(path) -> dict[str, Entry]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", str(path)) from None
    return parse_kv(text, str(path))


def dump_kv(items: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in items.items())
