"""Class tags such as ``@contact#`` (enter) and ``#contact@`` (exit)."""
from __future__ import annotations

import re
from typing import Sequence

from .errors import FormatError

_ENTER = re.compile(r"^@([^\s@#]+)#$")
_EXIT = re.compile(r"^#([^\s@#]+)@$")


def enter_tag(name: str) -> str:
    return f"@{name}#"


def exit_tag(name: str) -> str:
    return f"#{name}@"


def parse_tag(token: str) -> tuple[str, str] | None:
    """Return ("enter" | "exit", class name) or None for an ordinary token."""
    m = _ENTER.match(token)
    if m:
        return "enter", m.group(1)
    m = _EXIT.match(token)
    if m:
        return "exit", m.group(1)
    return None


def is_tag(token: str) -> bool:
    return parse_tag(token) is not None


def strip_tags(tokens: Sequence[str]) -> list[str]:
    return [t for t in tokens if not is_tag(t)]


def tag_spans(tokens: Sequence[str]) -> tuple[list[str], list[tuple[str, int, int]]]:
    """Split a tagged sequence into its words and (class, start, end) spans over them.

    Spans index the tag-free word list, end exclusive.  Tags must be balanced
    and not nested.
    """
    words: list[str] = []
    spans = []
    open_class = None
    open_at = 0
    for t in tokens:
        tag = parse_tag(t)
        if tag is None:
            words.append(t)
            continue
        kind, name = tag
        if kind == "enter":
            if open_class is not None:
                raise FormatError(f"nested class tag {t!r} inside {enter_tag(open_class)!r}")
            open_class, open_at = name, len(words)
        else:
            if open_class != name:
                raise FormatError(f"exit tag {t!r} without matching enter tag")
            spans.append((name, open_at, len(words)))
            open_class = None
    if open_class is not None:
        raise FormatError(f"unclosed class tag {enter_tag(open_class)!r}")
    return words, spans


def count_bias_phrases(tokens: Sequence[str]) -> int:
    return sum(1 for t in tokens if (p := parse_tag(t)) and p[0] == "enter")
