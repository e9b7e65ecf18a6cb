"""Glossary entries: characters with positional tags, reconstruction, alignment."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .segments import Segment, render

TAGS = ("A", "B", "C")


@dataclass(frozen=True)
class CharToken:
    char: str
    tag: str
    bracketed: bool = False

    @property
    def written(self) -> str:
        return f"[{self.char}]" if self.bracketed else self.char


@dataclass(frozen=True)
class CharSpan:
    """One character's coverage: global segment indices, inclusive."""

    ordinal: int
    start: int
    end: int

    def __str__(self) -> str:
        return f"{self.ordinal}:{self.start}-{self.end}"


@dataclass(frozen=True)
class MorphemeSpan:
    """A labelled run of characters (ordinals, inclusive)."""

    label: str
    start: int
    end: int

    def __str__(self) -> str:
        return f"{self.label}:{self.start}-{self.end}"


def position_tags(n: int) -> tuple[str, ...]:
    if n == 0:
        return ()
    if n == 1:
        return ("A",)
    return ("A",) + ("B",) * (n - 2) + ("C",)


@dataclass(frozen=True)
class CorpusEntry:
    section: str
    index: str
    gloss: str
    characters: tuple[CharToken, ...]
    reconstruction: str
    convention: str
    words: tuple[tuple[Segment, ...], ...]
    alignment: tuple[CharSpan, ...] | None = None
    morphemes: tuple[MorphemeSpan, ...] | None = None
    line: int | None = None

    @property
    def segments(self) -> tuple[Segment, ...]:
        return tuple(s for w in self.words for s in w)

    @property
    def chars(self) -> str:
        return "".join(c.char for c in self.characters)

    def word_bounds(self) -> tuple[tuple[int, int], ...]:
        """(start, end-exclusive) of each word in global segment indices."""
        out = []
        pos = 0
        for w in self.words:
            out.append((pos, pos + len(w)))
            pos += len(w)
        return tuple(out)

    def word_of(self, index: int) -> int:
        for k, (s, e) in enumerate(self.word_bounds()):
            if s <= index < e:
                return k
        raise IndexError(index)

    def word_text(self, k: int) -> str:
        return "".join(render(s) for s in self.words[k])

    def with_alignment(self, spans: Sequence[CharSpan] | None) -> "CorpusEntry":
        return replace(self, alignment=None if spans is None else tuple(spans))
