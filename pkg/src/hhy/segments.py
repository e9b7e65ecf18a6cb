"""IPA segments, the feature chart, and romanization conventions.

Every target-language form enters the engine through :func:`parse_ipa` or
:func:`convert_romanization`.  A :class:`Segment` is one sound: affricates are
single segments, and length, aspiration, release and devoicing are features
rather than extra symbols.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable

from ._data import DataError, data_path, read_tsv

CONSONANT = "consonant"
VOWEL = "vowel"

PLACES = (
    "bilabial", "labiodental", "dental", "alveolar", "postalveolar",
    "alveopalatal", "retroflex", "palatal", "velar", "postvelar", "glottal",
)
MANNERS = (
    "stop", "affricate", "fricative", "nasal", "trill", "tap",
    "lateral-approximant", "lateral-fricative", "approximant",
)
HEIGHTS = ("high", "high-mid", "mid", "low-mid", "low")
BACKNESS = ("front", "central", "back")
CONTINUANT_MANNERS = frozenset(
    {"fricative", "trill", "tap", "lateral-approximant", "lateral-fricative", "approximant"}
)
RELEASABLE = frozenset({"stop", "affricate"})

RELEASED = "released"
UNRELEASED = "unreleased"
UNKNOWN = "unknown"

# Features compared by features_match; "symbol" is derived and never compared.
MATCH_FEATURES = (
    "kind", "place", "manner", "voiced", "aspirated", "released",
    "long", "height", "backness", "rounded", "nasalized",
)

ASPIRATION = "ʰ"
LENGTH = "ː"
UNRELEASED_MARK = "̚"
VOICELESS_MARK = "̥"
NASAL_MARK = "̃"

# Alternative spellings folded onto the chart's canonical ones before lookup.
_FOLD = {
    "ɡ": "g",
    "ʧ": "tʃ", "ʤ": "dʒ", "ʦ": "ts", "ʣ": "dz", "ʨ": "tɕ", "ʥ": "dʑ",
    "͡": "", "͜": "",  # tie bars
    ":": LENGTH,
    "̊": VOICELESS_MARK,  # ring above, used on letters with descenders
    "ḁ": "a" + VOICELESS_MARK,
}
_DIACRITICS = {ASPIRATION, LENGTH, UNRELEASED_MARK, VOICELESS_MARK, NASAL_MARK}


class ParseError(ValueError):
    """Raised for an unknown symbol or a diacritic with nothing to attach to."""

    def __init__(self, text, byte_offset, message):
        self.text = text
        self.byte_offset = byte_offset
        super().__init__(f"{message} at byte {byte_offset} of {text!r}")


class ConversionError(ValueError):
    def __init__(self, convention, symbol, text):
        self.convention = convention
        self.symbol = symbol
        super().__init__(f"symbol {symbol!r} in {text!r} has no mapping in convention {convention!r}")


@dataclass(frozen=True)
class Segment:
    symbol: str
    kind: str
    place: str | None = None
    manner: str | None = None
    voiced: bool = True
    aspirated: bool = False
    released: str | None = None
    long: bool = False
    height: str | None = None
    backness: str | None = None
    rounded: bool | None = None
    nasalized: bool = False
    underspecified: frozenset = field(default_factory=frozenset)

    @property
    def is_vowel(self) -> bool:
        return self.kind == VOWEL

    @property
    def is_consonant(self) -> bool:
        return self.kind == CONSONANT

    @property
    def continuant(self) -> bool:
        return self.manner in CONTINUANT_MANNERS

    @property
    def base(self) -> str:
        """Chart symbol with every diacritic stripped."""
        return _base_of(self)

    def with_release(self, released: str) -> "Segment":
        if self.manner not in RELEASABLE:
            return self
        seg = replace(self, released=released)
        return replace(seg, symbol=render(seg))

    def __str__(self) -> str:
        return self.symbol


@dataclass(frozen=True)
class _ChartRow:
    symbol: str
    kind: str
    a: str
    b: str
    flag: bool


@lru_cache(maxsize=None)
def feature_chart() -> dict[str, _ChartRow]:
    path = data_path("features.tsv")
    chart = {}
    for lineno, cols in read_tsv(path, 5):
        sym, kind, a, b, flag = cols[:5]
        if kind == CONSONANT and (a not in PLACES or b not in MANNERS):
            raise DataError(path, f"bad consonant features for {sym!r}", lineno)
        if kind == VOWEL and (a not in HEIGHTS or b not in BACKNESS):
            raise DataError(path, f"bad vowel features for {sym!r}", lineno)
        if kind not in (CONSONANT, VOWEL) or flag not in ("0", "1"):
            raise DataError(path, f"bad row for {sym!r}", lineno)
        chart[sym] = _ChartRow(sym, kind, a, b, flag == "1")
    return chart


def _base_segment(row: _ChartRow) -> Segment:
    if row.kind == CONSONANT:
        return Segment(
            symbol=row.symbol, kind=CONSONANT, place=row.a, manner=row.b, voiced=row.flag,
            released=UNKNOWN if row.b in RELEASABLE else None,
        )
    return Segment(
        symbol=row.symbol, kind=VOWEL, height=row.a, backness=row.b, rounded=row.flag,
    )


@lru_cache(maxsize=None)
def _chart_by_features() -> dict[tuple, str]:
    index = {}
    for sym, row in feature_chart().items():
        index.setdefault((row.kind, row.a, row.b, row.flag), sym)
    return index


def _base_of(seg: Segment) -> str:
    s = seg.symbol
    for mark in _DIACRITICS:
        s = s.replace(mark, "")
    return s


def render(seg: Segment) -> str:
    """Canonical IPA spelling: base, devoicing, nasalization, aspiration, release, length."""
    base = _base_of(seg)
    row = feature_chart()[base]
    out = base
    if seg.kind == CONSONANT:
        if row.flag and not seg.voiced:
            out += VOICELESS_MARK
    elif not seg.voiced:
        out += VOICELESS_MARK
    if seg.nasalized:
        out += NASAL_MARK
    if seg.aspirated:
        out += ASPIRATION
    if seg.released == UNRELEASED:
        out += UNRELEASED_MARK
    if seg.long:
        out += LENGTH
    return out


def _normalize(text: str) -> str:
    text = unicodedata.normalize("NFC", text)
    for src, dst in _FOLD.items():
        text = text.replace(src, dst)
    chart = feature_chart()
    out = []
    for ch in text:
        if ch not in chart and ch not in _DIACRITICS:
            parts = unicodedata.normalize("NFD", ch)
            if len(parts) > 1 and all(p in _DIACRITICS for p in parts[1:]):
                ch = parts
        out.append(ch)
    return "".join(out)


def _tokenize(text: str) -> list[tuple[Segment, int, int]]:
    """Greedy longest-match tokenization, returning segments with char offsets."""
    chart = feature_chart()
    longest = max(len(s) for s in chart)
    out: list[tuple[Segment, int, int]] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in _DIACRITICS:
            if not out:
                raise ParseError(text, len(text[:i].encode()), f"dangling diacritic {ch!r}")
            seg, start, _ = out[-1]
            out[-1] = (_attach(seg, ch, text, i), start, i + 1)
            i += 1
            continue
        for n in range(min(longest, len(text) - i), 0, -1):
            row = chart.get(text[i:i + n])
            if row is not None:
                out.append((_base_segment(row), i, i + n))
                i += n
                break
        else:
            raise ParseError(text, len(text[:i].encode()), f"unknown symbol {ch!r}")
    return out


def _attach(seg: Segment, mark: str, text: str, pos: int) -> Segment:
    def bad():
        return ParseError(text, len(text[:pos].encode()), f"diacritic {mark!r} cannot attach to {seg.symbol!r}")

    if mark == ASPIRATION:
        if seg.kind != CONSONANT:
            raise bad()
        seg = replace(seg, aspirated=True)
    elif mark == LENGTH:
        seg = replace(seg, long=True)
    elif mark == UNRELEASED_MARK:
        if seg.manner not in RELEASABLE:
            raise bad()
        seg = replace(seg, released=UNRELEASED)
    elif mark == VOICELESS_MARK:
        seg = replace(seg, voiced=False)
    elif mark == NASAL_MARK:
        seg = replace(seg, nasalized=True)
    return replace(seg, symbol=render(seg))


def parse_ipa(text: str) -> tuple[Segment, ...]:
    """Tokenize one IPA word into segments.

    >>> [s.symbol for s in parse_ipa("tʰa")]
    ['tʰ', 'a']
    """
    if not text or any(c.isspace() for c in text):
        raise ParseError(text, 0, "expected a single whitespace-free word")
    return tuple(seg for seg, _, _ in _tokenize(_normalize(text)))


def features_match(a: Segment, b: Segment) -> bool:
    """True iff every feature specified on both sides agrees.

    Underspecified features and an ``unknown`` release act as wildcards, so the
    relation is reflexive and symmetric but not transitive.
    """
    open_ = a.underspecified | b.underspecified
    for name in MATCH_FEATURES:
        if name in open_:
            continue
        x, y = getattr(a, name), getattr(b, name)
        if name == "released" and UNKNOWN in (x, y):
            continue
        if x != y:
            return False
    return True


def underspecify(seg: Segment, features: Iterable[str]) -> Segment:
    return replace(seg, underspecified=seg.underspecified | frozenset(features))


# --- romanization conventions -------------------------------------------------

CONVENTIONS = ("uyghur", "mongolian", "persian", "malay", "cham", "ipa-passthrough")


@dataclass(frozen=True)
class MappingRow:
    source: str
    target: str
    ambiguous: frozenset
    note: str


@dataclass(frozen=True)
class RomanizationConvention:
    name: str
    mapping: tuple[MappingRow, ...]

    @property
    def flagged(self) -> tuple[MappingRow, ...]:
        return tuple(r for r in self.mapping if r.ambiguous)


def load_convention_file(path, name: str | None = None) -> RomanizationConvention:
    """Read a convention TSV (source, IPA target, note).

    A note of the form ``ambiguous:voiced,place; free text`` leaves those
    features underspecified on every segment the row produces.
    """
    from pathlib import Path

    path = Path(path)
    rows = []
    seen = set()
    for lineno, cols in read_tsv(path, 2):
        source, target = cols[0], cols[1]
        note = cols[2] if len(cols) > 2 else ""
        if source in seen:
            raise DataError(path, f"duplicate source symbol {source!r}", lineno)
        seen.add(source)
        ambiguous = frozenset()
        head = note.split(";", 1)[0].strip()
        if head.startswith("ambiguous:"):
            ambiguous = frozenset(f.strip() for f in head[len("ambiguous:"):].split(",") if f.strip())
            unknown = ambiguous - set(MATCH_FEATURES)
            if unknown:
                raise DataError(path, f"unknown feature(s) {sorted(unknown)}", lineno)
        if target != LENGTH:
            try:
                parse_ipa(target)
            except ParseError as exc:
                raise DataError(path, f"target {target!r} is not valid IPA: {exc}", lineno) from None
        rows.append(MappingRow(source, target, ambiguous, note))
    return RomanizationConvention(name or path.stem, tuple(rows))


@lru_cache(maxsize=None)
def shipped_convention(name: str) -> RomanizationConvention:
    if name == "ipa-passthrough":
        return RomanizationConvention(name, ())
    if name not in CONVENTIONS:
        raise KeyError(f"unknown romanization convention {name!r}")
    return load_convention_file(data_path("conventions", f"{name}.tsv"), name)


def convert_romanization(text: str, convention) -> tuple[Segment, ...]:
    """Convert a romanized word to segments via longest-match on the convention.

    ``convention`` is a shipped name or a :class:`RomanizationConvention`.
    """
    conv = shipped_convention(convention) if isinstance(convention, str) else convention
    if conv.name == "ipa-passthrough":
        return parse_ipa(text)
    if not text or any(c.isspace() for c in text):
        raise ParseError(text, 0, "expected a single whitespace-free word")
    text = unicodedata.normalize("NFC", text)
    table = {r.source: r for r in conv.mapping}
    longest = max(len(s) for s in table)
    pieces: list[str] = []
    flags: list[tuple[int, frozenset]] = []  # (offset in converted string, ambiguity)
    i = 0
    while i < len(text):
        for n in range(min(longest, len(text) - i), 0, -1):
            row = table.get(text[i:i + n])
            if row is not None:
                if row.ambiguous:
                    flags.append((sum(len(p) for p in pieces), row.ambiguous))
                pieces.append(row.target)
                i += n
                break
        else:
            raise ConversionError(conv.name, text[i], text)
    converted = "".join(pieces)
    spans = _tokenize(_normalize(converted))
    segs = []
    for seg, start, end in spans:
        for offset, features in flags:
            if start <= offset < end:
                seg = underspecify(seg, features)
        segs.append(seg)
    return tuple(segs)
