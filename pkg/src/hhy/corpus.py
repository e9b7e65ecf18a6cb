"""Corpus files, alignment over a corpus, frequency tables and ST-character reports."""
from __future__ import annotations

import json
import os
import tempfile
import unicodedata
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .correspondence import (
    DEFAULT_OPTIONS, Alignment, AlignmentError, EngineOptions, entry_alignment,
    st_occurrence_category,
)
from .entry import TAGS, CharSpan, CharToken, CorpusEntry, MorphemeSpan, position_tags
from .phonology import ERHUA, base_character, character_table, inventory_at
from .profiles import SECTIONS, get_profile
from .segments import CONVENTIONS, ConversionError, ParseError, convert_romanization, render

HEADER = "# section\tindex\tgloss\tcharacters\treconstruction\tconvention\talignment\tmorphemes"
DEFAULT_LIMITED_THRESHOLD = 10

ESTABLISHED, RETAINED, REJECTED, UNDETERMINED = "established", "retained-limited", "rejected", "undetermined"
MULTI_SECTION, MULTI_LEXEME, NO_CRITERION = "multi-section", "multi-lexeme", "none"


class CorpusError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class OutputError(OSError):
    pass


# --- file format ---------------------------------------------------------------

def _parse_chars(text: str) -> tuple[CharToken, ...]:
    items = text.split()
    tags = position_tags(len(items))
    out = []
    for item, tag in zip(items, tags):
        written, sep, given = item.partition("/")
        if sep and given != tag:
            raise ValueError(f"character {written} tagged {given!r}; position requires {tag!r}")
        if sep and given not in TAGS:
            raise ValueError(f"bad position tag {given!r}")
        bracketed = len(written) >= 3 and written[0] == "[" and written[-1] == "]"
        char = base_character(written)
        if len(char) != 1:
            raise ValueError(f"bad character item {item!r}")
        out.append(CharToken(char, tag, bracketed))
    return tuple(out)


def _parse_spans(text: str, nchars: int, nsegs: int) -> tuple[CharSpan, ...]:
    spans = []
    for item in text.split():
        try:
            o, _, rng = item.partition(":")
            s, _, e = rng.partition("-")
            span = CharSpan(int(o), int(s), int(e))
        except ValueError:
            raise ValueError(f"bad alignment span {item!r}") from None
        if not 0 <= span.ordinal < nchars:
            raise ValueError(f"span {item}: no character {span.ordinal}")
        if not 0 <= span.start <= span.end < nsegs:
            raise ValueError(f"span {item}: outside the reconstruction")
        if spans and (span.ordinal <= spans[-1].ordinal or span.start <= spans[-1].end):
            raise ValueError(f"span {item}: spans must be ordered and non-overlapping")
        spans.append(span)
    return tuple(spans)


def _parse_morphemes(text: str, nchars: int) -> tuple[MorphemeSpan, ...]:
    out = []
    for item in text.split():
        label, sep, rng = item.rpartition(":")
        s, _, e = rng.partition("-")
        try:
            m = MorphemeSpan(label, int(s), int(e or s))
        except ValueError:
            raise ValueError(f"bad morpheme span {item!r}") from None
        if not sep or not label or not 0 <= m.start <= m.end < nchars:
            raise ValueError(f"bad morpheme span {item!r}")
        out.append(m)
    return tuple(out)


def _convert(word: str, convention, user: Mapping | None):
    if user and convention in user:
        return convert_romanization(word, user[convention])
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    return convert_romanization(word, convention)


def parse_row(line: str, lineno: int | None = None, path="<string>",
              conventions: Mapping | None = None) -> CorpusEntry:
    fields = line.split("\t")
    if not 6 <= len(fields) <= 8:
        raise CorpusError(path, lineno, f"expected 6-8 tab-separated columns, got {len(fields)}")
    section, index, gloss, chars, recon, conv = fields[:6]
    if section not in SECTIONS:
        raise CorpusError(path, lineno, f"unknown section code {section!r}")
    if not index:
        raise CorpusError(path, lineno, "empty index")
    try:
        tokens = _parse_chars(chars)
        if not tokens:
            raise ValueError("no characters")
        words = tuple(_convert(w, conv, conventions) for w in recon.split())
        if not words:
            raise ValueError("empty reconstruction")
        nsegs = sum(len(w) for w in words)
        spans = _parse_spans(fields[6], len(tokens), nsegs) if len(fields) > 6 and fields[6] else None
        morphs = _parse_morphemes(fields[7], len(tokens)) if len(fields) > 7 and fields[7] else None
    except (ValueError, ParseError, ConversionError) as exc:
        raise CorpusError(path, lineno, str(exc)) from None
    return CorpusEntry(section, index, gloss, tokens, recon, conv, words, spans, morphs, lineno)


def load_corpus(path, conventions: Mapping | None = None) -> list[CorpusEntry]:
    """Read a corpus TSV; blank lines and ``#`` lines are skipped."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CorpusError(path, None, "file not found") from None
    except UnicodeDecodeError as exc:
        raise CorpusError(path, None, f"not UTF-8: {exc.reason}") from None
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("#"):
            continue
        out.append(parse_row(raw, lineno, path, conventions))
    return out


def format_row(entry: CorpusEntry) -> str:
    fields = [entry.section, entry.index, entry.gloss,
              " ".join(c.written for c in entry.characters), entry.reconstruction, entry.convention]
    align = " ".join(str(s) for s in entry.alignment) if entry.alignment else ""
    morphs = " ".join(str(m) for m in entry.morphemes) if entry.morphemes else ""
    if align or morphs:
        fields.append(align)
    if morphs:
        fields.append(morphs)
    return "\t".join(fields)


def dump_corpus(entries: Iterable[CorpusEntry]) -> str:
    return "\n".join([HEADER] + [format_row(e) for e in entries]) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def save_corpus(entries: Iterable[CorpusEntry], path) -> None:
    write_atomic(path, dump_corpus(entries))


# --- alignment over a corpus ---------------------------------------------------

@dataclass(frozen=True)
class AlignedEntry:
    entry: CorpusEntry
    alignment: Alignment | None
    error: str | None = None

    def role_of(self, ordinal: int) -> str | None:
        if self.alignment is None:
            return None
        for s, r in zip(self.alignment.spans, self.alignment.roles):
            if s.ordinal == ordinal:
                return r
        return None


def align(entry: CorpusEntry, options: EngineOptions = DEFAULT_OPTIONS) -> tuple[CharSpan, ...]:
    return entry_alignment(entry, entry.section, options).spans


def _align_one(args) -> AlignedEntry:
    entry, options = args
    try:
        return AlignedEntry(entry, entry_alignment(entry, entry.section, options))
    except (AlignmentError, ValueError, LookupError) as exc:
        return AlignedEntry(entry, None, str(exc))


def align_corpus(corpus: Sequence[CorpusEntry], options: EngineOptions = DEFAULT_OPTIONS,
                 jobs: int = 1) -> list[AlignedEntry]:
    """Align every entry; results keep corpus order whatever ``jobs`` is."""
    work = [(e, options) for e in corpus]
    if jobs <= 1 or len(work) < 2:
        return [_align_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_align_one, work, chunksize=max(1, len(work) // (jobs * 4))))


def _aligned(corpus, options, jobs) -> list[AlignedEntry]:
    if corpus and isinstance(corpus[0], AlignedEntry):
        return list(corpus)
    return align_corpus(corpus, options, jobs)


# --- frequency tables ----------------------------------------------------------

@dataclass(frozen=True)
class Axis:
    kind: str  # "rime" or "shengmu"
    label: str
    role: str = "MT"

    def __post_init__(self):
        if self.kind not in ("rime", "shengmu"):
            raise ValueError(f"axis kind must be rime or shengmu, not {self.kind!r}")
        if self.role not in ("MT", "ST"):
            raise ValueError(f"axis role must be MT or ST, not {self.role!r}")


@dataclass(frozen=True)
class SectionCount:
    raw: int = 0
    other_role: int = 0
    unresolved: int = 0

    @property
    def total(self) -> int:
        return self.raw - self.other_role - self.unresolved


@dataclass(frozen=True)
class FrequencyTable:
    axis: Axis
    cells: Mapping[str, Mapping[str, int]]
    counts: Mapping[str, SectionCount]

    @property
    def totals(self) -> dict[str, int]:
        return {s: c.total for s, c in self.counts.items()}

    def top(self, k: int = 2) -> dict[str, list[tuple[str, int]]]:
        return {s: sorted(vals.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
                for s, vals in self.cells.items()}

    def to_dict(self, k: int | None = None) -> dict:
        cells = self.top(k) if k else {s: sorted(v.items()) for s, v in self.cells.items()}
        return {
            "axis": {"kind": self.axis.kind, "label": self.axis.label, "role": self.axis.role},
            "sections": {
                s: {"cells": dict(cells.get(s, [])), "raw": c.raw, "other_role": c.other_role,
                    "unresolved": c.unresolved, "total": c.total}
                for s, c in self.counts.items()
            },
        }


def _char_category(ce, kind: str) -> str | None:
    if kind == "rime":
        r = ce.rime
        return r.mt_label if r is not None else None
    return ce.shengmu.name


def rime_body(segs) -> str:
    """Vowel part of a span: leading consonants and a final nasal dropped."""
    segs = list(segs)
    while segs and not segs[0].is_vowel:
        segs.pop(0)
    if len(segs) > 1 and segs[-1].base in ("n", "ŋ", "m") and not segs[-1].is_vowel:
        segs.pop()
    return "".join(render(s) for s in segs)


def _onset_value(segs) -> str:
    return render(segs[0]) if segs and not segs[0].is_vowel else "0"


def _axis_label(axis: Axis) -> str:
    if axis.kind == "shengmu":
        return inventory_at("baseline").canonical_shengmu(axis.label)
    return axis.label


def frequency_tables(corpus: Sequence, axis: Axis, options: EngineOptions = DEFAULT_OPTIONS,
                     jobs: int = 1) -> FrequencyTable:
    """Per-section value counts for one category and role.

    ``total`` excludes characters used in the other role and characters the
    aligner could not place; the cells of a section always sum to it.
    """
    table = character_table()
    label = _axis_label(axis)
    cells: dict[str, Counter] = defaultdict(Counter)
    counts: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for ae in _aligned(corpus, options, jobs):
        e = ae.entry
        spans = {}
        if ae.alignment is not None:
            spans = {s.ordinal: (s, r) for s, r in zip(ae.alignment.spans, ae.alignment.roles)}
        for k, tok in enumerate(e.characters):
            ce = table.lookup(tok.char)
            cat = _char_category(ce, axis.kind)
            if axis.role == "ST" and (k in spans and spans[k][1] == "ST") and axis.kind == "shengmu":
                seg = e.segments[spans[k][0].start]
                cat = inventory_at("baseline").canonical_shengmu(
                    st_occurrence_category(tok.char, seg, e.section, table))
            if cat != label:
                continue
            c = counts[e.section]
            c[0] += 1
            if k not in spans:
                c[2] += 1
                continue
            span, role = spans[k]
            if role != axis.role:
                c[1] += 1
                continue
            segs = e.segments[span.start:span.end + 1]
            if role == "ST":
                value = render(segs[0])
            elif axis.kind == "rime":
                value = rime_body(segs)
            else:
                value = _onset_value(segs)
            cells[e.section][value] += 1
    order = {s: i for i, s in enumerate(SECTIONS)}
    secs = sorted(counts, key=order.__getitem__)
    return FrequencyTable(
        axis,
        {s: dict(sorted(cells[s].items())) for s in secs},
        {s: SectionCount(*counts[s]) for s in secs},
    )


# --- ST character identification ----------------------------------------------

@dataclass(frozen=True)
class StCharacterReport:
    character: str
    category: str
    counts: Mapping[str, int | None]
    lexemes: int
    decision: str
    criterion: str
    note: str = ""

    @property
    def total(self) -> int:
        return sum(v for v in self.counts.values() if v is not None)

    @property
    def has_unknown(self) -> bool:
        return any(v is None for v in self.counts.values())

    def to_dict(self) -> dict:
        return {"character": self.character, "category": self.category,
                "counts": {s: ("unknown" if v is None else v) for s, v in self.counts.items()},
                "total": self.total, "lexemes": self.lexemes, "decision": self.decision,
                "criterion": self.criterion, "note": self.note}


@dataclass(frozen=True)
class StOccurrence:
    character: str
    section: str
    lexeme: str
    category: str
    position: str


def st_occurrences(corpus: Sequence, options: EngineOptions = DEFAULT_OPTIONS,
                   jobs: int = 1) -> list[StOccurrence]:
    table = character_table()
    canon = inventory_at("baseline").canonical_shengmu
    out = []
    for ae in _aligned(corpus, options, jobs):
        if ae.alignment is None:
            continue
        e = ae.entry
        bounds = e.word_bounds()
        for span, role in zip(ae.alignment.spans, ae.alignment.roles):
            if role != "ST":
                continue
            char = e.characters[span.ordinal].char
            seg = e.segments[span.start]
            k = e.word_of(span.start)
            start, end = bounds[k]
            first_v = next((i for i in range(start, end) if e.segments[i].is_vowel), end)
            out.append(StOccurrence(
                char, e.section, e.word_text(k),
                canon(st_occurrence_category(char, seg, e.section, table)),
                "onset" if span.start < first_v else "coda",
            ))
    return out


def _label(canonical: str) -> str:
    # display with the customary label where an alias exists
    inv = inventory_at("baseline")
    for alias, target in sorted(inv.aliases.items()):
        if target == canonical:
            return alias
    return canonical


def decide(occurrences: Sequence[StOccurrence], threshold: int = DEFAULT_LIMITED_THRESHOLD) -> list[StCharacterReport]:
    """Two-criterion decision per character; pure in the occurrence multiset."""
    by_char: dict[str, list[StOccurrence]] = defaultdict(list)
    for o in occurrences:
        by_char[o.character].append(o)
    verifiable = {s: get_profile(s).counts_verifiable for s in SECTIONS}
    category: dict[str, str] = {}
    counts: dict[str, dict[str, int | None]] = {}
    for ch, occ in by_char.items():
        cats = Counter(o.category for o in occ)
        category[ch] = min(cats, key=lambda c: (-cats[c], c))
        per = Counter(o.section for o in occ)
        counts[ch] = {s: (per[s] if verifiable[s] else None)
                      for s in sorted(per, key=SECTIONS.index)}
    order = {c: i for i, c in enumerate(x.name for x in inventory_at("baseline").shengmu)}
    order[ERHUA] = len(order)
    reports = []
    for ch in sorted(by_char, key=lambda c: (order.get(category[c], len(order) + 1), category[c], c)):
        occ = by_char[ch]
        cnt = counts[ch]
        lexemes = len({(o.section, o.lexeme) for o in occ})
        known = [v for v in cnt.values() if v is not None]
        total = sum(known)
        note = ""
        if len(cnt) >= 2:
            criterion = MULTI_SECTION
            if len(known) == len(cnt) and total <= threshold:
                decision = RETAINED
                note = f"{total} occurrences across {len(cnt)} sections"
            else:
                decision = ESTABLISHED
        else:
            (sec,) = cnt
            criterion = NO_CRITERION
            if cnt[sec] is None:
                decision = REJECTED
                note = f"{sec} counts cannot be verified"
            elif total == 1:
                rel = get_profile(sec).reliability_at(occ[0].position)
                decision = UNDETERMINED if rel == "○" else REJECTED
                note = f"single occurrence; {sec} {occ[0].position} reliability {rel}"
            elif lexemes == 1:
                decision = REJECTED
                note = f"all occurrences in one lexeme ({occ[0].lexeme})"
            else:
                criterion = MULTI_LEXEME
                rivals = [counts[c].get(sec) or 0 for c in by_char
                          if category[c] == category[ch] and c != ch]
                if total > max(rivals, default=0):
                    decision = ESTABLISHED
                    note = f"most frequent {_label(category[ch])} ST character in {sec}"
                else:
                    decision = RETAINED
        if any(v is None for v in cnt.values()):
            note = (note + "; " if note else "") + "⊙ count unverifiable"
        reports.append(StCharacterReport(ch, _label(category[ch]), cnt, lexemes, decision, criterion, note))
    return reports


def identify_st_chars(corpus: Sequence, options: EngineOptions = DEFAULT_OPTIONS,
                      threshold: int = DEFAULT_LIMITED_THRESHOLD, jobs: int = 1) -> list[StCharacterReport]:
    return decide(st_occurrences(corpus, options, jobs), threshold)


# --- export ----------------------------------------------------------------------

def _width(text: str) -> int:
    return sum(2 if unicodedata.east_asian_width(c) in ("W", "F") else
               0 if unicodedata.combining(c) else 1 for c in text)


def text_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    cols = list(zip(*([header] + [list(r) for r in rows])))
    widths = [max(_width(c) for c in col) for col in cols]

    def line(cells):
        parts = [c + " " * (w - _width(c)) for c, w in zip(cells, widths)]
        return "  ".join(parts).rstrip()

    return "\n".join([line(header)] + [line(r) for r in rows]) + "\n"


def _st_table(reports: Sequence[StCharacterReport]) -> str:
    secs = sorted({s for r in reports for s in r.counts}, key=SECTIONS.index)
    header = ["category", "char"] + secs + ["total", "lexemes", "decision", "criterion"]
    rows = []
    for r in reports:
        cells = ["⊙" if r.counts.get(s, 0) is None else (str(r.counts[s]) if s in r.counts else "")
                 for s in secs]
        total = f"{r.total}+⊙" if r.has_unknown and r.total else ("⊙" if r.has_unknown else str(r.total))
        rows.append([r.category, r.character] + cells + [total, str(r.lexemes), r.decision, r.criterion])
    return text_table(header, rows)


def _freq_table(t: FrequencyTable, k: int | None) -> str:
    view = t.top(k) if k else {s: sorted(v.items(), key=lambda kv: (-kv[1], kv[0])) for s, v in t.cells.items()}
    values = []
    for s in t.counts:
        for v, _ in view.get(s, []):
            if v not in values:
                values.append(v)
    header = ["section"] + values + ["total"]
    rows = []
    for s, c in t.counts.items():
        got = dict(view.get(s, []))
        rows.append([s] + [str(got[v]) if v in got else "-" for v in values] + [str(c.total)])
    title = f"{t.axis.label} ({t.axis.kind}, {t.axis.role})\n"
    return title + text_table(header, rows)


def export_report(reports, fmt: str = "json", path=None, top: int | None = None) -> str:
    """Serialize ST reports, frequency tables or validation reports.

    The result is byte-stable for identical input; with ``path`` it is also
    written there atomically.
    """
    if isinstance(reports, FrequencyTable):
        reports = [reports]
    reports = list(reports)
    if fmt == "json":
        items = [r.to_dict(top) if isinstance(r, FrequencyTable) else r.to_dict() for r in reports]
        text = json.dumps(items, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    elif fmt == "table":
        if not reports or isinstance(reports[0], StCharacterReport):
            text = _st_table(reports)
        elif isinstance(reports[0], FrequencyTable):
            text = "\n".join(_freq_table(t, top) for t in reports)
        else:
            text = "\n".join(r.to_text() for r in reports) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        write_atomic(path, text)
    return text
