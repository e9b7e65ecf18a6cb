"""Segment <-> category correspondences, prediction, alignment and validation."""
from __future__ import annotations

import itertools
import json
import sys
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from ._data import DataError, data_dir, read_tsv
from .entry import CharSpan, CorpusEntry
from .phonology import (
    ZERO, CategoryError, CharacterEntry, CharacterTable, UnknownCharacterError,
    character_table, inventory_at,
)
from .profiles import SectionProfile, get_profile
from .segments import Segment, features_match, parse_ipa, render
from .structure import (
    COND_NONE, ST, VERDICT_ST, VERDICT_UNREP, MtParse, Syllable,
    classify_word, enumerate_parses, first_parse, resolve_release, st_condition,
)

MT_SHENGMU, MT_YUNMU, ST_DIR = "MT-shengmu", "MT-yunmu", "ST"
PRIMARY, SECONDARY = "primary", "secondary"
ACCEPTED, LIMITED, EXCLUDED = "accepted", "limited", "excluded"
CONFIDENCES = (ACCEPTED, LIMITED, EXCLUDED)
RIME_LABELS = ("/a/", "/ə/", "/jə/", "/i/", "/jĩ/", "/wo/", "/u/")
ZERO_CATEGORY = "yun 云"
ERROR, WARNING, INFO = "error", "warning", "info"

_CONSONANT_FEATURES = ("place", "manner", "voiced", "aspirated")
_VOWEL_FEATURES = ("height", "backness", "rounded")


class UncoverableSegmentError(ValueError):
    def __init__(self, index: int, symbol: str, what: str):
        self.index = index
        self.symbol = symbol
        super().__init__(f"segment {index} [{symbol}] has no MT {what} candidate")


class AlignmentError(ValueError):
    def __init__(self, entry: str, message: str, ordinal: int | None = None):
        self.entry = entry
        self.ordinal = ordinal
        super().__init__(f"{entry}: {message}")


@dataclass(frozen=True)
class EngineOptions:
    stage: str = "baseline"
    apply_in_progress: bool = False
    legacy_m_coda: bool = False
    release_policy: str = "profile"


DEFAULT_OPTIONS = EngineOptions()


# --- rule tables -------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    label: str
    rank: str = PRIMARY
    characters: tuple[str, ...] = ()


@dataclass(frozen=True)
class CorrespondenceRule:
    direction: str
    pattern: tuple[Segment, ...]
    categories: tuple[Candidate, ...]
    sections: frozenset | None
    confidence: str
    anchor: str
    line: int = 0

    def applies_to(self, section: str | None) -> bool:
        # without a section, consonant rules of every section apply but vowel
        # region extensions (section cells) do not
        if self.sections is None:
            return True
        if section is None:
            return self.direction != MT_YUNMU
        return section in self.sections

    @property
    def usable(self) -> bool:
        return self.confidence != EXCLUDED


def _features_equal(pattern: Segment, seg: Segment, names: Iterable[str]) -> bool:
    for name in names:
        if name in seg.underspecified:
            continue
        if getattr(pattern, name) != getattr(seg, name):
            return False
    return True


def consonant_matches(pattern: Segment, seg: Segment) -> bool:
    return seg.is_consonant and _features_equal(pattern, seg, _CONSONANT_FEATURES)


def _exact(pattern: Segment, seg: Segment) -> bool:
    # matched without leaning on an underspecified feature
    return all(getattr(pattern, n) == getattr(seg, n) for n in _CONSONANT_FEATURES)


def vowel_matches(pattern: Segment, seg: Segment) -> bool:
    return seg.is_vowel and _features_equal(pattern, seg, _VOWEL_FEATURES)


def _sections(path, text: str, lineno: int) -> frozenset | None:
    if text == "all":
        return None
    from .profiles import SECTIONS
    codes = frozenset(c.strip() for c in text.split(","))
    bad = codes - set(SECTIONS)
    if bad:
        raise DataError(path, f"unknown section(s) {sorted(bad)}", lineno)
    return codes


def _confidence(path, text: str, lineno: int) -> str:
    if text not in CONFIDENCES:
        raise DataError(path, f"unknown confidence {text!r}", lineno)
    return text


def _one_segment(path, text: str, lineno: int) -> Segment:
    try:
        segs = parse_ipa(text)
    except ValueError as exc:
        raise DataError(path, f"bad pattern {text!r}: {exc}", lineno) from None
    if len(segs) != 1:
        raise DataError(path, f"pattern {text!r} must be one segment", lineno)
    return segs[0]


def load_mt_rules(path: Path) -> tuple[CorrespondenceRule, ...]:
    inv = inventory_at("baseline")
    rules = []
    for lineno, f in read_tsv(path, 5):
        cands = []
        for item in f[1].split(","):
            label, _, rank = item.strip().partition(":")
            rank = rank or PRIMARY
            try:
                inv.get_shengmu(label)
            except CategoryError as exc:
                raise DataError(path, str(exc), lineno) from None
            if rank not in (PRIMARY, SECONDARY):
                raise DataError(path, f"bad rank {rank!r}", lineno)
            cands.append(Candidate(label, rank))
        rules.append(CorrespondenceRule(
            MT_SHENGMU, (_one_segment(path, f[0], lineno),), tuple(cands),
            _sections(path, f[2], lineno), _confidence(path, f[3], lineno), f[4], lineno,
        ))
    return tuple(rules)


def load_st_rules(path: Path) -> tuple[CorrespondenceRule, ...]:
    inv = inventory_at("baseline")
    rules = []
    for lineno, f in read_tsv(path, 7):
        try:
            inv.get_shengmu(f[1])
        except CategoryError as exc:
            raise DataError(path, str(exc), lineno) from None
        if f[3] not in (PRIMARY, SECONDARY):
            raise DataError(path, f"bad rank {f[3]!r}", lineno)
        chars = tuple(c.strip() for c in f[2].split(",") if c.strip())
        rules.append(CorrespondenceRule(
            ST_DIR, (_one_segment(path, f[0], lineno),), (Candidate(f[1], f[3], chars),),
            _sections(path, f[4], lineno), _confidence(path, f[5], lineno), f[6], lineno,
        ))
    return tuple(rules)


def load_vowel_regions(path: Path) -> tuple[CorrespondenceRule, ...]:
    rules = []
    for lineno, f in read_tsv(path, 5):
        if f[0] not in RIME_LABELS:
            raise DataError(path, f"unknown rime label {f[0]!r}", lineno)
        members = tuple(_one_segment(path, m, lineno) for m in f[1].split())
        if not all(m.is_vowel for m in members):
            raise DataError(path, "region members must be vowels", lineno)
        rules.append(CorrespondenceRule(
            MT_YUNMU, members, (Candidate(f[0]),),
            _sections(path, f[2], lineno), _confidence(path, f[3], lineno), f[4], lineno,
        ))
    return tuple(rules)


@dataclass(frozen=True)
class RuleSet:
    mt: tuple[CorrespondenceRule, ...]
    st: tuple[CorrespondenceRule, ...]
    regions: tuple[CorrespondenceRule, ...]
    costs: dict = field(default_factory=dict, compare=False, hash=False)

    def all_rules(self) -> tuple[CorrespondenceRule, ...]:
        return self.mt + self.st + self.regions


def load_costs(path: Path) -> dict:
    if not path.exists():
        raise DataError(path, "file not found")
    try:
        costs = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(path, exc.msg, exc.lineno) from None
    need = {"match", "near", "mismatch", "multi_syllable", "skip_st", "skip_unrepresented",
            "st_on_unrepresented"}
    missing = need - set(costs)
    if missing:
        raise DataError(path, f"missing cost(s) {sorted(missing)}")
    return costs


@lru_cache(maxsize=8)
def _rules_for(root: str) -> RuleSet:
    base = Path(root)
    return RuleSet(
        load_mt_rules(base / "mt_rules.tsv"),
        load_st_rules(base / "st_rules.tsv"),
        load_vowel_regions(base / "vowel_regions.tsv"),
        load_costs(base / "costs.json"),
    )


def shipped_rules() -> RuleSet:
    return _rules_for(str(data_dir()))


def _canon(label: str) -> str:
    return inventory_at("baseline").canonical_shengmu(label)


def _rank_order(rule: CorrespondenceRule, cand: Candidate) -> tuple:
    return (cand.rank != PRIMARY, rule.confidence != ACCEPTED)


# --- candidate sets ----------------------------------------------------------

def _section_code(section) -> str | None:
    prof = get_profile(section)
    return prof.code if prof is not None else None


def mt_shengmu_matches(segment: Segment | None, section=None, options: EngineOptions = DEFAULT_OPTIONS,
                       rules: RuleSet | None = None) -> list[tuple[str, str, str]]:
    """(label, rank, confidence) for each usable MT shengmu candidate, best first."""
    if segment is None or segment is ZERO:
        return [(ZERO_CATEGORY, PRIMARY, ACCEPTED)]
    if not segment.is_consonant:
        return []
    rules = rules or shipped_rules()
    code = _section_code(section)
    found = []
    blocked = set()
    for rule in rules.mt:
        if not rule.applies_to(code) or not consonant_matches(rule.pattern[0], segment):
            continue
        for cand in rule.categories:
            if not rule.usable:
                blocked.add(_canon(cand.label))
                continue
            exact = not _exact(rule.pattern[0], segment)
            found.append(((exact,) + _rank_order(rule, cand), rule.line, cand.label, cand.rank, rule.confidence))
    found.sort(key=lambda t: (t[0], t[1]))
    out, seen = [], set()
    for _, _, label, rank, conf in found:
        c = _canon(label)
        if c not in seen:
            seen.add(c)
            out.append((label, rank, conf))
    if options.stage != "baseline":
        # categories whose value shifted at this stage and now fits the segment
        inv = inventory_at(options.stage, options.apply_in_progress)
        for cat in inv.shengmu:
            value = cat.value(options.stage)
            if value is cat.baseline_value or value is ZERO or not isinstance(value, Segment):
                continue
            if cat.name in seen or cat.name in blocked:
                continue
            if consonant_matches(value, segment):
                seen.add(cat.name)
                out.append((cat.name, SECONDARY, LIMITED))
    return out


def mt_shengmu_candidates(segment: Segment | None, section=None,
                          options: EngineOptions = DEFAULT_OPTIONS) -> list[str]:
    return [label for label, _, _ in mt_shengmu_matches(segment, section, options)]


def _coda_class(coda: Segment | None) -> str | None:
    return None if coda is None else coda.base


def _labels_with_coda(coda: str | None, options: EngineOptions) -> set[str]:
    stage = "baseline" if coda == "m" else options.stage
    inv = inventory_at(stage, options.apply_in_progress)
    out = set()
    for y in inv.yunmu:
        table = y.variants if stage == "baseline" else (y.adjusted_variants or y.variants)
        for v in table.values():
            if v.nasal_coda == coda:
                out.add(v.mt_label)
    return out


def mt_yunmu_matches(nucleus: Segment, coda: Segment | None = None, medial: Segment | None = None,
                     section=None, options: EngineOptions = DEFAULT_OPTIONS,
                     rules: RuleSet | None = None) -> list[tuple[str, str]]:
    """(label, confidence) for rime labels whose region holds the nucleus.

    The medial does not filter: every aperture class is available to a label.
    """
    if not nucleus.is_vowel:
        return []
    rules = rules or shipped_rules()
    code = _section_code(section)
    allowed = _labels_with_coda(_coda_class(coda), options)
    hits = []
    for rule in rules.regions:
        if not rule.usable or not rule.applies_to(code):
            continue
        label = rule.categories[0].label
        if label in allowed and any(vowel_matches(m, nucleus) for m in rule.pattern):
            hits.append((rule.confidence != ACCEPTED, RIME_LABELS.index(label), label, rule.confidence))
    hits.sort()
    out, seen = [], set()
    for _, _, label, conf in hits:
        if label not in seen:
            seen.add(label)
            out.append((label, conf))
    return out


def mt_yunmu_candidates(nucleus: Segment, coda: Segment | None = None, medial: Segment | None = None,
                        section=None, options: EngineOptions = DEFAULT_OPTIONS) -> list[str]:
    return [label for label, _ in mt_yunmu_matches(nucleus, coda, medial, section, options)]


class StCandidate(NamedTuple):
    character: str
    category: str
    rank: str


def st_character_candidates(segment: Segment, section=None, rules: RuleSet | None = None) -> list[StCandidate]:
    rules = rules or shipped_rules()
    code = _section_code(section)
    found = []
    for rule in rules.st:
        if not rule.usable or not rule.applies_to(code):
            continue
        if not consonant_matches(rule.pattern[0], segment):
            continue
        cand = rule.categories[0]
        for k, ch in enumerate(cand.characters):
            key = (not _exact(rule.pattern[0], segment),) + _rank_order(rule, cand)
            found.append((key, rule.line, k, StCandidate(ch, cand.label, cand.rank)))
    found.sort(key=lambda t: t[:3])
    out, seen = [], set()
    for *_, c in found:
        if c.character not in seen:
            seen.add(c.character)
            out.append(c)
    return out


def st_categories(segment: Segment, section=None, rules: RuleSet | None = None) -> list[str]:
    out = []
    for c in st_character_candidates(segment, section, rules):
        if c.category not in out:
            out.append(c.category)
    return out


def st_occurrence_category(char: str, segment: Segment, section=None,
                           table: CharacterTable | None = None) -> str:
    """Category an ST use is filed under: the rule listing it, else its initial."""
    for c in st_character_candidates(segment, section):
        if c.character == char:
            return c.category
    return (table or character_table()).lookup(char).shengmu.name


# --- prediction ---------------------------------------------------------------

@dataclass(frozen=True)
class SyllableSlot:
    start: int
    end: int
    onset: int | None
    medial: int | None
    nucleus: int
    coda: int | None
    shengmu: tuple[str, ...]
    rimes: tuple[str, ...]

    @property
    def candidates(self) -> tuple[str, ...]:
        return tuple(f"{s} + {r}" for s in self.shengmu for r in self.rimes)


@dataclass(frozen=True)
class StSlot:
    index: int
    symbol: str
    condition: str
    candidates: tuple[StCandidate, ...]


@dataclass(frozen=True)
class GapSlot:
    """A segment no character represents (condition none)."""

    index: int
    symbol: str


@dataclass(frozen=True)
class ParsePrediction:
    parse_rank: int
    parse: MtParse
    slots: tuple

    def choice_lists(self) -> list[tuple[str, ...]]:
        out = []
        for s in self.slots:
            if isinstance(s, SyllableSlot):
                out.append(s.candidates)
            elif isinstance(s, StSlot):
                out.append(tuple(c.character for c in s.candidates) or ("?",))
        return out


@dataclass(frozen=True)
class Skeleton:
    parse_rank: int
    ranks: tuple[int, ...]
    items: tuple[str, ...]


@dataclass(frozen=True)
class Prediction:
    word: tuple[Segment, ...]
    section: str | None
    parses: tuple[ParsePrediction, ...]
    warnings: tuple[str, ...] = ()

    def ranked(self, limit: int = 20) -> list[Skeleton]:
        out = []
        for pp in self.parses:
            lists = pp.choice_lists()
            idx_lists = [range(len(x)) for x in lists]
            for combo in itertools.product(*idx_lists):
                out.append(Skeleton(pp.parse_rank, tuple(combo),
                                    tuple(lists[k][i] for k, i in enumerate(combo))))
                if len(out) >= limit * (pp.parse_rank + 1):
                    break
        out.sort(key=lambda s: (s.parse_rank, sum(s.ranks), s.ranks))
        return out[:limit]

    def to_dict(self, limit: int = 20) -> dict:
        return {
            "word": "".join(render(s) for s in self.word),
            "section": self.section,
            "warnings": list(self.warnings),
            "parses": [
                {"rank": pp.parse_rank, "slots": [_slot_dict(s) for s in pp.slots]}
                for pp in self.parses
            ],
            "skeletons": [
                {"parse": s.parse_rank, "ranks": list(s.ranks), "items": list(s.items)}
                for s in self.ranked(limit)
            ],
        }


def _slot_dict(s) -> dict:
    if isinstance(s, SyllableSlot):
        return {"type": "syllable", "span": [s.start, s.end], "shengmu": list(s.shengmu),
                "rimes": list(s.rimes)}
    if isinstance(s, StSlot):
        return {"type": "st", "index": s.index, "segment": s.symbol, "condition": s.condition,
                "candidates": [[c.character, c.category, c.rank] for c in s.candidates]}
    return {"type": "gap", "index": s.index, "segment": s.symbol}


def _syllable_slot(word, syl: Syllable, section, options) -> SyllableSlot:
    onset = word[syl.onset] if syl.onset is not None else None
    if onset is not None and onset.base in ("j", "w") and syl.medial is None:
        # a glide onset is the zero initial plus a medial
        sheng = (ZERO_CATEGORY,) + tuple(
            c for c in mt_shengmu_candidates(onset, section, options) if c != ZERO_CATEGORY)
    else:
        sheng = tuple(mt_shengmu_candidates(onset, section, options))
    coda = word[syl.coda] if syl.coda is not None else None
    medial = word[syl.medial] if syl.medial is not None else None
    rimes = tuple(mt_yunmu_candidates(word[syl.nucleus], coda, medial, section, options))
    idx = syl.indices()
    return SyllableSlot(idx[0], idx[-1], syl.onset, syl.medial, syl.nucleus, syl.coda, sheng, rimes)


def _parse_slots(word, parse: MtParse, section, options, strict: bool):
    prof = get_profile(section)
    slots = []
    st_set = set(parse.st_slots)
    starts = {s.indices()[0]: s for s in parse.syllables}
    warnings = []
    i = 0
    while i < len(word):
        if i in st_set:
            seg, warn = resolve_release(word[i], i == len(word) - 1, options.release_policy, prof)
            if warn:
                warnings.append(warn)
            cond = st_condition(seg)
            if cond == COND_NONE:
                slots.append(GapSlot(i, render(word[i])))
            else:
                slots.append(StSlot(i, render(word[i]), cond,
                                    tuple(st_character_candidates(seg, section))))
            i += 1
            continue
        syl = starts[i]
        slot = _syllable_slot(word, syl, section, options)
        if not slot.shengmu:
            if strict:
                raise UncoverableSegmentError(syl.onset, render(word[syl.onset]), "shengmu")
            return None, warnings
        if not slot.rimes:
            if strict:
                raise UncoverableSegmentError(syl.nucleus, render(word[syl.nucleus]), "yunmu")
            return None, warnings
        slots.append(slot)
        i = slot.end + 1
    return tuple(slots), warnings


def _as_word(word, section) -> tuple[Segment, ...]:
    if isinstance(word, str):
        prof = get_profile(section)
        from .segments import convert_romanization
        return convert_romanization(word, prof.convention if prof else "ipa-passthrough")
    return tuple(word)


def predict(word, section=None, options: EngineOptions = DEFAULT_OPTIONS) -> Prediction:
    """Ranked transcription skeletons for one word over all minimal parses."""
    word = _as_word(word, section)
    parses = enumerate_parses(word, options.legacy_m_coda)
    best = len(parses[0].st_slots)
    minimal = [p for p in parses if len(p.st_slots) == best]
    out = []
    warnings: list[str] = []
    for rank, parse in enumerate(minimal):
        slots, warns = _parse_slots(word, parse, section, options, strict=(rank == 0))
        for w in warns + list(parse.warnings):
            if w not in warnings:
                warnings.append(w)
        if slots is not None:
            out.append(ParsePrediction(rank, parse, slots))
    code = _section_code(section)
    return Prediction(word, code, tuple(out), tuple(warnings))


# --- alignment ------------------------------------------------------------------

@dataclass(frozen=True)
class Unit:
    kind: str  # "syl" or "st"
    start: int
    end: int
    syllable: Syllable | None = None
    verdict: str | None = None
    condition: str | None = None


@dataclass(frozen=True)
class Alignment:
    spans: tuple[CharSpan, ...]
    roles: tuple[str, ...]
    cost: int
    units: tuple[Unit, ...] = ()


def _units(entry: CorpusEntry, section, options) -> tuple[list[Unit], list]:
    units: list[Unit] = []
    classes = []
    for (start, _), word in zip(entry.word_bounds(), entry.words):
        res = classify_word(word, options.release_policy, section, options.legacy_m_coda)
        classes.append(res)
        roles = [s.structural_role for s in res]
        parse = first_parse(word, options.legacy_m_coda)
        by_start = {s.indices()[0]: s for s in parse.syllables}
        i = 0
        while i < len(word):
            if roles[i] == ST:
                slot = res[i]
                units.append(Unit("st", start + i, start + i, None, slot.verdict, slot.st_condition))
                i += 1
            else:
                syl = by_start[i]
                idx = syl.indices()
                shifted = Syllable(syl.nucleus + start,
                                   None if syl.onset is None else syl.onset + start,
                                   None if syl.medial is None else syl.medial + start,
                                   None if syl.coda is None else syl.coda + start)
                units.append(Unit("syl", start + idx[0], start + idx[-1], shifted))
                i = idx[-1] + 1
    return units, classes


def _near_consonant(value, seg: Segment | None) -> bool:
    if seg is None or value is ZERO or not isinstance(value, Segment):
        return False
    return value.is_consonant and seg.is_consonant and features_match(value, seg)


def _mt_cost(ce: CharacterEntry, segs, first: Syllable, last: Syllable, section, options, costs) -> tuple[int, list]:
    notes = []
    onset = segs[first.onset] if first.onset is not None else None
    matches = mt_shengmu_matches(onset, section, options)
    if onset is not None and onset.base in ("j", "w") and first.medial is None:
        matches = [(ZERO_CATEGORY, PRIMARY, ACCEPTED)] + matches
    canon = ce.shengmu.name
    hit = next((m for m in matches if _canon(m[0]) == canon), None) if not ce.shengmu.pseudo else None
    if hit is not None:
        cost = costs["match"]
        if hit[1] != PRIMARY or hit[2] != ACCEPTED:
            notes.append(("secondary-correspondence", f"{ce.character} {hit[0]} ({hit[1]}, {hit[2]})"))
    elif not ce.shengmu.pseudo and _near_consonant(ce.shengmu.baseline_value, onset):
        cost = costs["near"]
        notes.append(("noncanonical-candidate", f"{ce.character} initial {canon} for [{render(onset)}]"))
    else:
        cost = costs["mismatch"]
        what = f"[{render(onset)}]" if onset is not None else "zero initial"
        notes.append(("noncanonical-candidate", f"{ce.character} initial {canon} for {what}"))
    nucleus = segs[last.nucleus]
    coda = segs[last.coda] if last.coda is not None else None
    labels = dict(mt_yunmu_matches(nucleus, coda, None, section, options))
    if ce.yunmu is None:
        cost += costs["near"]
        notes.append(("unknown-rime", f"{ce.character} has no rime in the character table"))
        return cost, notes
    var = ce.yunmu.variant(ce.aperture, options.stage)
    want = _coda_class(coda)
    if var.mt_label in labels and var.nasal_coda == want:
        if labels[var.mt_label] != ACCEPTED:
            notes.append(("secondary-correspondence", f"{ce.character} rime {var.mt_label} (limited)"))
    elif var.mt_label in labels or vowel_near(var.nucleus, nucleus):
        cost += costs["near"]
        notes.append(("noncanonical-candidate",
                      f"{ce.character} rime {var.mt_label} [{var.render()}] for [{render(nucleus)}{render(coda) if coda else ''}]"))
    else:
        cost += costs["mismatch"]
        notes.append(("noncanonical-candidate",
                      f"{ce.character} rime {var.mt_label} [{var.render()}] for [{render(nucleus)}{render(coda) if coda else ''}]"))
    return cost, notes


def vowel_near(a: Segment, b: Segment) -> bool:
    return features_match(a, b)


def _st_cost(ce: CharacterEntry, seg: Segment, section, costs) -> tuple[int, list]:
    cands = st_character_candidates(seg, section)
    hit = next((c for c in cands if c.character == ce.character), None)
    if hit is not None:
        notes = []
        if hit.rank != PRIMARY:
            notes.append(("secondary-correspondence", f"{ce.character} {hit.category} is secondary for [{render(seg)}]"))
        return costs["match"], notes
    cats = {_canon(c.category) for c in cands}
    if ce.shengmu.name in cats:
        return costs["near"], [("unlisted-st-character",
                                f"{ce.character} ({ce.shengmu.name}) not among the ST characters for [{render(seg)}]")]
    if _near_consonant(ce.shengmu.baseline_value, seg):
        return costs["near"], [("noncanonical-candidate", f"ST {ce.character} ({ce.shengmu.name}) for [{render(seg)}]")]
    return costs["mismatch"], [("noncanonical-candidate", f"ST {ce.character} ({ce.shengmu.name}) for [{render(seg)}]")]


def _resolved_segment(entry: CorpusEntry, g: int, section, options) -> Segment:
    k = entry.word_of(g)
    start, end = entry.word_bounds()[k]
    seg, _ = resolve_release(entry.segments[g], g == end - 1, options.release_policy, section)
    return seg


def align_entry(entry: CorpusEntry, section=None, options: EngineOptions = DEFAULT_OPTIONS,
                table: CharacterTable | None = None) -> Alignment:
    """Minimum-cost character/segment alignment; ties go to the leftmost cover."""
    table = table or character_table()
    section = section if section is not None else entry.section
    costs = shipped_rules().costs
    name = f"{entry.section}:{entry.index}"
    try:
        chars = [table.lookup(c.char) for c in entry.characters]
    except UnknownCharacterError as exc:
        raise AlignmentError(name, str(exc)) from None
    if not chars:
        raise AlignmentError(name, "entry has no characters")
    units, _ = _units(entry, section, options)
    segs = entry.segments
    n, m = len(chars), len(units)
    INF = float("inf")

    memo: dict = {}

    def moves(i: int, j: int):
        """(cost, kind, next_i, next_j) in tie-break order: single, double, skip."""
        out = []
        u = units[j]
        if u.kind == "st":
            if i < n:
                c, _ = _st_cost(chars[i], _resolved_segment(entry, u.start, section, options), section, costs)
                if u.verdict == VERDICT_UNREP:
                    c += costs["st_on_unrepresented"]
                out.append((c, "st", i + 1, j + 1))
            skip = costs["skip_unrepresented"] if u.verdict == VERDICT_UNREP else costs["skip_st"]
            out.append((skip, "skip", i, j + 1))
        else:
            if i < n:
                c, _ = _mt_cost(chars[i], segs, u.syllable, u.syllable, section, options, costs)
                out.append((c, "mt", i + 1, j + 1))
                if j + 1 < m and units[j + 1].kind == "syl" and entry.word_of(u.start) == entry.word_of(units[j + 1].start):
                    c2, _ = _mt_cost(chars[i], segs, u.syllable, units[j + 1].syllable, section, options, costs)
                    out.append((c2 + costs["multi_syllable"], "mt2", i + 1, j + 2))
        return out

    def best(i: int, j: int) -> float:
        if (i, j) in memo:
            return memo[(i, j)]
        if j == m:
            v = 0 if i == n else INF
        else:
            v = min((c + best(ni, nj) for c, _, ni, nj in moves(i, j)), default=INF)
        memo[(i, j)] = v
        return v

    if m + n + 50 > sys.getrecursionlimit():
        sys.setrecursionlimit(m + n + 100)
    total = best(0, 0)
    if total == INF:
        # report the first character that cannot be placed
        i = j = 0
        while j < m:
            opts = [(c + best(ni, nj), kind, ni, nj) for c, kind, ni, nj in moves(i, j)]
            finite = [o for o in opts if o[0] < INF]
            if not finite:
                break
            _, _, i, j = finite[0]
        ordinal = min(i, n - 1)
        raise AlignmentError(name, f"no finite-cost alignment; first uncoverable character "
                                   f"{entry.characters[ordinal].written} at {ordinal}", ordinal)
    spans, roles = [], []
    i = j = 0
    while j < m:
        for c, kind, ni, nj in moves(i, j):
            if c + best(ni, nj) == best(i, j):
                break
        if kind == "st":
            spans.append(CharSpan(i, units[j].start, units[j].end))
            roles.append("ST")
        elif kind in ("mt", "mt2"):
            spans.append(CharSpan(i, units[j].start, units[nj - 1].end))
            roles.append("MT")
        i, j = ni, nj
    return Alignment(tuple(spans), tuple(roles), int(total), tuple(units))


def entry_alignment(entry: CorpusEntry, section=None, options: EngineOptions = DEFAULT_OPTIONS,
                    table: CharacterTable | None = None) -> Alignment:
    """The supplied alignment if the entry carries one, otherwise the computed one."""
    if entry.alignment is None:
        return align_entry(entry, section, options, table)
    units, classes = _units(entry, section if section is not None else entry.section, options)
    st_units = {u.start for u in units if u.kind == "st"}
    roles = tuple("ST" if s.start == s.end and s.start in st_units else "MT" for s in entry.alignment)
    return Alignment(entry.alignment, roles, -1, tuple(units))


# --- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    severity: str
    code: str
    message: str
    char: int | None = None
    span: tuple[int, int] | None = None
    reliability: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    entry: str
    findings: tuple[Finding, ...]

    @property
    def conformant(self) -> bool:
        return not any(f.severity == ERROR for f in self.findings)

    def codes(self) -> list[str]:
        return [f.code for f in self.findings]

    def to_dict(self) -> dict:
        return {"entry": self.entry, "conformant": self.conformant,
                "findings": [{k: (list(v) if isinstance(v, tuple) else v)
                              for k, v in asdict(f).items()} for f in self.findings]}

    def to_text(self) -> str:
        head = f"{self.entry}\t{'conformant' if self.conformant else 'NOT conformant'}"
        lines = [head]
        for f in self.findings:
            where = f"char {f.char}" if f.char is not None else ""
            if f.span is not None:
                where += f" seg {f.span[0]}-{f.span[1]}"
            rel = f" [{f.reliability}]" if f.reliability else ""
            lines.append(f"  {f.severity:<7} {f.code:<26} {where.strip():<16} {f.message}{rel}")
        return "\n".join(lines)


def _position(entry: CorpusEntry, g: int) -> str:
    seg = entry.segments[g]
    if seg.is_vowel:
        return "nucleus"
    k = entry.word_of(g)
    start, end = entry.word_bounds()[k]
    first_vowel = next((i for i in range(start, end) if entry.segments[i].is_vowel), end)
    return "onset" if g < first_vowel else "coda"


def _reliability(prof: SectionProfile | None, entry: CorpusEntry, g: int) -> str | None:
    return prof.reliability_at(_position(entry, g)) if prof is not None else None


def _structural(entry: CorpusEntry, span: CharSpan, options: EngineOptions) -> list[Finding]:
    segs = entry.segments[span.start:span.end + 1]
    out = []
    vowels = [k for k, s in enumerate(segs) if s.is_vowel]
    if not vowels:
        return [Finding(ERROR, "role-mismatch", "MT character covers no vowel", span.ordinal,
                        (span.start, span.end))]
    head = segs[:vowels[0]]
    cons_head = [s for s in head if s.base not in ("j", "w")]
    glides = [s for s in head if s.base in ("j", "w")]
    if len(cons_head) > 1 or len(glides) > 1 or (head and head[-1].base not in ("j", "w") and glides):
        out.append(Finding(ERROR, "onset-cluster-in-mt",
                           f"onset {''.join(render(s) for s in head)} is not a single consonant",
                           span.ordinal, (span.start, span.end)))
    tail = segs[vowels[-1] + 1:]
    if tail:
        coda = tail[-1]
        if len(tail) > 1:
            out.append(Finding(ERROR, "mt-coda-violation",
                               f"coda {''.join(render(s) for s in tail)} is a cluster",
                               span.ordinal, (span.start, span.end)))
        elif coda.base == "m" and options.legacy_m_coda:
            out.append(Finding(WARNING, "legacy-m-coda", "[m] accepted as MT coda",
                               span.ordinal, (span.start, span.end)))
        elif coda.base not in ("n", "ŋ"):
            out.append(Finding(ERROR, "mt-coda-violation", f"coda [{render(coda)}] is not n or ŋ",
                               span.ordinal, (span.start, span.end)))
    return out


def _span_syllables(entry: CorpusEntry, span: CharSpan, units) -> tuple[Syllable, Syllable] | None:
    inside = [u for u in units if u.kind == "syl" and span.start <= u.start and u.end <= span.end]
    if not inside:
        return None
    return inside[0].syllable, inside[-1].syllable


def _word_chars_before(entry: CorpusEntry, spans: Sequence[CharSpan], g: int) -> tuple[str, ...]:
    k = entry.word_of(g)
    start, _ = entry.word_bounds()[k]
    before = [s for s in spans if start <= s.start and s.end < g]
    return tuple(entry.characters[s.ordinal].char for s in before)


def _has_witness(entry: CorpusEntry, context: tuple[str, ...], seg: Segment,
                 witnesses: Sequence[CorpusEntry], options: EngineOptions, cache: dict) -> bool:
    if not context:
        return False
    needle = "".join(context)
    for w in witnesses:
        if w is entry or (w.section, w.index) == (entry.section, entry.index):
            continue
        if w.section != entry.section or needle not in w.chars:
            continue
        key = (w.section, w.index, w.line)
        if key not in cache:
            try:
                cache[key] = entry_alignment(w, w.section, options)
            except (AlignmentError, ValueError):
                cache[key] = None
        al = cache[key]
        if al is None:
            continue
        chars = [c.char for c in w.characters]
        by_ord = {s.ordinal: (s, r) for s, r in zip(al.spans, al.roles)}
        for p in range(len(chars) - len(context)):
            if tuple(chars[p:p + len(context)]) != context:
                continue
            nxt = by_ord.get(p + len(context))
            if nxt is None or nxt[1] != "ST":
                continue
            covered = w.segments[nxt[0].start]
            if covered.base == seg.base:
                return True
    return False


def validate(entry: CorpusEntry, section=None, options: EngineOptions = DEFAULT_OPTIONS,
             witnesses: Sequence[CorpusEntry] = (), table: CharacterTable | None = None,
             _cache: dict | None = None) -> ValidationReport:
    """Check one entry against the template, the candidate tables and ST usage.

    ``witnesses`` is the corpus searched for the same word-initial character
    run followed by an ST character for the omitted segment.
    """
    table = table or character_table()
    section = section if section is not None else entry.section
    prof = get_profile(section)
    costs = shipped_rules().costs
    cache = _cache if _cache is not None else {}
    al = entry_alignment(entry, section, options, table)
    chars = [table.lookup(c.char) for c in entry.characters]
    units = al.units
    st_units = {u.start: u for u in units if u.kind == "st"}
    segs = entry.segments
    structural, categorical, omission, condition = [], [], [], []

    for span, role in zip(al.spans, al.roles):
        ce = chars[span.ordinal]
        rel = _reliability(prof, entry, span.start)
        if role == "ST":
            u = st_units[span.start]
            seg = _resolved_segment(entry, span.start, section, options)
            _, notes = _st_cost(ce, seg, section, costs)
            for code, msg in notes:
                sev = WARNING if code == "noncanonical-candidate" else INFO
                categorical.append(Finding(sev, code, msg, span.ordinal, (span.start, span.end), rel))
            if u.condition == COND_NONE:
                condition.append(Finding(ERROR, "st-without-condition",
                                         f"ST {ce.character} covers [{render(segs[span.start])}], which meets no ST condition",
                                         span.ordinal, (span.start, span.end), rel))
            continue
        found = _structural(entry, span, options)
        structural.extend(found)
        if any(f.severity == ERROR for f in found):
            continue
        covered_st = [g for g in range(span.start, span.end + 1) if g in st_units]
        if covered_st:
            structural.append(Finding(ERROR, "role-mismatch",
                                      f"MT {ce.character} covers ST-candidate segment(s) {covered_st}",
                                      span.ordinal, (span.start, span.end), rel))
            continue
        sylls = _span_syllables(entry, span, units)
        if sylls is None:
            continue
        _, notes = _mt_cost(ce, segs, sylls[0], sylls[1], section, options, costs)
        for code, msg in notes:
            sev = WARNING if code == "noncanonical-candidate" else INFO
            categorical.append(Finding(sev, code, msg, span.ordinal, (span.start, span.end), rel))

    covered = {g for s in al.spans for g in range(s.start, s.end + 1)}
    for g, u in sorted(st_units.items()):
        if g in covered:
            continue
        rel = _reliability(prof, entry, g)
        if u.verdict != VERDICT_ST:
            omission.append(Finding(INFO, "unrepresented", f"[{render(segs[g])}] meets no ST condition",
                                    None, (g, g), rel))
            continue
        context = _word_chars_before(entry, al.spans, g)
        compound = len(entry.characters) > len(context)
        if compound and _has_witness(entry, context, segs[g], witnesses, options, cache):
            omission.append(Finding(WARNING, "permitted-st-omission",
                                    f"ST for [{render(segs[g])}] omitted; {''.join(context)} attested with it elsewhere",
                                    None, (g, g), rel))
        else:
            omission.append(Finding(ERROR, "missing-st", f"no ST character for [{render(segs[g])}]",
                                    None, (g, g), rel))
    findings = structural + categorical + omission + condition
    return ValidationReport(f"{entry.section}:{entry.index}", tuple(findings))


# --- consistency ----------------------------------------------------------------

def consistency_check(corpus: Sequence[CorpusEntry], options: EngineOptions = DEFAULT_OPTIONS) -> list[Finding]:
    """Compare every annotated morpheme with its other occurrences."""
    groups: dict[tuple[str, str], list] = {}
    for e in corpus:
        if not e.morphemes:
            continue
        try:
            al = entry_alignment(e, e.section, options)
            role = {s.ordinal: r for s, r in zip(al.spans, al.roles)}
        except (AlignmentError, ValueError):
            role = {}
        for m in e.morphemes:
            ords = range(m.start, m.end + 1)
            mt = tuple(e.characters[k].char for k in ords if role.get(k, "MT") == "MT")
            st = tuple(e.characters[k].char for k in ords if role.get(k) == "ST")
            groups.setdefault((e.section, m.label), []).append((e.index, mt, st))
    out = []
    for (section, label), occ in sorted(groups.items()):
        if len(occ) < 2:
            continue
        mts = sorted({o[1] for o in occ})
        sts = sorted({o[2] for o in occ})
        if len(mts) > 1:
            variants = "; ".join(
                f"{''.join(v)} ({', '.join(o[0] for o in occ if o[1] == v)})" for v in mts)
            out.append(Finding(WARNING, "inconsistent-morpheme",
                               f"{section} {label}: MT characters diverge: {variants}"))
        if len(sts) > 1:
            variants = "; ".join(
                f"{''.join(v) or '-'} x{sum(1 for o in occ if o[2] == v)}" for v in sts)
            out.append(Finding(INFO, "st-variation", f"{section} {label}: ST presence varies: {variants}"))
    return out
