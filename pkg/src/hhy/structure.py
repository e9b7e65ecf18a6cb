"""Syllable-template parsing and the ST phonetic conditions.

A word is parsed against the Chinese template: every vowel heads its own
syllable, optionally preceded by a single onset consonant and a glide medial
([j]/[w]) and followed by a nasal coda ([n]/[ŋ]). Slots are contiguous with
the nucleus. Consonants that fit no slot are ST candidates, and an ST
candidate is actually written with an ST character only when it is voiced
(A), a voiceless continuant (B) or a released voiceless stop/affricate (C).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .profiles import SectionProfile, get_profile
from .segments import CONTINUANT_MANNERS, RELEASABLE, RELEASED, UNKNOWN, UNRELEASED, Segment

ONSET, MEDIAL, NUCLEUS, CODA, ST = "mt-onset", "mt-medial-glide", "mt-nucleus", "mt-coda", "st-candidate"
ROLES = (ONSET, NUCLEUS, MEDIAL, CODA, ST)
COND_A, COND_B, COND_C, COND_NONE = "A", "B", "C", "none"
CONDITION_LABELS = {
    COND_A: "A-voiced",
    COND_B: "B-voiceless-continuant",
    COND_C: "C-released-voiceless-stop",
    COND_NONE: "none",
}
VERDICT_MT, VERDICT_ST, VERDICT_UNREP = "MT", "ST", "unrepresented"
RELEASE_POLICIES = ("released", "unreleased", "profile")

NASAL_CODAS = frozenset({"n", "ŋ"})
LEGACY_CODA = "m"
GLIDES = frozenset({"j", "w"})

# consonant class codes used by the template
_V, _N, _M, _G, _C = "V", "N", "M", "G", "C"
# tie-break rank of a consonant's role; lower is preferred
_RANK = {ONSET: 0, MEDIAL: 1, CODA: 2, ST: 3}


class NoNucleusError(ValueError):
    """The word has no vowel, so no syllable can be built."""


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Syllable:
    nucleus: int
    onset: int | None = None
    medial: int | None = None
    coda: int | None = None

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in (self.onset, self.medial, self.nucleus, self.coda) if i is not None)


@dataclass(frozen=True)
class MtParse:
    syllables: tuple[Syllable, ...]
    st_slots: tuple[int, ...]
    warnings: tuple[str, ...] = ()

    def roles(self) -> dict[int, str]:
        out = {i: ST for i in self.st_slots}
        for syl in self.syllables:
            out[syl.nucleus] = NUCLEUS
            if syl.onset is not None:
                out[syl.onset] = ONSET
            if syl.medial is not None:
                out[syl.medial] = MEDIAL
            if syl.coda is not None:
                out[syl.coda] = CODA
        return out

    def rank_key(self) -> tuple:
        roles = self.roles()
        return (len(self.st_slots), tuple(_RANK[r] for i, r in sorted(roles.items()) if r != NUCLEUS))


@dataclass(frozen=True)
class SlotClassification:
    segment_index: int
    structural_role: str
    st_condition: str | None = None
    verdict: str | None = None
    metadata: tuple[str, ...] = ()

    @property
    def condition_label(self) -> str | None:
        return None if self.st_condition is None else CONDITION_LABELS[self.st_condition]


@dataclass(frozen=True)
class WordClassification(Sequence):
    """Final per-segment verdicts plus any warnings raised on the way."""

    segments: tuple[Segment, ...]
    slots: tuple[SlotClassification, ...]
    warnings: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.slots)

    def __getitem__(self, i):
        return self.slots[i]

    def __iter__(self) -> Iterator[SlotClassification]:
        return iter(self.slots)

    def verdicts(self) -> tuple[str, ...]:
        return tuple(s.verdict for s in self.slots)


def segment_class(seg: Segment) -> str:
    if seg.is_vowel:
        return _V
    base = seg.base
    if base in NASAL_CODAS and seg.voiced:
        return _N
    if base == LEGACY_CODA and seg.voiced:
        return _M
    if base in GLIDES:
        return _G
    return _C


def _clusters(classes: str) -> list[tuple[int, int, bool, bool]]:
    """(start, end, has_left_vowel, has_right_vowel) for consonant runs, end exclusive."""
    out = []
    n = len(classes)
    i = 0
    while i < n:
        if classes[i] == _V:
            i += 1
            continue
        j = i
        while j < n and classes[j] != _V:
            j += 1
        out.append((i, j, i > 0, j < n))
        i = j
    return out


def _cluster_options(classes: str, start: int, end: int, left: bool, right: bool,
                     legacy_m: bool) -> list[dict[int, str]]:
    """Every legal slot assignment of one consonant run."""
    codas: list[int | None] = [None]
    if left and (classes[start] == _N or (legacy_m and classes[start] == _M)):
        codas.append(start)
    heads: list[tuple[int | None, int | None]] = [(None, None)]
    if right:
        last = end - 1
        heads.append((last, None))
        if classes[last] == _G:
            heads.append((None, last))
            if last - 1 >= start:
                heads.append((last - 1, last))
    out = []
    for coda in codas:
        for onset, medial in heads:
            used = [i for i in (coda, onset, medial) if i is not None]
            if len(set(used)) != len(used):
                continue
            roles = {i: ST for i in range(start, end)}
            if coda is not None:
                roles[coda] = CODA
            if onset is not None:
                roles[onset] = ONSET
            if medial is not None:
                roles[medial] = MEDIAL
            out.append(roles)
    return out


def _build_parse(n: int, classes: str, roles: dict[int, str]) -> MtParse:
    sylls = []
    for v in (i for i in range(n) if classes[i] == _V):
        onset = medial = coda = None
        k = v - 1
        if k >= 0 and roles.get(k) == MEDIAL:
            medial, k = k, k - 1
        if k >= 0 and roles.get(k) == ONSET:
            onset = k
        if v + 1 < n and roles.get(v + 1) == CODA:
            coda = v + 1
        sylls.append(Syllable(v, onset, medial, coda))
    st = tuple(sorted(i for i, r in roles.items() if r == ST))
    warnings = tuple(
        f"legacy-m-coda at {i}" for i, r in sorted(roles.items()) if r == CODA and classes[i] == _M
    )
    return MtParse(tuple(sylls), st, warnings)


def _check(word: Sequence[Segment]) -> str:
    if not word:
        raise NoNucleusError("empty word")
    classes = "".join(segment_class(s) for s in word)
    if _V not in classes:
        raise NoNucleusError(f"no vowel in {''.join(s.symbol for s in word)!r}")
    return classes


def enumerate_parses(word: Sequence[Segment], legacy_m_coda: bool = False) -> list[MtParse]:
    """All template-conforming parses, best first."""
    classes = _check(word)
    per_cluster = [
        _cluster_options(classes, s, e, l, r, legacy_m_coda) for s, e, l, r in _clusters(classes)
    ]
    parses = []
    for combo in itertools.product(*per_cluster):
        roles: dict[int, str] = {}
        for part in combo:
            roles.update(part)
        parses.append(_build_parse(len(word), classes, roles))
    parses.sort(key=MtParse.rank_key)
    return parses


@lru_cache(maxsize=65536)
def _best_roles(classes: str, legacy_m: bool) -> tuple[tuple[str, ...], tuple[int, ...]]:
    """Role per position in the first minimal parse, plus ambiguous-medial nasals."""
    roles = [NUCLEUS if c == _V else ST for c in classes]
    ambiguous = []
    for s, e, l, r in _clusters(classes):
        options = _cluster_options(classes, s, e, l, r, legacy_m)
        best = min(options, key=lambda o: (
            sum(1 for x in o.values() if x == ST), tuple(_RANK[o[i]] for i in range(s, e))))
        for i, role in best.items():
            roles[i] = role
        if e - s == 1 and l and r and classes[s] == _N:
            ambiguous.append(s)
    return tuple(roles), tuple(ambiguous)


def first_parse(word: Sequence[Segment], legacy_m_coda: bool = False) -> MtParse:
    classes = _check(word)
    roles, _ = _best_roles(classes, legacy_m_coda)
    return _build_parse(len(word), classes, dict(enumerate(roles)))


def classify_positions(word: Sequence[Segment], legacy_m_coda: bool = False) -> tuple[SlotClassification, ...]:
    """Structural role of each segment under the first minimal parse.

    Metadata flags: ``ambiguous-medial`` for an intervocalic nasal that could
    also close the preceding syllable, ``adjacent-st`` for neighbouring ST
    candidates, ``medial-restricted`` when only the glide-only medial rule
    keeps a consonant out of the template, ``legacy-m-coda`` for an [m] coda.
    """
    classes = _check(word)
    roles, ambiguous = _best_roles(classes, legacy_m_coda)
    out = []
    n = len(roles)
    for i, role in enumerate(roles):
        meta = []
        if i in ambiguous:
            meta.append("ambiguous-medial")
        if role == ST:
            if (i > 0 and roles[i - 1] == ST) or (i + 1 < n and roles[i + 1] == ST):
                meta.append("adjacent-st")
            if i + 2 < n and roles[i + 1] == ONSET and roles[i + 2] == NUCLEUS:
                meta.append("medial-restricted")
        elif role == CODA and classes[i] == _M:
            meta.append("legacy-m-coda")
        out.append(SlotClassification(i, role, None, None if role == ST else VERDICT_MT, tuple(meta)))
    return tuple(out)


def st_condition(segment: Segment) -> str:
    """First of A, B, C that holds, else ``none``.

    An ``unknown`` release counts as released here; callers resolve
    word-final release before asking.
    """
    if not segment.is_consonant:
        raise DomainError(f"{segment.symbol!r} is a vowel; ST conditions apply to consonants")
    if segment.voiced:
        return COND_A
    if segment.manner in CONTINUANT_MANNERS:
        return COND_B
    if segment.manner in RELEASABLE and segment.released in (RELEASED, UNKNOWN):
        return COND_C
    return COND_NONE


def resolve_release(segment: Segment, word_final: bool, release_policy: str = "profile",
                    profile: SectionProfile | str | None = None) -> tuple[Segment, str | None]:
    """Fix an ``unknown`` release; returns the segment and an optional warning."""
    if segment.manner not in RELEASABLE or segment.released != UNKNOWN:
        return segment, None
    if not word_final:
        return segment.with_release(RELEASED), None
    if release_policy == "released":
        return segment.with_release(RELEASED), None
    if release_policy == "unreleased":
        return segment.with_release(UNRELEASED), None
    if release_policy != "profile":
        raise ValueError(f"unknown release policy {release_policy!r}")
    prof = get_profile(profile)
    if prof is not None and prof.final_release != UNKNOWN:
        return segment.with_release(prof.final_release), None
    where = prof.code if prof is not None else "no section"
    return segment.with_release(RELEASED), f"release-assumed: final {segment.symbol} treated as released ({where})"


def classify_word(word: Sequence[Segment], release_policy: str = "profile",
                  profile: SectionProfile | str | None = None,
                  legacy_m_coda: bool = False) -> WordClassification:
    """Compose template roles with the ST conditions."""
    positions = classify_positions(word, legacy_m_coda)
    slots = []
    warnings = []
    last = len(word) - 1
    for slot in positions:
        if slot.structural_role != ST:
            if "legacy-m-coda" in slot.metadata:
                warnings.append(f"legacy-m-coda: [m] at {slot.segment_index} accepted as MT coda")
            slots.append(slot)
            continue
        seg, warn = resolve_release(word[slot.segment_index], slot.segment_index == last,
                                    release_policy, profile)
        if warn:
            warnings.append(warn)
        cond = st_condition(seg)
        verdict = VERDICT_UNREP if cond == COND_NONE else VERDICT_ST
        slots.append(SlotClassification(slot.segment_index, ST, cond, verdict, slot.metadata))
    return WordClassification(tuple(word), tuple(slots), tuple(warnings))
