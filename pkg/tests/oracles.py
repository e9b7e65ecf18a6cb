"""Independent reference implementations used by the test suite."""
import itertools
from functools import lru_cache

# class letters: v vowel, n nasal usable as coda, m bilabial nasal, g glide, c anything else
_NASAL = {"n", "ŋ"}
_GLIDE = {"j", "w"}


def sound_class(seg) -> str:
    if seg.kind == "vowel":
        return "v"
    if seg.symbol in _NASAL:
        return "n"
    if seg.symbol == "m":
        return "m"
    if seg.symbol in _GLIDE:
        return "g"
    return "c"


def _legal(pattern: str, roles: dict, legacy_m: bool) -> bool:
    n = len(pattern)
    for i, r in roles.items():
        if r == "O":
            nxt = i + 1
            if nxt < n and roles.get(nxt) == "M":
                nxt += 1
            if nxt >= n or pattern[nxt] != "v":
                return False
        elif r == "M":
            if pattern[i] != "g" or i + 1 >= n or pattern[i + 1] != "v":
                return False
        elif r == "E":
            ok = pattern[i] == "n" or (legacy_m and pattern[i] == "m")
            if not ok or i == 0 or pattern[i - 1] != "v":
                return False
    return True


@lru_cache(maxsize=None)
def eligible_by_pattern(pattern: str, legacy_m: bool = False) -> tuple:
    """For each position: True iff some legal parse puts it in an I/M/V/E slot."""
    cons = [i for i, c in enumerate(pattern) if c != "v"]
    covered = {i for i, c in enumerate(pattern) if c == "v"}
    for combo in itertools.product("OMES", repeat=len(cons)):
        roles = {i: r for i, r in zip(cons, combo) if r != "S"}
        if not set(roles) - covered:
            continue
        if _legal(pattern, roles, legacy_m):
            covered |= set(roles)
    return tuple(i in covered for i in range(len(pattern)))


def mt_eligible(word, legacy_m: bool = False) -> tuple:
    return eligible_by_pattern("".join(sound_class(s) for s in word), legacy_m)


def count_legal_parses(word, legacy_m: bool = False) -> int:
    pattern = "".join(sound_class(s) for s in word)
    cons = [i for i, c in enumerate(pattern) if c != "v"]
    total = 0
    for combo in itertools.product("OMES", repeat=len(cons)):
        roles = {i: r for i, r in zip(cons, combo) if r != "S"}
        total += _legal(pattern, roles, legacy_m)
    return total


def brute_force_alignment(entry, section, options):
    """Enumerate every cover of the units and return (cost, spans) of the best.

    Costs come from the engine's per-unit scorers; only the search is
    independent. Ties go to the lexicographically smallest span tuple.
    """
    from hhy import correspondence as c
    from hhy.phonology import character_table

    table = character_table()
    chars = [table.lookup(t.char) for t in entry.characters]
    units, _ = c._units(entry, section, options)
    costs = c.shipped_rules().costs
    segs = entry.segments
    results = []

    def walk(i, j, cost, spans):
        if j == len(units):
            if i == len(chars):
                results.append((cost, tuple(spans)))
            return
        u = units[j]
        if u.kind == "st":
            skip = costs["skip_unrepresented"] if u.verdict == "unrepresented" else costs["skip_st"]
            walk(i, j + 1, cost + skip, spans)
            if i < len(chars):
                seg = c._resolved_segment(entry, u.start, section, options)
                k, _ = c._st_cost(chars[i], seg, section, costs)
                if u.verdict == "unrepresented":
                    k += costs["st_on_unrepresented"]
                walk(i + 1, j + 1, cost + k, spans + [(i, u.start, u.end)])
            return
        if i >= len(chars):
            return
        k, _ = c._mt_cost(chars[i], segs, u.syllable, u.syllable, section, options, costs)
        walk(i + 1, j + 1, cost + k, spans + [(i, u.start, u.end)])
        if j + 1 < len(units) and units[j + 1].kind == "syl" \
                and entry.word_of(u.start) == entry.word_of(units[j + 1].start):
            k, _ = c._mt_cost(chars[i], segs, u.syllable, units[j + 1].syllable, section, options, costs)
            walk(i + 1, j + 2, cost + k + costs["multi_syllable"], spans + [(i, u.start, units[j + 1].end)])

    walk(0, 0, 0, [])
    if not results:
        return None
    return min(results, key=lambda r: (r[0], r[1]))
