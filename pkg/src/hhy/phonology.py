"""Late-Ming guanhua model: initials, rimes, character assignments, sound changes.

The baseline stage is the Zhongyuan Yinyun system. The late-Ming stage is
derived from it by :func:`apply_changes`; completed changes always apply,
in-progress ones only on request. Every object here is immutable once loaded.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Mapping

from ._data import DataError, data_dir, read_tsv
from .segments import ParseError, Segment, parse_ipa, render

APERTURES = ("kaikou", "qichi", "hekou", "cuokou")
STAGES = ("baseline", "late-ming")
STATUSES = ("stable", "lost", "merged", "in-progress")
PROVENANCES = ("paper-cited", "user-supplied")
COMPLETED, IN_PROGRESS = "completed", "in-progress"
ERHUA = "erhua 兒化韻"


class ZeroInitial:
    """The zero initial (零聲母). Not a segment; compares equal only to itself."""

    _instance = None
    symbol = "0"

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ZERO"

    def __reduce__(self):
        return (ZeroInitial, ())


ZERO = ZeroInitial()


class CategoryError(LookupError):
    """Unknown category label, or an aperture the rime does not have."""


class ConfigurationError(ValueError):
    """A diachronic rule refers to something that is not in the inventory."""


class UnknownCharacterError(LookupError):
    def __init__(self, char: str):
        self.char = char
        self.codepoints = tuple(f"U+{ord(c):04X}" for c in char)
        super().__init__(f"unknown character {char!r} ({' '.join(self.codepoints)})")


def _split_label(name: str) -> tuple[str, str]:
    parts = name.split()
    return (parts[0], parts[-1]) if len(parts) >= 2 else (name, name)


@dataclass(frozen=True)
class ShengmuCategory:
    name: str
    char: str
    baseline_value: Segment | ZeroInitial | tuple[Segment, ...]
    adjusted_value: Segment | ZeroInitial | None = None
    status: str = "stable"
    anchor: str = ""
    pseudo: bool = False
    fired: tuple[str, ...] = ()
    merged_into: str | None = None
    # (rule id, condition, value) for changes that only hold in some contexts
    conditioned: tuple[tuple[str, str, Segment], ...] = ()

    @property
    def romanized(self) -> str:
        return _split_label(self.name)[0]

    def value(self, stage: str = "baseline") -> Segment | ZeroInitial:
        if stage == "baseline" or self.adjusted_value is None:
            return self.baseline_value
        return self.adjusted_value


@dataclass(frozen=True)
class RimeVariant:
    aperture: str
    printed: str
    phonemic: str
    medial: tuple[Segment, ...]
    nucleus: Segment
    coda: Segment | None
    mt_label: str

    @property
    def phonetic(self) -> tuple[Segment, ...]:
        tail = (self.coda,) if self.coda is not None else ()
        return self.medial + (self.nucleus,) + tail

    @property
    def nasal_coda(self) -> str | None:
        """The consonantal coda symbol, or None for open and offglide rimes."""
        if self.coda is None or self.coda.manner != "nasal":
            return None
        return self.coda.symbol

    def render(self) -> str:
        return "".join(render(s) for s in self.phonetic)


@dataclass(frozen=True)
class YunmuCategory:
    rime_name: str
    char: str
    variants: Mapping[str, RimeVariant]
    adjusted_variants: Mapping[str, RimeVariant] | None = None
    anchor: str = ""
    fired: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def name(self) -> str:
        return self.rime_name

    @property
    def romanized(self) -> str:
        return _split_label(self.rime_name)[0]

    def variant(self, aperture: str, stage: str = "baseline") -> RimeVariant | None:
        table = self.variants
        if stage != "baseline" and self.adjusted_variants is not None:
            table = self.adjusted_variants
        return table.get(aperture)


@dataclass(frozen=True)
class DiachronicRule:
    id: str
    domain: str  # "shengmu" or "yunmu"
    targets: tuple[str, ...]
    effect: str
    completion: str
    anchor: str
    values: Mapping[str, str] = field(default_factory=dict)
    params: Mapping[str, str] = field(default_factory=dict)

    @property
    def completed(self) -> bool:
        return self.completion == COMPLETED


def _resolve(items, label: str, aliases: Mapping[str, str], kind: str):
    target = aliases.get(label, label)
    for it in items:
        if it.name == target:
            return it
    for it in items:
        rom, ch = _split_label(it.name)
        if label in (rom, ch, it.char):
            return it
    for alias, canon in aliases.items():
        if label in _split_label(alias):
            return _resolve(items, canon, {}, kind)
    raise CategoryError(f"unknown {kind} category {label!r}")


@dataclass(frozen=True)
class Inventory:
    """Shengmu and yunmu categories at one stage. Unpacks as ``(shengmu, yunmu)``."""

    shengmu: tuple[ShengmuCategory, ...]
    yunmu: tuple[YunmuCategory, ...]
    pseudo: tuple[ShengmuCategory, ...] = ()
    aliases: Mapping[str, str] = field(default_factory=dict)
    stage: str = "baseline"
    apply_in_progress: bool = False

    def __iter__(self) -> Iterator:
        return iter((list(self.shengmu), list(self.yunmu)))

    def get_shengmu(self, label: str) -> ShengmuCategory:
        return _resolve(self.shengmu + self.pseudo, label, self.aliases, "shengmu")

    def get_yunmu(self, label: str) -> YunmuCategory:
        return _resolve(self.yunmu, label, {}, "yunmu")

    def canonical_shengmu(self, label: str) -> str:
        return self.get_shengmu(label).name


# --- loading ---------------------------------------------------------------

def _seg(path, text: str) -> Segment:
    try:
        segs = parse_ipa(text)
    except ParseError as exc:
        raise DataError(path, f"bad IPA value {text!r}: {exc}") from None
    if len(segs) != 1:
        raise DataError(path, f"expected one segment, got {text!r}")
    return segs[0]


def _initial_value(path, text: str) -> Segment | ZeroInitial:
    if text == "0":
        return ZERO
    seg = _seg(path, text)
    if not seg.is_consonant:
        raise DataError(path, f"initial value {text!r} is not a consonant")
    return seg


def _pseudo_value(path, text: str):
    # erhua is the two-segment rime [ər]
    try:
        segs = parse_ipa(text)
    except ParseError as exc:
        raise DataError(path, f"bad IPA value {text!r}: {exc}") from None
    return segs[0] if len(segs) == 1 else segs


def _read_json(path: Path):
    if not path.exists():
        raise DataError(path, "file not found")
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(path, exc.msg, exc.lineno) from None


def _glides(path, text: str) -> tuple[Segment, ...]:
    if not text:
        return ()
    segs = parse_ipa(text)
    if any(s.manner != "approximant" for s in segs):
        raise DataError(path, f"medial {text!r} is not a glide sequence")
    return segs


def load_inventory(shengmu_path: Path, yunmu_path: Path) -> Inventory:
    sdata = _read_json(shengmu_path)
    ydata = _read_json(yunmu_path)
    try:
        shengmu = tuple(
            ShengmuCategory(
                name=r["name"], char=r["char"],
                baseline_value=_initial_value(shengmu_path, r["value"]),
                anchor=r.get("anchor", ""),
            )
            for r in sdata["shengmu"]
        )
        pseudo = tuple(
            ShengmuCategory(
                name=r["name"], char=r["char"], pseudo=True,
                baseline_value=_pseudo_value(shengmu_path, r["value"]),
                anchor=r.get("anchor", ""),
            )
            for r in sdata.get("pseudo", [])
        )
        aliases = dict(sdata.get("aliases", {}))
    except (KeyError, TypeError) as exc:
        raise DataError(shengmu_path, f"malformed record: {exc}") from None
    yunmu = []
    try:
        for r in ydata["yunmu"]:
            variants = {}
            for ap, v in r["variants"].items():
                if ap not in APERTURES:
                    raise DataError(yunmu_path, f"{r['name']}: unknown aperture {ap!r}")
                nucleus = _seg(yunmu_path, v["nucleus"])
                if not nucleus.is_vowel:
                    raise DataError(yunmu_path, f"{r['name']} {ap}: nucleus is not a vowel")
                coda = _seg(yunmu_path, v["coda"]) if v["coda"] else None
                if coda is not None and coda.is_vowel:
                    raise DataError(yunmu_path, f"{r['name']} {ap}: coda is a vowel")
                variants[ap] = RimeVariant(
                    aperture=ap, printed=v["phonetic"], phonemic=v["phonemic"],
                    medial=_glides(yunmu_path, v["medial"]), nucleus=nucleus, coda=coda,
                    mt_label=v["mt_label"],
                )
            yunmu.append(YunmuCategory(
                rime_name=r["name"], char=r["char"], anchor=r.get("anchor", ""),
                variants=MappingProxyType(variants),
            ))
    except (KeyError, TypeError) as exc:
        raise DataError(yunmu_path, f"malformed record: {exc}") from None
    for alias, canon in aliases.items():
        if canon not in {s.name for s in shengmu}:
            raise DataError(shengmu_path, f"alias {alias!r} points at unknown {canon!r}")
    return Inventory(shengmu=shengmu, yunmu=tuple(yunmu), pseudo=pseudo,
                     aliases=MappingProxyType(aliases))


def dump_inventory(inv: Inventory) -> tuple[dict, dict]:
    """Serialize the baseline layer in the shipped file format."""
    def val(v):
        if v is ZERO:
            return "0"
        return "".join(render(x) for x in v) if isinstance(v, tuple) else render(v)

    sdata = {
        "shengmu": [{"char": s.char, "name": s.name, "value": val(s.baseline_value),
                     "anchor": s.anchor} for s in inv.shengmu],
        "aliases": dict(inv.aliases),
        "pseudo": [{"char": s.char, "name": s.name, "value": val(s.baseline_value),
                    "anchor": s.anchor} for s in inv.pseudo],
    }
    ydata = {"yunmu": []}
    for y in inv.yunmu:
        ydata["yunmu"].append({
            "name": y.rime_name, "char": y.char, "anchor": y.anchor,
            "variants": {
                ap: {"phonetic": v.printed, "phonemic": v.phonemic,
                     "medial": "".join(render(m) for m in v.medial),
                     "nucleus": render(v.nucleus),
                     "coda": render(v.coda) if v.coda is not None else "",
                     "mt_label": v.mt_label}
                for ap, v in y.variants.items()
            },
        })
    return sdata, ydata


def load_rules(path: Path) -> tuple[DiachronicRule, ...]:
    data = _read_json(path)
    rules = []
    try:
        for domain in ("shengmu", "yunmu"):
            for r in data.get(domain, []):
                if r["completion"] not in (COMPLETED, IN_PROGRESS):
                    raise DataError(path, f"rule {r['id']}: bad completion {r['completion']!r}")
                params = {k: v for k, v in r.items()
                          if k not in ("id", "targets", "effect", "completion", "anchor", "values")}
                rules.append(DiachronicRule(
                    id=r["id"], domain=domain, targets=tuple(r["targets"]), effect=r["effect"],
                    completion=r["completion"], anchor=r["anchor"],
                    values=MappingProxyType(dict(r.get("values", {}))),
                    params=MappingProxyType(params),
                ))
    except (KeyError, TypeError) as exc:
        raise DataError(path, f"malformed rule: {exc}") from None
    return tuple(rules)


@lru_cache(maxsize=8)
def _baseline_for(root: str) -> Inventory:
    base = Path(root)
    return load_inventory(base / "shengmu.json", base / "yunmu.json")


@lru_cache(maxsize=8)
def _rules_for(root: str) -> tuple[DiachronicRule, ...]:
    return load_rules(Path(root) / "changes.json")


def baseline_inventory() -> Inventory:
    return _baseline_for(str(data_dir()))


def shipped_rules() -> tuple[DiachronicRule, ...]:
    return _rules_for(str(data_dir()))


# --- diachronic changes ----------------------------------------------------

def _reset(inv: Inventory) -> Inventory:
    """Strip any stage overlay so rules always start from the baseline."""
    sheng = tuple(replace(s, adjusted_value=None, status="stable", fired=(),
                          merged_into=None, conditioned=()) for s in inv.shengmu)
    yun = tuple(replace(y, adjusted_variants=None, fired=(), notes=()) for y in inv.yunmu)
    return replace(inv, shengmu=sheng, yunmu=yun, stage="baseline", apply_in_progress=False)


def _shengmu_rule(rule: DiachronicRule, cat: ShengmuCategory, inv: Inventory) -> ShengmuCategory:
    fired = cat.fired + (rule.id,)
    status = "in-progress" if not rule.completed else None
    if rule.effect == "zero":
        return replace(cat, adjusted_value=ZERO, status=status or "lost", fired=fired)
    if rule.effect == "merge":
        into = rule.params.get("merge_into")
        if into is None:
            raise ConfigurationError(f"rule {rule.id}: merge without a target")
        try:
            inv.get_shengmu(into)
        except CategoryError:
            raise ConfigurationError(f"rule {rule.id}: unknown merge target {into!r}") from None
        raw = rule.values.get(cat.name)
        value = ZERO if raw in (None, "0") else parse_ipa(raw)[0]
        return replace(cat, adjusted_value=value, status="merged", merged_into=into, fired=fired)
    if rule.effect == "value":
        value = parse_ipa(rule.values[cat.name])[0]
        return replace(cat, adjusted_value=value, status=status or "merged", fired=fired)
    if rule.effect == "conditioned":
        value = parse_ipa(rule.values[cat.name])[0]
        cond = (rule.id, rule.params.get("condition", ""), value)
        return replace(cat, status="in-progress", conditioned=cat.conditioned + (cond,), fired=fired)
    raise ConfigurationError(f"rule {rule.id}: unknown effect {rule.effect!r}")


def _yunmu_rule(rule: DiachronicRule, cat: YunmuCategory) -> YunmuCategory:
    fired = cat.fired + (rule.id,)
    current = dict(cat.adjusted_variants if cat.adjusted_variants is not None else cat.variants)
    if rule.effect == "coda":
        old, new = parse_ipa(rule.params["from"])[0], parse_ipa(rule.params["to"])[0]
        for ap, v in current.items():
            if v.coda == old:
                phonemic = v.phonemic.replace(render(old) + "/", render(new) + "/")
                current[ap] = replace(v, coda=new, phonemic=phonemic)
    elif rule.effect == "nucleus":
        new = parse_ipa(rule.params["to"])[0]
        for ap, v in current.items():
            current[ap] = replace(v, nucleus=new)
    elif rule.effect == "merge":
        others = [t for t in rule.targets if t != cat.rime_name]
        note = f"{rule.id}: merging with {', '.join(others)}"
        return replace(cat, fired=fired, notes=cat.notes + (note,),
                       adjusted_variants=MappingProxyType(current))
    elif rule.effect == "conditioned":
        note = f"{rule.id}: {rule.params.get('condition', '')}"
        return replace(cat, fired=fired, notes=cat.notes + (note,),
                       adjusted_variants=MappingProxyType(current))
    else:
        raise ConfigurationError(f"rule {rule.id}: unknown effect {rule.effect!r}")
    return replace(cat, fired=fired, adjusted_variants=MappingProxyType(current))


def apply_changes(inventory: Inventory | None = None, apply_in_progress: bool = False,
                  rules: tuple[DiachronicRule, ...] | None = None) -> Inventory:
    """Produce the late-Ming stage.

    Always recomputes from the baseline layer, so applying twice is the same
    as applying once.
    """
    inv = _reset(inventory if inventory is not None else baseline_inventory())
    rules = shipped_rules() if rules is None else rules
    sheng = {s.name: s for s in inv.shengmu}
    yun = {y.rime_name: y for y in inv.yunmu}
    for rule in rules:
        if rule.domain == "shengmu":
            names = []
            for t in rule.targets:
                try:
                    names.append(inv.canonical_shengmu(t))
                except CategoryError:
                    raise ConfigurationError(f"rule {rule.id}: unknown category {t!r}") from None
        else:
            names = []
            for t in rule.targets:
                try:
                    names.append(inv.get_yunmu(t).rime_name)
                except CategoryError:
                    raise ConfigurationError(f"rule {rule.id}: unknown category {t!r}") from None
        if not rule.completed and not apply_in_progress:
            continue
        for n in names:
            if rule.domain == "shengmu":
                sheng[n] = _shengmu_rule(rule, sheng[n], inv)
            else:
                yun[n] = _yunmu_rule(rule, yun[n])
    sheng_out = tuple(
        s if s.adjusted_value is not None else replace(s, adjusted_value=s.baseline_value)
        for s in sheng.values()
    )
    yun_out = tuple(
        y if y.adjusted_variants is not None else replace(y, adjusted_variants=y.variants)
        for y in yun.values()
    )
    return replace(inv, shengmu=sheng_out, yunmu=yun_out, stage="late-ming",
                   apply_in_progress=apply_in_progress)


@lru_cache(maxsize=16)
def _stage_for(root: str, stage: str, apply_in_progress: bool) -> Inventory:
    base = _baseline_for(root)
    if stage == "baseline":
        return base
    return apply_changes(base, apply_in_progress, _rules_for(root))


def inventory_at(stage: str = "baseline", apply_in_progress: bool = False) -> Inventory:
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}")
    return _stage_for(str(data_dir()), stage, apply_in_progress)


def category_value(category, stage: str = "baseline", apply_in_progress: bool = False,
                   aperture: str | None = None):
    """Phonetic value of a category at ``stage``.

    ``category`` is a shengmu label, a rime label (then ``aperture`` is
    required), a ``(rime, aperture)`` pair, or a category object. Shengmu give a
    Segment or ZERO; rimes give a tuple of Segments.
    """
    inv = inventory_at(stage, apply_in_progress)
    if isinstance(category, tuple):
        category, aperture = category
    if isinstance(category, (ShengmuCategory, YunmuCategory)):
        category = category.name
    if aperture is None:
        return inv.get_shengmu(category).value(stage)
    var = inv.get_yunmu(category).variant(aperture, stage)
    if var is None:
        raise CategoryError(f"{category} has no {aperture} variant")
    return var.phonetic


# --- characters -------------------------------------------------------------

@dataclass(frozen=True)
class CharacterEntry:
    character: str
    shengmu: ShengmuCategory
    yunmu: YunmuCategory | None
    aperture: str | None
    provenance: str
    source_note: str = ""

    @property
    def rime(self) -> RimeVariant | None:
        if self.yunmu is None or self.aperture is None:
            return None
        return self.yunmu.variant(self.aperture)


def base_character(char: str) -> str:
    """``[X]`` marks a bracketed substitute; it resolves like ``X``."""
    if len(char) >= 3 and char[0] == "[" and char[-1] == "]":
        return char[1:-1]
    return char


class CharacterTable:
    def __init__(self, entries: Mapping[str, CharacterEntry] | None = None):
        self._entries: dict[str, CharacterEntry] = dict(entries or {})

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.values())

    def __contains__(self, char: str) -> bool:
        return base_character(char) in self._entries

    def lookup(self, char: str) -> CharacterEntry:
        try:
            return self._entries[base_character(char)]
        except KeyError:
            raise UnknownCharacterError(char) from None

    def extended(self, path: Path, inventory: Inventory | None = None) -> "CharacterTable":
        """A new table with a user-supplied file layered on; duplicates are errors."""
        extra = _read_character_file(Path(path), inventory or baseline_inventory(), "user-supplied")
        clash = sorted(set(extra) & set(self._entries))
        if clash:
            raise DataError(path, f"characters already defined: {' '.join(clash)}")
        merged = dict(self._entries)
        merged.update(extra)
        return CharacterTable(merged)


def _read_character_file(path: Path, inv: Inventory, force: str | None) -> dict[str, CharacterEntry]:
    out: dict[str, CharacterEntry] = {}
    for lineno, f in read_tsv(path, 4):
        char, sheng_label, yun_label, prov = f[0], f[1], f[2], f[3]
        note = f[4] if len(f) > 4 else ""
        if len(char) != 1:
            raise DataError(path, f"expected one character, got {char!r}", lineno)
        if char in out:
            raise DataError(path, f"duplicate character {char}", lineno)
        if prov not in PROVENANCES:
            raise DataError(path, f"unknown provenance {prov!r}", lineno)
        if force is not None:
            prov = force
        try:
            sheng = inv.get_shengmu(sheng_label)
        except CategoryError as exc:
            raise DataError(path, str(exc), lineno) from None
        yun = ap = None
        if yun_label != "-":
            rime_label, _, ap = yun_label.rpartition(" ")
            try:
                yun = inv.get_yunmu(rime_label)
            except CategoryError as exc:
                raise DataError(path, str(exc), lineno) from None
            if yun.variant(ap) is None:
                raise DataError(path, f"{yun.rime_name} has no {ap} variant", lineno)
        out[char] = CharacterEntry(char, sheng, yun, ap, prov, note)
    return out


@lru_cache(maxsize=8)
def _table_for(root: str) -> CharacterTable:
    inv = _baseline_for(root)
    return CharacterTable(_read_character_file(Path(root) / "characters.tsv", inv, None))


def character_table() -> CharacterTable:
    return _table_for(str(data_dir()))


def lookup_character(char: str, table: CharacterTable | None = None) -> CharacterEntry:
    return (table or character_table()).lookup(char)
