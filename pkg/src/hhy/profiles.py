"""Per-section metadata: default romanization, final-stop release, reliability."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from ._data import DataError, data_dir
from .segments import CONVENTIONS, RELEASED, UNKNOWN, UNRELEASED

SECTIONS = ("KO", "JA", "MN", "TB", "UY", "FA", "MS", "CM", "VN")
RELIABILITY_MARKS = ("○", "△", "×")
POSITIONS = ("onset", "nucleus", "coda")


@dataclass(frozen=True)
class SectionProfile:
    code: str
    name: str
    convention: str
    final_release: str
    reliability: Mapping[str, str] = field(default_factory=dict)
    counts_verifiable: bool = True
    note: str = ""

    def reliability_at(self, position: str) -> str:
        return self.reliability.get(position, "△")


@lru_cache(maxsize=8)
def _profiles_for(root: str) -> Mapping[str, SectionProfile]:
    path = Path(root) / "profiles.json"
    if not path.exists():
        raise DataError(path, "file not found")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        out = {}
        for r in data["sections"]:
            if r["code"] not in SECTIONS:
                raise DataError(path, f"unknown section code {r['code']!r}")
            if r["convention"] not in CONVENTIONS:
                raise DataError(path, f"{r['code']}: unknown convention {r['convention']!r}")
            if r["final_release"] not in (RELEASED, UNRELEASED, UNKNOWN):
                raise DataError(path, f"{r['code']}: bad final_release {r['final_release']!r}")
            rel = dict(r.get("reliability", {}))
            if set(rel) - set(POSITIONS) or set(rel.values()) - set(RELIABILITY_MARKS):
                raise DataError(path, f"{r['code']}: bad reliability flags")
            out[r["code"]] = SectionProfile(
                code=r["code"], name=r["name"], convention=r["convention"],
                final_release=r["final_release"], reliability=MappingProxyType(rel),
                counts_verifiable=r.get("counts", "verified") == "verified",
                note=r.get("note", ""),
            )
    except json.JSONDecodeError as exc:
        raise DataError(path, exc.msg, exc.lineno) from None
    except (KeyError, TypeError) as exc:
        raise DataError(path, f"malformed profile: {exc}") from None
    return MappingProxyType(out)


def section_profiles() -> Mapping[str, SectionProfile]:
    return _profiles_for(str(data_dir()))


def get_profile(code: str | SectionProfile | None) -> SectionProfile | None:
    if code is None or isinstance(code, SectionProfile):
        return code
    try:
        return section_profiles()[code.upper()]
    except KeyError:
        raise KeyError(f"unknown section {code!r}; expected one of {', '.join(SECTIONS)}") from None
