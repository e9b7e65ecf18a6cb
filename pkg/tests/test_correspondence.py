import json

import pytest
from hypothesis import given, settings, strategies as st

from hhy import correspondence as c
from hhy.corpus import parse_row
from hhy.segments import parse_ipa
from hhy.structure import NoNucleusError
from oracles import brute_force_alignment


def seg(text):
    return parse_ipa(text)[0]


def row(*fields):
    return parse_row("\t".join(fields))


K1 = row("KO", "K-1", "天", "哈 嫩 二", "hanal", "ipa-passthrough", "0:0-1 1:2-3 2:4-4", "hanal:0-2")
K13 = row("KO", "K-13", "天", "哈 嫩 大", "hanalta", "ipa-passthrough", "0:0-1 1:2-3 2:5-6", "hanal:0-1 -ta:2-2")


# --- candidate sets ------------------------------------------------------------

@pytest.mark.parametrize("text, expected", [
    ("kʰ", ["xi 溪"]),
    ("m", ["ming 明"]),
    ("ʒ", ["ri 日"]),
])
def test_mt_shengmu_candidates(text, expected):
    assert c.mt_shengmu_candidates(seg(text)) == expected


def test_zero_initial():
    assert c.mt_shengmu_candidates(None) == [c.ZERO_CATEGORY]


@pytest.mark.parametrize("nucleus, expected", [
    ("i", ["/jə/", "/jĩ/"]),
    ("o", ["/wo/"]),
    ("ə", ["/ə/"]),
])
def test_mt_yunmu_candidates(nucleus, expected):
    assert c.mt_yunmu_candidates(seg(nucleus)) == expected


def test_yunmu_section_extension_is_limited():
    assert c.mt_yunmu_candidates(seg("o")) == ["/wo/"]
    matches = dict(c.mt_yunmu_matches(seg("o"), section="JA"))
    assert matches["/wo/"] == c.ACCEPTED
    assert matches.get("/ə/") == c.LIMITED


def test_st_candidates_for_s():
    cands = c.st_character_candidates(seg("s"))
    assert [x.character for x in cands] == ["思", "習", "糸", "速"]
    assert "西" not in [x.character for x in cands]


@pytest.mark.parametrize("text, primary, secondary", [
    ("r", ["兒", "二"], ["勒", "力", "里", "刺"]),
    ("l", ["勒", "力", "里", "刺"], ["兒", "二"]),
])
def test_liquid_rank_order(text, primary, secondary):
    cands = c.st_character_candidates(seg(text))
    assert [x.character for x in cands if x.rank == c.PRIMARY] == primary
    assert [x.character for x in cands if x.rank == c.SECONDARY] == secondary
    assert [x.character for x in cands] == primary + secondary


def test_st_categories_top_family():
    assert c.st_categories(seg("l"))[0] == "lai 來"
    assert c.st_categories(seg("r"))[0].startswith("erhua")


@pytest.mark.parametrize("text, section, banned", [
    ("z", "TB", "xin 心"),
    ("ʑ", "TB", "xin 心"),
    ("dʒ", "CM", "chuan 穿"),
    ("q", "UY", "jian 見"),
    ("s", "CM", "shen 審"),
])
def test_excluded_rules_never_used(text, section, banned):
    assert banned not in c.mt_shengmu_candidates(seg(text), section)


def test_excluded_rules_are_loaded():
    excluded = [r for r in c.shipped_rules().all_rules() if r.confidence == c.EXCLUDED]
    assert excluded and not any(r.usable for r in excluded)


def test_q_is_limited_to_uyghur_and_persian():
    assert "xi 溪" in c.mt_shengmu_candidates(seg("q"), "UY")
    limited = {m[0]: m[2] for m in c.mt_shengmu_matches(seg("q"), "UY")}
    assert limited["xi 溪"] == c.LIMITED


def test_persian_affricate_order():
    slot = c.predict("čap", "FA").parses[0].slots[0]
    assert list(slot.shengmu) == ["chuan 穿", "zhao 照", "jing 精"]


def test_stage_threading():
    w = seg("w")
    assert "wei 微" not in c.mt_shengmu_candidates(w, options=c.EngineOptions())
    late = c.EngineOptions(stage="late-ming", apply_in_progress=True)
    assert "wei 微" in c.mt_shengmu_candidates(w, options=late)


# --- prediction ---------------------------------------------------------------

def test_predict_plain_vowel():
    p = c.predict("a")
    assert [s.items for s in p.ranked()] == [("yun 云 + /a/",)]


def test_predict_persian_chap():
    p = c.predict("čap", "FA")
    lists = p.parses[0].choice_lists()
    assert "chuan 穿 + /a/" in lists[0]
    assert "卜" in lists[1]
    assert p.ranked(1)[0].items == ("chuan 穿 + /a/", "卜")


def test_predict_tibetan_prin():
    p = c.predict("prin", "TB")
    lists = p.parses[0].choice_lists()
    assert "卜" in lists[0]
    assert any(x.startswith("lai 來 + /jə/") or x.startswith("lai 來 + /jĩ/") for x in lists[1])


def test_predict_deterministic():
    a = json.dumps(c.predict("yupqana", "UY").to_dict(), ensure_ascii=False)
    b = json.dumps(c.predict("yupqana", "UY").to_dict(), ensure_ascii=False)
    assert a == b


def test_predict_no_nucleus():
    with pytest.raises(NoNucleusError):
        c.predict("pst")


# --- alignment ----------------------------------------------------------------

@pytest.mark.parametrize("fields, spans", [
    (("UY", "U-34", "雲起", "課 克 科 卜", "kök qop", "uyghur"), "0:0-1 1:2-2 2:3-4 3:5-5"),
    (("TB", "T-6", "雲", "卜 吝", "prin", "ipa-passthrough"), "0:0-0 1:1-3"),
    (("FA", "P-1622", "左", "徹 卜", "čap", "persian"), "0:0-1 1:2-2"),
    (("KO", "K-1", "天", "哈 嫩 二", "hanal", "ipa-passthrough"), "0:0-1 1:2-3 2:4-4"),
    (("KO", "K-13", "天", "哈 嫩 大", "hanalta", "ipa-passthrough"), "0:0-1 1:2-3 2:5-6"),
])
def test_alignment_of_worked_entries(fields, spans):
    al = c.align_entry(row(*fields))
    assert " ".join(str(s) for s in al.spans) == spans


def test_alignment_roles():
    al = c.align_entry(row("TB", "T-6", "雲", "卜 吝", "prin", "ipa-passthrough"))
    assert al.roles == ("ST", "MT")


def test_alignment_impossible_cover():
    e = row("KO", "X-2", "-", "哈 哈", "a", "ipa-passthrough")
    with pytest.raises(c.AlignmentError) as info:
        c.align_entry(e)
    assert info.value.ordinal is not None


def test_alignment_unknown_character():
    e = row("KO", "X-3", "-", "鿿", "a", "ipa-passthrough")
    with pytest.raises(c.AlignmentError):
        c.align_entry(e)


_WORDS = ["hanal", "prin", "køkqop", "tal", "baɣʃi", "kaz", "ana", "sarat"]
_CHARS = "哈嫩二卜吝課克科大得格自把黑失思刺"


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(_WORDS), st.lists(st.sampled_from(_CHARS), min_size=1, max_size=4))
def test_alignment_matches_brute_force(word, chars):
    e = row("KO", "X-9", "-", " ".join(chars), word, "ipa-passthrough")
    expected = brute_force_alignment(e, "KO", c.DEFAULT_OPTIONS)
    if expected is None:
        with pytest.raises(c.AlignmentError):
            c.align_entry(e)
        return
    al = c.align_entry(e)
    assert al.cost == expected[0]
    assert tuple((s.ordinal, s.start, s.end) for s in al.spans) == expected[1]


# --- validation ---------------------------------------------------------------

def test_validate_k1_conformant():
    report = c.validate(K1)
    assert report.conformant
    assert "missing-st" not in report.codes()


def test_validate_k13_permitted_omission():
    report = c.validate(K13, witnesses=[K1, K13])
    assert report.conformant
    assert "permitted-st-omission" in report.codes()
    assert "missing-st" not in report.codes()


def test_validate_missing_st():
    e = row("KO", "X-1", "-", "得", "tal", "ipa-passthrough")
    report = c.validate(e)
    assert not report.conformant
    assert "missing-st" in report.codes()


def test_validate_is_monotone():
    alone = c.validate(K13)
    with_witness = c.validate(K13, witnesses=[K1])
    assert "missing-st" in alone.codes()
    assert "permitted-st-omission" in with_witness.codes()
    worst = {c.ERROR: 2, c.WARNING: 1, c.INFO: 0}
    assert max(worst[f.severity] for f in with_witness.findings) <= max(worst[f.severity] for f in alone.findings)


def test_validate_witness_must_share_section():
    other = row("UY", "K-1", "天", "哈 嫩 二", "hanal", "ipa-passthrough", "0:0-1 1:2-3 2:4-4")
    assert "missing-st" in c.validate(K13, witnesses=[other]).codes()


def test_validate_role_mismatch():
    e = row("TB", "X-4", "-", "卜 吝", "prin", "ipa-passthrough", "0:0-1 1:2-3")
    codes = c.validate(e).codes()
    assert any(code in codes for code in ("role-mismatch", "onset-cluster-in-mt"))


def test_validate_secondary_is_info():
    e = row("UY", "U-34", "雲起", "課 克 科 卜", "kök qop", "uyghur")
    report = c.validate(e)
    assert report.conformant
    sec = [f for f in report.findings if f.code == "secondary-correspondence"]
    assert sec and all(f.severity == c.INFO for f in sec)


def test_report_serialization_is_stable():
    a = c.validate(K13, witnesses=[K1])
    b = c.validate(K13, witnesses=[K1])
    assert json.dumps(a.to_dict(), ensure_ascii=False) == json.dumps(b.to_dict(), ensure_ascii=False)
    assert a.to_text() == b.to_text()


# --- consistency --------------------------------------------------------------

def test_consistency_single_entry():
    assert c.consistency_check([K1]) == []


def test_consistency_st_variation_is_info():
    findings = c.consistency_check([K1, K13])
    assert [f.code for f in findings] == ["st-variation"]
    assert findings[0].severity == c.INFO


def test_consistency_inconsistent_mt():
    odd = row("KO", "K-99", "天", "哈 論 二", "hanal", "ipa-passthrough", "0:0-1 1:2-3 2:4-4", "hanal:0-2")
    codes = [f.code for f in c.consistency_check([K1, odd])]
    assert codes == ["inconsistent-morpheme"]


def test_consistency_skips_unannotated():
    bare = row("KO", "K-98", "天", "哈 嫩", "hanal", "ipa-passthrough")
    assert c.consistency_check([K1, bare]) == []
