import pytest
from hypothesis import given, strategies as st

from hhy._data import DataError
from hhy.segments import (
    ConversionError, ParseError, RELEASED, UNKNOWN, UNRELEASED, convert_romanization,
    feature_chart, features_match, load_convention_file, parse_ipa, render,
    shipped_convention, underspecify, CONVENTIONS,
)


def syms(segs):
    return [s.symbol for s in segs]


def test_prin():
    p, r, i, n = parse_ipa("prin")
    assert (p.place, p.manner, p.voiced) == ("bilabial", "stop", False)
    assert (r.place, r.manner) == ("alveolar", "trill")
    assert (i.height, i.backness) == ("high", "front")
    assert (n.place, n.manner) == ("alveolar", "nasal")


def test_aspirated_and_unreleased():
    th, a = parse_ipa("tʰa")
    assert th.aspirated and not th.voiced and a.height == "low"
    (t,) = parse_ipa("t̚")
    assert t.released == UNRELEASED
    assert parse_ipa("t")[0].released == UNKNOWN


def test_affricate_is_one_segment():
    assert syms(parse_ipa("tʃap")) == ["tʃ", "a", "p"]
    assert syms(parse_ipa("ʧap")) == ["tʃ", "a", "p"]
    assert syms(parse_ipa("t͡ʃa")) == ["tʃ", "a"]


def test_length_and_aliases():
    (a,) = parse_ipa("a:")
    assert a.long and a.symbol == "aː"
    (v,) = parse_ipa("ḁ")
    assert v.is_vowel and not v.voiced
    (n,) = parse_ipa("ĩ")
    assert n.nasalized


@pytest.mark.parametrize("text, offset", [("Xa", 0), ("aQ", 1), ("ʰa", 0), ("a̚", 1), ("s̚", 1)])
def test_parse_errors(text, offset):
    with pytest.raises(ParseError) as err:
        parse_ipa(text)
    if offset is not None:
        assert err.value.byte_offset == offset


def test_error_offset_is_in_bytes():
    with pytest.raises(ParseError) as err:
        parse_ipa("ŋaQ")
    assert err.value.byte_offset == len("ŋa".encode())


def test_whitespace_rejected():
    with pytest.raises(ParseError):
        parse_ipa("ka pa")


_MARKS = ["", "ʰ", "̚", "̥", "̃", "ː", "ʰ̚", "̥ː", "̃ː", "ʰː"]


@given(st.sampled_from(sorted(feature_chart())), st.sampled_from(_MARKS))
def test_render_parse_identity(base, marks):
    try:
        segs = parse_ipa(base + marks)
    except ParseError:
        return
    for seg in segs:
        assert parse_ipa(render(seg)) == (seg,)


@given(st.text(alphabet="ptkbdgaiuəsʃnŋlrjwʰː", min_size=1, max_size=8))
def test_passthrough_equals_parse(word):
    try:
        expected = parse_ipa(word)
    except ParseError:
        with pytest.raises(ParseError):
            convert_romanization(word, "ipa-passthrough")
        return
    assert convert_romanization(word, "ipa-passthrough") == expected


def test_uyghur_kok():
    assert syms(convert_romanization("kök", "uyghur")) == ["k", "ø", "k"]


def test_malay_schwa():
    assert syms(convert_romanization("ě", "malay")) == ["ə"]


def test_uyghur_ra_underspecified():
    r, a = convert_romanization("ra", "uyghur")
    assert "voiced" in r.underspecified
    assert "voiced" in a.underspecified
    (vl_a,) = parse_ipa("ḁ")
    assert features_match(a, vl_a) and features_match(a, parse_ipa("a")[0])


def test_c_caron_flagged_not_resolved():
    (tsh, a, p) = convert_romanization("čap", "persian")
    assert tsh.manner == "affricate" and "place" in tsh.underspecified
    flagged = {r.source for r in shipped_convention("persian").flagged}
    assert {"č", "ǰ"} <= flagged


def test_cham_digraphs():
    assert syms(convert_romanization("kai", "cham")) == ["k", "ɛ"]
    assert syms(convert_romanization("lau", "cham")) == ["l", "ɔ"]


def test_length_mark_row():
    (a,) = convert_romanization("a-", "malay")
    assert a.long


def test_unmapped_symbol_is_error():
    with pytest.raises(ConversionError) as err:
        convert_romanization("kQk", "uyghur")
    assert err.value.symbol == "Q"


def test_all_conventions_load():
    for name in CONVENTIONS:
        conv = shipped_convention(name)
        for row in conv.mapping:
            assert isinstance(row.target, str)


def test_user_convention(tmp_path):
    p = tmp_path / "mine.tsv"
    p.write_text("# source\tipa\tnote\nsh\tʃ\t\na\ta\t\n", encoding="utf-8")
    conv = load_convention_file(p)
    assert syms(convert_romanization("sha", conv)) == ["ʃ", "a"]
    bad = tmp_path / "bad.tsv"
    bad.write_text("x\tQQ\t\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_convention_file(bad)


def test_features_match_basics():
    p, b = parse_ipa("pb")
    assert not features_match(p, b)
    a = parse_ipa("a")[0]
    assert features_match(a, a)


def test_features_match_not_transitive():
    r_open = underspecify(parse_ipa("r")[0], {"voiced"})
    r, r_vl = parse_ipa("r")[0], parse_ipa("r̥")[0]
    assert features_match(r, r_open) and features_match(r_open, r_vl)
    assert not features_match(r, r_vl)


def test_unknown_release_is_wildcard():
    t = parse_ipa("t")[0]
    assert features_match(t, t.with_release(UNRELEASED))
    assert not features_match(t.with_release(RELEASED), t.with_release(UNRELEASED))


@given(st.sampled_from(sorted(feature_chart())), st.sampled_from(sorted(feature_chart())))
def test_features_match_symmetric(x, y):
    a, b = parse_ipa(x)[0], parse_ipa(y)[0]
    assert features_match(a, a)
    assert features_match(a, b) == features_match(b, a)
