import importlib.util
import json
import random
from pathlib import Path

import pytest

from hhy import corpus as cp
from hhy.correspondence import DEFAULT_OPTIONS

ROOT = Path(__file__).resolve().parents[1]
SHIPPED = ROOT / "src" / "hhy" / "data" / "corpus" / "reference.tsv"

U34 = "UY\tU-34\t雲起\t課 克 科 卜\tkök qop\tuyghur"


@pytest.fixture(scope="module")
def reference():
    return cp.load_corpus(SHIPPED)


def write(tmp_path, *lines):
    p = tmp_path / "c.tsv"
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p


# --- loading ------------------------------------------------------------------

def test_load_example_row(tmp_path):
    (e,) = cp.load_corpus(write(tmp_path, U34))
    assert e.chars == "課克科卜"
    assert [c.tag for c in e.characters] == ["A", "B", "B", "C"]
    assert e.line == 1
    assert len(e.words) == 2


def test_bracketed_character(tmp_path):
    (e,) = cp.load_corpus(write(tmp_path, "KO\tK-5\t-\t哈 [嫩]\thana\tipa-passthrough"))
    assert [c.bracketed for c in e.characters] == [False, True]
    assert e.characters[1].char == "嫩"


def test_empty_file(tmp_path):
    p = tmp_path / "e.tsv"
    p.write_text("", encoding="utf-8")
    assert cp.load_corpus(p) == []


def test_comments_and_blank_lines(tmp_path):
    assert len(cp.load_corpus(write(tmp_path, cp.HEADER, "", U34))) == 1


@pytest.mark.parametrize("line, fragment", [
    ("XX\tX-1\t-\t哈\ta\tipa-passthrough", "unknown section"),
    ("KO\tX-1\t-\t哈/B\ta\tipa-passthrough", "position requires"),
    ("KO\tX-1\t-\t哈 嫩/A\tana\tipa-passthrough", "position requires"),
    ("KO\tX-1\t-\t哈\ta", "columns"),
    ("KO\tX-1\t-\t哈\ta\tklingon", "convention"),
    ("KO\tX-1\t-\t哈 嫩\tana\tipa-passthrough\t0:0-1 1:1-2", "overlap"),
    ("KO\tX-1\t-\t哈\ta\tipa-passthrough\t0:0-4", "outside"),
])
def test_load_errors_carry_line_numbers(tmp_path, line, fragment):
    p = write(tmp_path, U34, line)
    with pytest.raises(cp.CorpusError) as info:
        cp.load_corpus(p)
    assert info.value.line == 2
    assert fragment in str(info.value)


def test_explicit_tags_accepted(tmp_path):
    (e,) = cp.load_corpus(write(tmp_path, "UY\tU-34\t雲起\t課/A 克/B 科/B 卜/C\tkök qop\tuyghur"))
    assert [c.tag for c in e.characters] == ["A", "B", "B", "C"]


def test_missing_file(tmp_path):
    with pytest.raises(cp.CorpusError):
        cp.load_corpus(tmp_path / "nope.tsv")


def test_round_trip(tmp_path, reference):
    p = tmp_path / "out.tsv"
    cp.save_corpus(reference, p)
    assert p.read_text(encoding="utf-8") == SHIPPED.read_text(encoding="utf-8")
    again = cp.load_corpus(p)
    assert [cp.format_row(e) for e in again] == [cp.format_row(e) for e in reference]


def test_write_atomic_unwritable(tmp_path):
    with pytest.raises(cp.OutputError):
        cp.write_atomic(tmp_path / "missing" / "x.tsv", "x")


def _build_module():
    loader = importlib.util.spec_from_file_location("build_reference_corpus", ROOT / "tools" / "build_reference_corpus.py")
    mod = importlib.util.module_from_spec(loader)
    loader.loader.exec_module(mod)
    return mod


def test_shipped_corpus_is_generated():
    text = _build_module().build()
    assert SHIPPED.read_text(encoding="utf-8") == text
    examples = ROOT / "examples" / "paper.tsv"
    if examples.exists():
        assert examples.read_text(encoding="utf-8") == text


# --- alignment over the corpus -------------------------------------------------

def test_align_worked_entry(tmp_path):
    (e,) = cp.load_corpus(write(tmp_path, U34))
    assert " ".join(str(s) for s in cp.align(e)) == "0:0-1 1:2-2 2:3-4 3:5-5"


def test_alignment_coverage_invariant(reference):
    from hhy.correspondence import _units
    for ae in cp.align_corpus(reference[:400]):
        assert ae.alignment is not None, ae.error
        units = {u.start: u for u in _units(ae.entry, ae.entry.section, DEFAULT_OPTIONS)[0]}
        for span, role in zip(ae.alignment.spans, ae.alignment.roles):
            if role == "ST":
                assert span.start == span.end
                assert units[span.start].kind == "st"
            else:
                assert units[span.start].kind == "syl"


def test_align_corpus_order_independent_of_jobs(reference):
    sample = reference[:60]
    one = cp.align_corpus(sample, jobs=1)
    two = cp.align_corpus(sample, jobs=2)
    assert [a.alignment for a in one] == [a.alignment for a in two]


# --- frequency tables -----------------------------------------------------------

def test_frequency_arithmetic_small(tmp_path):
    corpus = cp.load_corpus(write(
        tmp_path,
        "KO\tX-1\t-\t哈\tha\tipa-passthrough",
        "KO\tX-2\t-\t哈\thə\tipa-passthrough",
        "KO\tX-3\t-\t哈 哈\ta\tipa-passthrough",
    ))
    t = cp.frequency_tables(corpus, cp.Axis("rime", "/a/"))
    assert t.cells == {"KO": {"a": 1, "ə": 1}}
    assert t.counts["KO"] == cp.SectionCount(raw=4, other_role=0, unresolved=2)
    assert t.totals == {"KO": 2}


def test_frequency_excludes_other_role(tmp_path):
    corpus = cp.load_corpus(write(tmp_path, "TB\tT-6\t雲\t卜 吝\tprin\tipa-passthrough"))
    t = cp.frequency_tables(corpus, cp.Axis("shengmu", "bang 幫"))
    assert t.counts["TB"].other_role == 1 and t.totals["TB"] == 0
    st = cp.frequency_tables(corpus, cp.Axis("shengmu", "bang 幫", role="ST"))
    assert st.cells == {"TB": {"p": 1}}


def test_frequency_empty_corpus():
    t = cp.frequency_tables([], cp.Axis("rime", "/ə/"))
    assert t.cells == {} and t.counts == {}


def test_frequency_totals_match_cells(reference):
    aligned = cp.align_corpus(reference)
    for label in ("/ə/", "/i/", "/a/"):
        t = cp.frequency_tables(aligned, cp.Axis("rime", label))
        for s, c in t.counts.items():
            assert sum(t.cells.get(s, {}).values()) == c.total
            assert c.total <= c.raw


def test_axis_validation():
    with pytest.raises(ValueError):
        cp.Axis("tone", "/a/")


def test_rime_body():
    from hhy.segments import parse_ipa
    assert cp.rime_body(parse_ipa("kan")) == "a"
    assert cp.rime_body(parse_ipa("tsɨ")) == "ɨ"
    assert cp.rime_body(parse_ipa("n")) == ""


# --- ST identification ------------------------------------------------------------

def occ(char, section, lexeme, category="bang 幫", position="coda"):
    return cp.StOccurrence(char, section, lexeme, category, position)


def test_decide_multi_section_established():
    reports = cp.decide([occ("卜", "UY", f"w{i}") for i in range(9)] + [occ("卜", "FA", "x")] * 3)
    (r,) = reports
    assert (r.decision, r.criterion) == (cp.ESTABLISHED, cp.MULTI_SECTION)
    assert r.counts == {"UY": 9, "FA": 3}


def test_decide_multi_section_low_count():
    (r,) = cp.decide([occ("補", "UY", "a"), occ("補", "FA", "b")])
    assert (r.decision, r.criterion) == (cp.RETAINED, cp.MULTI_SECTION)


def test_decide_threshold_is_a_parameter():
    occs = [occ("補", "UY", "a")] * 3 + [occ("補", "FA", "b")] * 2
    assert cp.decide(occs, threshold=4)[0].decision == cp.ESTABLISHED
    assert cp.decide(occs, threshold=5)[0].decision == cp.RETAINED


def test_decide_single_lexeme_rejected():
    (r,) = cp.decide([occ("西", "UY", "eski", "xin 心")] * 3)
    assert r.decision == cp.REJECTED and r.lexemes == 1


def test_decide_single_occurrence_undetermined():
    (r,) = cp.decide([occ("批", "UY", "x", "pang 滂")])
    assert r.decision == cp.UNDETERMINED


def test_decide_single_occurrence_low_reliability():
    (r,) = cp.decide([occ("批", "KO", "x", "pang 滂")])
    assert r.decision == cp.REJECTED


def test_decide_unverifiable_counts():
    (r,) = cp.decide([occ("不", "MN", "a"), occ("不", "MN", "b")])
    assert r.counts == {"MN": None}
    assert r.decision == cp.REJECTED


def test_decide_multi_lexeme():
    occs = [occ("卜", "UY", f"w{i}") for i in range(5)] + [occ("補", "UY", "a"), occ("補", "UY", "b")]
    got = {r.character: (r.decision, r.criterion) for r in cp.decide(occs)}
    assert got["卜"] == (cp.ESTABLISHED, cp.MULTI_LEXEME)
    assert got["補"] == (cp.RETAINED, cp.MULTI_LEXEME)


def test_decisions_invariant_under_row_order(reference):
    base = cp.identify_st_chars(reference)
    shuffled = list(reference)
    random.Random(7).shuffle(shuffled)
    assert cp.identify_st_chars(shuffled) == base


@pytest.mark.parametrize("char, decision", [
    ("革", cp.ESTABLISHED),
    ("西", cp.REJECTED),
    ("批", cp.UNDETERMINED),
])
def test_reference_corpus_examples(reference, char, decision):
    reports = {r.character: r for r in cp.identify_st_chars(reference)}
    assert reports[char].decision == decision


def test_report_invariants(reference):
    for r in cp.identify_st_chars(reference):
        if r.decision == cp.REJECTED:
            assert len(r.counts) == 1
        if r.decision == cp.UNDETERMINED:
            assert r.total == 1 and len(r.counts) == 1
        if r.criterion == cp.MULTI_SECTION:
            assert len(r.counts) >= 2


# --- export -------------------------------------------------------------------------

def test_export_byte_stable(reference):
    reports = cp.identify_st_chars(reference)
    for fmt in ("json", "table"):
        assert cp.export_report(reports, fmt) == cp.export_report(list(reports), fmt)


def test_export_json_is_valid(reference):
    data = json.loads(cp.export_report(cp.identify_st_chars(reference)))
    ge = next(d for d in data if d["character"] == "革")
    assert ge["counts"] == {"FA": 27, "UY": 1} and ge["total"] == 28


def test_export_empty_is_header_only():
    text = cp.export_report([], "table")
    assert text.count("\n") == 1
    assert text.startswith("category")
    assert cp.export_report([], "json") == "[]\n"


def test_export_frequency_grid(tmp_path):
    corpus = cp.load_corpus(write(tmp_path, "KO\tX-1\t-\t哈\tha\tipa-passthrough"))
    t = cp.frequency_tables(corpus, cp.Axis("rime", "/a/"))
    text = cp.export_report(t, "table")
    lines = text.splitlines()
    assert lines[0] == "/a/ (rime, MT)"
    assert lines[1].split() == ["section", "a", "total"]
    assert lines[2].split() == ["KO", "1", "1"]


def test_export_to_path(tmp_path):
    p = tmp_path / "r.json"
    text = cp.export_report([], "json", path=p)
    assert p.read_text(encoding="utf-8") == text


def test_export_unknown_format():
    with pytest.raises(ValueError):
        cp.export_report([], "xml")
