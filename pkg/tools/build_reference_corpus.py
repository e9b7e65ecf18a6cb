"""Regenerate the shipped reference corpus.

Worked entries are reproduced as printed. Every other row is synthetic
(index ``<SECTION>-s<n>``, gloss ``(synthetic)``) and exists only so the
target per-section counts come out of the analyses. Output is fully
deterministic; run ``python tools/build_reference_corpus.py`` after editing.
"""
from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
TARGETS = (ROOT / "src" / "hhy" / "data" / "corpus" / "reference.tsv", ROOT / "examples" / "paper.tsv")

HEADER = "# section\tindex\tgloss\tcharacters\treconstruction\tconvention\talignment\tmorphemes"
IPA = "ipa-passthrough"

# worked entries: (section, index, gloss, chars, reconstruction, convention, alignment, morphemes)
WORKED = [
    ("UY", "U-34", "雲起", "課 克 科 卜", "kök qop", "uyghur", "0:0-1 1:2-2 2:3-4 3:5-5", ""),
    ("UY", "U-703", "薄", "與 卜 哈 納", "yupqana", "uyghur", "0:0-1 1:2-2 2:3-4 3:5-6", ""),
    ("TB", "T-6", "雲", "卜 吝", "prin", IPA, "0:0-0 1:1-3", ""),
    ("FA", "P-1622", "左", "徹 卜", "čap", "persian", "0:0-1 1:2-2", ""),
    ("MN", "M-1", "師傅", "把 黑 失", "baɣʃi", IPA, "0:0-1 1:2-2 2:3-4", ""),
    ("MN", "M-1b", "三", "忽 兒 班", "ɣurban", IPA, "0:0-1 1:2-2 2:3-5", ""),
    ("KO", "K-1", "天", "哈 嫩 二", "hanal", IPA, "0:0-1 1:2-3 2:4-4", "hanal:0-2"),
    ("KO", "K-3", "月", "得 二", "tal", IPA, "0:0-1 1:2-2", "tal:0-1"),
    ("KO", "K-4", "星", "別 二", "pjəl", IPA, "0:0-2 1:3-3", "pjəl:0-1"),
    ("KO", "K-13", "天", "哈 嫩 大", "hanalta", IPA, "0:0-1 1:2-3 2:5-6", "hanal:0-1 -ta:2-2"),
    ("KO", "K-18", "邊", "格 自", "kaz", IPA, "0:0-1 1:2-2", ""),
    ("KO", "K-86", "邊", "格 自", "kaz", IPA, "0:0-1 1:2-2", ""),
]

# ST counts per character: (char, segment, {section: count}); None marks an
# unverifiable count, written as a single attestation.
ST_COUNTS = [
    # jian / xi / ying / xiao
    ("格", "g", {"CM": 1}),
    ("革", "g", {"FA": 27, "UY": 1}),
    ("吉", "g", {"FA": 1}),
    ("艮", "g", {"UY": 1}),
    ("故", "g", {"UY": 1}),
    ("果", "g", {"UY": 1}),
    ("克", "k", {"FA": 22, "UY": 42, "MN": None}),
    ("闊", "k", {"UY": 2}),
    ("乞", "k", {"UY": 1}),
    ("苦", "k", {"FA": 1, "UY": 3}),
    ("額", "ɣ", {"FA": 11}),
    ("兒", "ɣ", {"UY": 2}),
    ("黑", "x", {"UY": 18, "MN": None}),
    ("蛤", "x", {"MN": None}),
    ("詭", "h", {"FA": 49}),
    ("哈", "h", {"FA": 1}),
    ("吸", "x", {"FA": 1}),
    # bang / pang / fei
    ("卜", "p", {"FA": 32, "UY": 11, "TB": 20, "CM": 3}),
    ("不", "b", {"MN": None}),
    ("不", "β", {"KO": 6}),
    ("補", "b", {"UY": 9, "TB": 1}),
    ("白", "b", {"FA": 1, "TB": 3}),
    ("緝", "b", {"TB": 1}),
    ("別", "β", {"KO": 1}),
    ("批", "p", {"UY": 1}),
    ("夫", "f", {"UY": 3}),
    ("伏", "f", {"FA": 25}),
    # duan / tou
    ("的", "d", {"UY": 2}),
    ("的", "t", {"MS": 3, "CM": 2, "JA": 10}),
    ("得", "d", {"FA": 58}),
    ("都", "d", {"FA": 1}),
    ("答", "t", {"CM": 1}),
    ("忒", "t", {"FA": 26, "UY": 27}),
    ("剔", "t", {"FA": 14}),
    ("惕", "t", {"UY": 6}),
    ("禿", "t", {"UY": 1}),
    ("帖", "t", {"UY": 1}),
    # xin / shen
    ("思", "s", {"FA": 51, "UY": 36, "TB": 13, "MN": None, "MS": 14, "KO": 10}),
    ("習", "s", {"UY": 7, "MS": 1}),
    ("糸", "s", {"UY": 3}),
    ("西", "s", {"UY": 3}),
    ("速", "s", {"UY": 2}),
    ("桑", "s", {"FA": 1}),
    ("失", "ʃ", {"FA": 41, "UY": 70, "MN": None}),
    # chuan / zhao / ri / jing
    ("赤", "tʃ", {"UY": 9}),
    ("除", "tʃ", {"UY": 5}),
    ("出", "tʃ", {"UY": 2}),
    ("只", "tʃ", {"FA": 7}),
    ("褚", "tʃ", {"UY": 1}),
    ("日", "tʃ", {"FA": 1}),
    ("日", "ʒ", {"FA": 1}),
    ("子", "z", {"FA": 19, "UY": 58}),
    ("聚", "z", {"UY": 1}),
    ("則", "z", {"FA": 1}),
    # lai / erhua
    ("勒", "l", {"FA": 2, "UY": 16, "MN": None, "KO": 2}),
    ("力", "l", {"FA": 43, "UY": 14, "MS": 1}),
    ("里", "l", {"UY": 29, "MN": None}),
    ("刺", "r", {"FA": 1, "MS": 3}),
    ("魯", "l", {"UY": 2}),
    ("綠", "l", {"UY": 1}),
    ("羅", "r", {"MS": 1}),
    ("路", "r", {"MS": 1}),
    ("弄", "r", {"MS": 1}),
    ("利", "r", {"MS": 1}),
    ("兒", "r", {"FA": 146, "UY": 249, "TB": 124, "MN": None, "MS": 19, "CM": 10}),
    ("二", "l", {"MN": None, "KO": 75}),
    # ming / -n
    ("密", "m", {"FA": 11}),
    ("母", "m", {"FA": 1}),
    ("木", "m", {"UY": 1}),
    ("門", "m", {"KO": 3}),
    ("音", "n", {"FA": 12}),
]

# occurrences confined to one lexeme
SINGLE_LEXEME = {("西", "UY"): "eski", ("除", "UY"): "ytʃ", ("門", "KO"): "ham"}

# MT fillers: (char, syllable); none of them carries a /ə/ or /i/ rime
FILLERS = [("哈", "ha"), ("納", "na"), ("把", "ba"), ("大", "ta"), ("故", "ku"), ("忽", "xu"), ("班", "ban")]
RELEASED_SECTIONS = {"UY", "FA", "CM"}
STOPS = set("pbtdkgq") | {"tʃ"}

# MT rime distributions: section -> {value: count}
SCHWA_CELLS = {  # /ə/
    "JA": {"a": 63, "o": 55, "u": 13, "e": 13},
    "TB": {"a": 85, "o": 93, "u": 26, "e": 17, "i": 17},
    "UY": {"a": 71, "o": 26, "u": 1, "ä": 81, "e": 25, "ɨ": 20, "i": 18},
    "FA": {"a": 230, "u": 8, "e": 7, "i": 7, "ɨ": 7, "ɛ": 7, "ɔ": 6, "ø": 5},
    "MS": {"ə": 45, "a": 3, "o": 18, "u": 7, "e": 7, "i": 7},
    "CM": {"a": 37, "u": 9, "ɔw": 45, "e": 18, "i": 17},
}
HIGH_CELLS = {  # /i/
    "JA": {"i": 44, "u": 28, "ɨ": 1},
    "TB": {"i": 37},
    "UY": {"ɨ": 5},
    "FA": {"ɨ": 3},
    "MS": {"e": 16},
    "CM": {"ɨ": 3},
}
SCHWA_CHARS = [("根", "k"), ("論", "l"), ("嫩", "n")]
HIGH_CHARS = [("子", "ts"), ("思", "s")]

# Korean grammatical morphemes: (char, syllable, label, count)
KOREAN_MORPHEMES = [("大", "ta", "-ta", 87), ("刺", "la", "-la", 12), ("格", "ka", "-ge", 15), ("那", "na", "-na", 2)]
KOREAN_STEMS = [("哈", "ha", "ha"), ("把", "pa", "pa"), ("故", "ku", "ku"), ("忽", "xu", "xu")]


class Rows:
    def __init__(self):
        self.rows: list[str] = []
        self.serial: dict[str, int] = {}

    def add(self, section, chars, recon, align, morphs="", index=None, gloss="(synthetic)", conv=IPA):
        if index is None:
            n = self.serial.get(section, 0) + 1
            self.serial[section] = n
            index = f"{section}-s{n:04d}"
        fields = [section, index, gloss, " ".join(chars), recon, conv]
        if align or morphs:
            fields.append(align)
        if morphs:
            fields.append(morphs)
        self.rows.append("\t".join(fields))


def _seg_len(text: str) -> int:
    sys.path.insert(0, str(ROOT / "src"))
    from hhy.segments import parse_ipa
    return len(parse_ipa(text))


def worked_counts() -> dict[tuple[str, str], int]:
    """ST uses already supplied by the worked entries."""
    sys.path.insert(0, str(ROOT / "src"))
    from hhy.corpus import parse_row, st_occurrences
    got: dict[tuple[str, str], int] = {}
    entries = [parse_row("\t".join(w).rstrip("\t")) for w in WORKED]
    for o in st_occurrences(entries):
        got[(o.character, o.section)] = got.get((o.character, o.section), 0) + 1
    return got


def st_rows(rows: Rows) -> None:
    done = worked_counts()
    for char, seg, per in ST_COUNTS:
        for section, count in per.items():
            n = 1 if count is None else count
            n -= done.pop((char, section), 0)
            single = SINGLE_LEXEME.get((char, section))
            for k in range(max(n, 0)):
                if single:
                    _single_lexeme_row(rows, section, char, single, seg)
                    continue
                fchar, fsyl = FILLERS[k % len(FILLERS)]
                initial = seg == "n" or (seg in STOPS and section not in RELEASED_SECTIONS)
                if initial:
                    recon = seg + fsyl
                    rows.add(section, [char, fchar], recon, f"0:0-0 1:1-{_seg_len(recon) - 1}")
                else:
                    recon = fsyl + seg
                    m = _seg_len(fsyl)
                    rows.add(section, [fchar, char], recon, f"0:0-{m - 1} 1:{m}-{m}")


def _single_lexeme_row(rows: Rows, section, char, word, seg) -> None:
    if word == "eski":
        rows.add(section, ["以", char, "格"], word, "0:0-0 1:1-1 2:2-3")
    elif word == "ytʃ":
        rows.add(section, ["與", char], word, "0:0-0 1:1-1")
    else:
        rows.add(section, ["哈", char], word, "0:0-1 1:2-2")


def rime_rows(rows: Rows, table, chars) -> None:
    for section, dist in table.items():
        k = 0
        for value, count in dist.items():
            for _ in range(count):
                char, onset = chars[k % len(chars)]
                k += 1
                recon = onset + value
                rows.add(section, [char], recon, f"0:0-{_seg_len(recon) - 1}")
        # two characters per section the aligner leaves unplaced
        for char, onset in chars[:2]:
            m = _seg_len(onset)
            rows.add(section, [char, "大"], onset + "ata", f"1:{m + 1}-{m + 2}")


def korean_rows(rows: Rows) -> None:
    for mchar, msyl, label, count in KOREAN_MORPHEMES:
        for k in range(count):
            schar, ssyl, slabel = KOREAN_STEMS[k % len(KOREAN_STEMS)]
            rows.add("KO", [schar, mchar], ssyl + msyl, "0:0-1 1:2-3", f"{slabel}:0-0 {label}:1-1")


def build() -> str:
    rows = Rows()
    for w in WORKED:
        section, index, gloss, chars, recon, conv, align, morphs = w
        rows.add(section, chars.split(), recon, align, morphs, index=index, gloss=gloss, conv=conv)
    st_rows(rows)
    rime_rows(rows, SCHWA_CELLS, SCHWA_CHARS)
    rime_rows(rows, HIGH_CELLS, HIGH_CHARS)
    korean_rows(rows)
    return "\n".join([HEADER] + rows.rows) + "\n"


def main() -> None:
    text = build()
    for path in TARGETS:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        print(f"wrote {path} ({text.count(chr(10)) - 1} entries)")


if __name__ == "__main__":
    main()
