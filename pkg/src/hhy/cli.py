"""Command-line interface: ``hhy <command> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from ._data import DataError, data_path
from .correspondence import (
    AlignmentError, EngineOptions, UncoverableSegmentError, consistency_check, predict, validate,
)
from .phonology import (
    STAGES, ZERO, CategoryError, UnknownCharacterError, character_table, inventory_at,
)
from .profiles import SECTIONS, get_profile
from .segments import CONVENTIONS, ConversionError, ParseError, convert_romanization, render
from .structure import RELEASE_POLICIES, NoNucleusError, classify_word

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2
BUILTIN_CORPORA = {"reference": ("corpus", "reference.tsv")}


class UsageError(Exception):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _options(args) -> EngineOptions:
    return EngineOptions(args.stage, args.apply_in_progress, args.legacy_m_coda, args.release_policy)


def _corpus_path(args) -> Path:
    if not args.corpus:
        raise UsageError("--corpus is required for this command")
    if args.corpus in BUILTIN_CORPORA and not Path(args.corpus).exists():
        return data_path(*BUILTIN_CORPORA[args.corpus])
    return Path(args.corpus)


def _load(args):
    entries = corpus_mod.load_corpus(_corpus_path(args))
    if args.section:
        entries = [e for e in entries if e.section == args.section]
    if getattr(args, "index", None):
        wanted = set(args.index)
        entries = [e for e in entries if e.index in wanted]
    return entries


def _word(args, text: str):
    if args.ipa or args.convention is None and args.section is None:
        return convert_romanization(text, "ipa-passthrough")
    conv = args.convention or get_profile(args.section).convention
    return convert_romanization(text, conv)


def _table(header, rows) -> str:
    return corpus_mod.text_table(header, [[("" if c is None else str(c)) for c in r] for r in rows])


def _value(v) -> str:
    if isinstance(v, tuple):
        return "".join(render(x) for x in v)
    return "0" if v is ZERO else render(v)


# --- commands -------------------------------------------------------------------

def cmd_inventory(args) -> tuple[str, int]:
    inv = inventory_at(args.stage, args.apply_in_progress)

    sheng = [{"name": c.name, "baseline": _value(c.baseline_value), "value": _value(c.value(args.stage)),
              "status": c.status, "merged_into": c.merged_into, "anchor": c.anchor}
             for c in list(inv.shengmu) + list(inv.pseudo)]
    yun = []
    for y in inv.yunmu:
        for ap, v in y.variants.items():
            cur = y.variant(ap, args.stage)
            yun.append({"name": y.name, "aperture": ap, "baseline": v.render(), "value": cur.render(),
                        "label": cur.mt_label})
    if args.format == "json":
        return _dumps({"stage": args.stage, "apply_in_progress": args.apply_in_progress,
                       "shengmu": sheng, "yunmu": yun}), EXIT_OK
    out = _table(["shengmu", "baseline", args.stage, "status", "merged into"],
                 [[s["name"], s["baseline"], s["value"], s["status"], s["merged_into"]] for s in sheng])
    out += "\n" + _table(["yunmu", "aperture", "baseline", args.stage, "label"],
                        [[y["name"], y["aperture"], y["baseline"], y["value"], y["label"]] for y in yun])
    return out, EXIT_OK


def cmd_lookup(args) -> tuple[str, int]:
    table = character_table()
    records = []
    for ch in args.characters:
        e = table.lookup(ch)
        s = e.shengmu
        rime = e.rime
        records.append({
            "character": e.character, "provenance": e.provenance, "note": e.source_note,
            "shengmu": {"name": s.name, "value": _value(s.baseline_value), "pseudo": s.pseudo,
                        "anchor": s.anchor},
            "yunmu": None if rime is None else {"name": e.yunmu.name, "aperture": e.aperture,
                                                "value": rime.render(), "label": rime.mt_label},
        })
    if args.format == "json":
        return _dumps(records), EXIT_OK
    rows = [[r["character"], r["shengmu"]["name"] + (" (pseudo)" if r["shengmu"]["pseudo"] else ""),
             r["shengmu"]["value"],
             "-" if r["yunmu"] is None else f'{r["yunmu"]["name"]} {r["yunmu"]["aperture"]}',
             "" if r["yunmu"] is None else r["yunmu"]["value"],
             "" if r["yunmu"] is None else r["yunmu"]["label"], r["provenance"]] for r in records]
    return _table(["char", "shengmu", "value", "yunmu", "rime", "label", "provenance"], rows), EXIT_OK


def cmd_segment(args) -> tuple[str, int]:
    words = [_word(args, w) for w in args.words]
    recs = []
    for k, w in enumerate(words):
        for i, s in enumerate(w):
            recs.append({"word": k, "index": i, "symbol": render(s), "kind": s.kind,
                         "place": s.place, "manner": s.manner, "voiced": s.voiced,
                         "aspirated": s.aspirated, "released": s.released, "long": s.long,
                         "height": s.height, "backness": s.backness, "rounded": s.rounded,
                         "nasalized": s.nasalized, "underspecified": sorted(s.underspecified)})
    if args.format == "json":
        return _dumps(recs), EXIT_OK
    rows = []
    for r in recs:
        if r["kind"] == "vowel":
            feats = f'{r["height"]} {r["backness"]}{" rounded" if r["rounded"] else ""}'
        else:
            feats = (f'{r["place"]} {r["manner"]} {"voiced" if r["voiced"] else "voiceless"}'
                     f'{" aspirated" if r["aspirated"] else ""} release={r["released"]}')
        rows.append([r["word"], r["index"], r["symbol"], r["kind"], feats, ",".join(r["underspecified"])])
    return _table(["word", "i", "segment", "kind", "features", "underspecified"], rows), EXIT_OK


def cmd_classify(args) -> tuple[str, int]:
    opts = _options(args)
    recs, warnings = [], []
    for k, text in enumerate(args.words):
        word = _word(args, text)
        res = classify_word(word, opts.release_policy, args.section, opts.legacy_m_coda)
        warnings.extend(res.warnings)
        for slot in res:
            recs.append({"word": k, "index": slot.segment_index, "segment": render(word[slot.segment_index]),
                         "role": slot.structural_role, "condition": slot.condition_label,
                         "verdict": slot.verdict, "metadata": list(slot.metadata)})
    if args.format == "json":
        return _dumps({"slots": recs, "warnings": warnings}), EXIT_OK
    out = _table(["word", "i", "segment", "role", "condition", "verdict", "flags"],
                 [[r["word"], r["index"], r["segment"], r["role"], r["condition"] or "", r["verdict"],
                   ",".join(r["metadata"])] for r in recs])
    return out + "".join(f"warning: {w}\n" for w in warnings), EXIT_OK


def cmd_predict(args) -> tuple[str, int]:
    opts = _options(args)
    preds = [predict(_word(args, w), args.section, opts) for w in args.words]
    top = args.top or 10
    if args.format == "json":
        return _dumps([p.to_dict(top) for p in preds]), EXIT_OK
    out = []
    for p in preds:
        d = p.to_dict(top)
        out.append(f"{d['word']} ({d['section'] or 'no section'})")
        for pp in d["parses"]:
            rows = []
            for s in pp["slots"]:
                if s["type"] == "syllable":
                    rows.append([f'{s["span"][0]}-{s["span"][1]}', "MT",
                                 " | ".join(s["shengmu"]), " | ".join(s["rimes"])])
                elif s["type"] == "st":
                    rows.append([str(s["index"]), f'ST {s["segment"]} ({s["condition"]})',
                                 " ".join(c[0] for c in s["candidates"]) or "?",
                                 " | ".join(dict.fromkeys(c[1] for c in s["candidates"]))])
                else:
                    rows.append([str(s["index"]), f'unrepresented {s["segment"]}', "", ""])
            out.append(f"parse {pp['rank']}")
            out.append(_table(["span", "slot", "candidates", "categories"], rows).rstrip("\n"))
        out.append("skeletons")
        out.append(_table(["#", "parse", "skeleton"],
                          [[i + 1, s["parse"], " + ".join(s["items"])] for i, s in enumerate(d["skeletons"])]).rstrip("\n"))
        out.extend(f"warning: {w}" for w in d["warnings"])
    return "\n".join(out) + "\n", EXIT_OK


def cmd_validate(args) -> tuple[str, int]:
    opts = _options(args)
    entries = _load(args)
    witnesses = corpus_mod.load_corpus(_corpus_path(args))
    cache: dict = {}
    reports, failed = [], []
    for e in entries:
        try:
            reports.append(validate(e, e.section, opts, witnesses, _cache=cache))
        except (AlignmentError, UnknownCharacterError) as exc:
            failed.append({"entry": f"{e.section}:{e.index}", "error": str(exc)})
    status = EXIT_OK if not failed and all(r.conformant for r in reports) else EXIT_DOMAIN
    if args.format == "json":
        return _dumps({"reports": [r.to_dict() for r in reports], "failed": failed}), status
    text = "".join(r.to_text() + "\n" for r in reports)
    text += "".join(f"{f['entry']}\talignment error: {f['error']}\n" for f in failed)
    n_bad = sum(not r.conformant for r in reports) + len(failed)
    return text + f"{len(entries)} entries, {n_bad} not conformant\n", status


def cmd_analyze(args) -> tuple[str, int]:
    opts = _options(args)
    entries = _load(args)
    if not (args.st_id or args.freq or args.consistency):
        raise UsageError("analyze needs one of --st-id, --freq LABEL, --consistency")
    aligned = corpus_mod.align_corpus(entries, opts, args.jobs)
    parts, payload = [], {}
    if args.st_id:
        reports = corpus_mod.identify_st_chars(aligned, opts, args.threshold)
        payload["st_id"] = [r.to_dict() for r in reports]
        parts.append(corpus_mod.export_report(reports, "table"))
    if args.freq:
        tables = [corpus_mod.frequency_tables(aligned, corpus_mod.Axis(args.kind, label, args.role), opts)
                  for label in args.freq]
        payload["freq"] = [t.to_dict(args.top) for t in tables]
        parts.append(corpus_mod.export_report(tables, "table", top=args.top))
    if args.consistency:
        findings = consistency_check(entries, opts)
        payload["consistency"] = [{"severity": f.severity, "code": f.code, "message": f.message}
                                  for f in findings]
        parts.append(_table(["severity", "code", "message"],
                            [[f.severity, f.code, f.message] for f in findings]))
    failed = [f"{a.entry.section}:{a.entry.index}: {a.error}" for a in aligned if a.alignment is None]
    payload["unaligned"] = failed
    if args.format == "json":
        return _dumps(payload), EXIT_OK
    if failed:
        parts.append(f"{len(failed)} entries could not be aligned (counted as unresolved)\n")
    return "\n".join(parts), EXIT_OK


def cmd_export(args) -> tuple[str, int]:
    opts = _options(args)
    entries = _load(args)
    out, failed = [], []
    for a in corpus_mod.align_corpus(entries, opts, args.jobs):
        if a.alignment is None:
            failed.append(f"{a.entry.section}:{a.entry.index}: {a.error}")
            out.append(a.entry)
        else:
            out.append(a.entry.with_alignment(a.alignment.spans))
    if args.format == "json":
        return _dumps({"entries": [corpus_mod.format_row(e) for e in out], "unaligned": failed}), EXIT_OK
    return corpus_mod.dump_corpus(out), EXIT_OK


COMMANDS = {
    "inventory": cmd_inventory, "lookup": cmd_lookup, "segment": cmd_segment, "classify": cmd_classify,
    "predict": cmd_predict, "validate": cmd_validate, "analyze": cmd_analyze, "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--format", choices=("table", "json"), default="table", help="output format (default: table)")
    g.add_argument("--stage", choices=STAGES, default="baseline", help="inventory stage (default: baseline)")
    g.add_argument("--apply-in-progress", action="store_true", help="also apply in-progress sound changes")
    g.add_argument("--corpus", metavar="PATH", help="corpus TSV, or 'reference' for the shipped corpus")
    g.add_argument("--section", choices=SECTIONS, help="language section code")
    g.add_argument("--convention", choices=CONVENTIONS, help="romanization of input words (default: IPA, "
                   "or the section's convention when --section is given)")
    g.add_argument("--ipa", action="store_true", help="read input words as IPA regardless of --section")
    g.add_argument("--legacy-m-coda", action="store_true", help="admit [m] as an MT coda")
    g.add_argument("--release-policy", choices=RELEASE_POLICIES, default="profile",
                   help="word-final stop release when unmarked (default: profile)")
    g.add_argument("--top", type=int, metavar="K", help="top-K cells in frequency views, skeletons in predict")
    g.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes for alignment (default: 1)")
    g.add_argument("--output", metavar="PATH", help="write output here (atomically) instead of stdout")

    parser = argparse.ArgumentParser(prog="hhy", description="Rule-based HHY transcription engine.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    sub.add_parser("inventory", parents=[common], help="list shengmu and yunmu categories")
    p = sub.add_parser("lookup", parents=[common], help="look up characters")
    p.add_argument("characters", nargs="+")
    for name, help_ in (("segment", "parse a word into segments"),
                        ("classify", "structural role and ST verdict per segment"),
                        ("predict", "predicted transcription skeletons")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("words", nargs="+", help="word(s) of one entry")
    p = sub.add_parser("validate", parents=[common], help="validate corpus entries")
    p.add_argument("--index", action="append", metavar="ID", help="only this entry (repeatable)")
    p = sub.add_parser("analyze", parents=[common], help="corpus analyses")
    p.add_argument("--st-id", action="store_true", help="ST character identification")
    p.add_argument("--freq", action="append", metavar="LABEL", help="frequency table for a category (repeatable)")
    p.add_argument("--kind", choices=("rime", "shengmu"), default="rime", help="category kind for --freq")
    p.add_argument("--role", choices=("MT", "ST"), default="MT", help="role for --freq")
    p.add_argument("--consistency", action="store_true", help="morpheme consistency check")
    p.add_argument("--threshold", type=int, default=corpus_mod.DEFAULT_LIMITED_THRESHOLD,
                   help="largest multi-section total still retained-limited (default: %(default)s)")
    sub.add_parser("export", parents=[common], help="write the corpus with computed alignments")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, status = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except (DataError, corpus_mod.CorpusError, OSError) as exc:
        print(f"hhy: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ConversionError, UnknownCharacterError, CategoryError, NoNucleusError,
            UncoverableSegmentError, AlignmentError, KeyError) as exc:
        print(f"hhy: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if not text.endswith("\n"):
        text += "\n"
    if args.output:
        try:
            corpus_mod.write_atomic(args.output, text)
        except OSError as exc:
            print(f"hhy: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
