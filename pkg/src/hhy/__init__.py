"""Rule-based engine for the HHY Chinese transcription system."""
from .correspondence import (
    EngineOptions, align_entry, consistency_check, mt_shengmu_candidates, mt_yunmu_candidates,
    predict, st_character_candidates, validate,
)
from .corpus import Axis, export_report, frequency_tables, identify_st_chars, load_corpus, save_corpus
from .phonology import apply_changes, baseline_inventory, category_value, inventory_at, lookup_character
from .segments import convert_romanization, features_match, parse_ipa
from .structure import classify_positions, classify_word, enumerate_parses, st_condition

__all__ = [
    "Axis", "EngineOptions", "align_entry", "apply_changes", "baseline_inventory", "category_value",
    "classify_positions", "classify_word", "consistency_check", "convert_romanization",
    "enumerate_parses", "export_report", "features_match", "frequency_tables", "identify_st_chars",
    "inventory_at", "load_corpus", "lookup_character", "mt_shengmu_candidates", "mt_yunmu_candidates",
    "parse_ipa", "predict", "save_corpus", "st_character_candidates", "st_condition", "validate",
]
