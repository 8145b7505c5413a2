"""Config-file loading for the similarity metric and the mutation loop.

One JSON document with optional "similarity" and "mutation" sections;
keys inside each section are exactly the config dataclass field names.
The similarity format_overlap_table is written as a nested mapping
{"R": {"I": 0.52, ...}, ...} and converted to the pair-keyed form.
"""

from __future__ import annotations

import json
from pathlib import Path

from .mutation import MutationConfig
from .similarity import SimilarityConfig, default_format_overlap

_SIM_KEYS = {"w_tp", "w_op", "w_sm", "w_f", "field_weights",
             "opcode_same_category", "opcode_unrelated", "unit_same_base",
             "opkind_match_bonus", "unit_different", "format_overlap_table"}
_MUT_KEYS = {"threshold", "retries", "mutations_per_instruction_max",
             "rng_seed", "operator_weights", "accept_polarity",
             "executable_only"}


class ConfigError(ValueError):
    pass


def similarity_config_from_dict(doc: dict) -> SimilarityConfig:
    unknown = set(doc) - _SIM_KEYS
    if unknown:
        raise ConfigError(f"unknown similarity config keys: {sorted(unknown)}")
    kwargs = dict(doc)
    if "format_overlap_table" in kwargs:
        nested = kwargs["format_overlap_table"]
        table = dict(default_format_overlap())
        for fa, row in nested.items():
            for fb, value in row.items():
                table[(fa, fb)] = value
        kwargs["format_overlap_table"] = table
    try:
        return SimilarityConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"similarity config: {exc}") from exc


def mutation_config_from_dict(doc: dict, **overrides) -> MutationConfig:
    unknown = set(doc) - _MUT_KEYS
    if unknown:
        raise ConfigError(f"unknown mutation config keys: {sorted(unknown)}")
    kwargs = dict(doc)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return MutationConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"mutation config: {exc}") from exc


def load_config_file(path: str | Path | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    unknown = set(doc) - {"similarity", "mutation"}
    if unknown:
        raise ConfigError(f"unknown top-level config sections: "
                          f"{sorted(unknown)}")
    return doc
