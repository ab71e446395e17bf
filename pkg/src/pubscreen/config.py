"""Run configuration: defaults, config file, environment, flag overrides.

Precedence (lowest to highest): built-in defaults, config file, environment
variables, command-line flags. Environment keys use the PUBSCREEN_ prefix
with double underscores for nesting, e.g. PUBSCREEN_FUNNEL__TOP_N_BY_OUTPUT=500.
Values are parsed as JSON when they parse, otherwise kept as strings.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Mapping

ENV_PREFIX = "PUBSCREEN_"

DEFAULTS: dict[str, Any] = {
    "records_format": "jsonl",
    "doc_types": ["article", "review"],
    "years": None,  # [start, end] inclusive, null = whole corpus
    "groups": {"study": None, "control": []},
    "funnel": {
        "start_year": None,
        "end_year": None,
        "top_n_by_output": 1000,
        "growth_threshold_pct": 130,
        "growth_multiple_of_world": 15,
        "world_growth_pct": 8.7,
        "top_k_rank": 20,
    },
    "world_baselines": {
        "growth_pct": 8.7,
        "first_author_pct": {"2019": 53, "2023": 50},
        "authors_per_article": {"2019": 3.6, "2023": 3.9},
    },
    "thresholds": {
        "hyperprolific": 36,
        "hyperprolific_inclusive": True,
        "external_min_pubs": 2,
        "cross_group_min_pubs": 10,
        "surge_ratio": 10,
        "surge_min_recent": 36,
        "surge_baseline_years": 5,
        "surge_recent_years": 2,
    },
    "multi_affiliation_reading": "all-records",
    "network": {"min_articles": 91, "node_rule": "total-output", "cluster_seed": 0},
}


class ConfigError(ValueError):
    pass


def _deep_merge(base: dict, overlay: Mapping) -> dict:
    out = dict(base)
    for key, value in overlay.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _env_overrides(environ: Mapping[str, str]) -> dict:
    out: dict = {}
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX):].lower().split("__")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = value
    return out


def load_config(
    path: str | Path | None = None,
    environ: Mapping[str, str] | None = None,
    overrides: Mapping | None = None,
) -> dict:
    config = dict(DEFAULTS)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            file_config = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(file_config, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        config = _deep_merge(config, file_config)
    config = _deep_merge(config, _env_overrides(environ if environ is not None else os.environ))
    if overrides:
        config = _deep_merge(config, {k: v for k, v in overrides.items() if v is not None})
    return config
