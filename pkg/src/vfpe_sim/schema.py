"""Helpers to load and validate the campaign JSON schema."""

from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from jsonschema import Draft202012Validator, FormatChecker
from jsonschema.exceptions import ValidationError

from .models import PAPER_RANGES, SimConfig, SweepParameter


def _project_root() -> Path:
    # __file__ -> src/vfpe_sim/schema.py; repo root is three levels up
    return Path(__file__).resolve().parents[2]


def default_schema_path() -> Path:
    """Return the path to the canonical campaign schema file."""
    return _project_root() / "docs" / "templates" / "campaign_schema.json"


@lru_cache(maxsize=1)
def load_schema(path: Optional[Path | str] = None) -> Dict[str, Any]:
    """Load and cache the campaign schema as a dictionary."""
    schema_path = Path(path) if path else default_schema_path()
    return json.loads(schema_path.read_text(encoding="utf-8"))


def format_errors(errors: Iterable[ValidationError]) -> str:
    """Turn jsonschema errors into a concise human-readable string."""
    parts = []
    for err in errors:
        location = ".".join(str(piece) for piece in err.absolute_path) or "<root>"
        parts.append(f"{location}: {err.message}")
    return "; ".join(parts)


def campaign_consistency_errors(payload: Dict[str, Any]) -> List[str]:
    """Cross-field problems the schema cannot express, as `location: message` strings."""
    problems: List[str] = []
    base = payload.get("base", {})
    sweep = payload.get("sweep", {"parameter": "none"})
    parameter = sweep.get("parameter", "none")
    values = sweep.get("values", [])

    if parameter == "none" and values:
        problems.append("sweep.values: a 'none' sweep takes no values")
    if parameter == "cs" and any(v < 1 for v in values):
        problems.append("sweep.values: cs must be at least 1")
    if payload.get("paper_replication") and parameter != "none":
        lo, hi = PAPER_RANGES[SweepParameter(parameter)]
        bad = sorted({v for v in values if not lo <= v <= hi})
        if bad:
            problems.append(f"sweep.values: {bad} outside [{lo}, {hi}] for paper replication")
    swept_field = {"cs": "cs", "n": "n_swarm"}.get(parameter)
    if swept_field is not None and swept_field in base:
        problems.append(f"base.{swept_field}: set but replaced by the {parameter} sweep")

    for key in ("traffic_speed", "swarm_speed"):
        if key in base and base[key][0] > base[key][1]:
            problems.append(f"base.{key}: minimum {base[key][0]} above maximum {base[key][1]}")
    duration = base.get("duration", SimConfig.model_fields["duration"].default)
    if base.get("cbr_start", 0.0) >= duration:
        problems.append(f"base.cbr_start: traffic would start after the {duration} s run")
    return problems


def validate_campaign_payload(
    payload: Dict[str, Any], schema: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """
    Validate a campaign document against the campaign schema, then across fields.

    Raises ValueError with a readable message if validation fails.
    """
    schema_dict = schema or load_schema()
    validator = Draft202012Validator(schema_dict, format_checker=FormatChecker())
    errors = sorted(
        validator.iter_errors(payload), key=lambda e: [str(p) for p in e.absolute_path]
    )
    if errors:
        raise ValueError(f"Schema validation failed: {format_errors(errors)}")
    problems = campaign_consistency_errors(payload)
    if problems:
        raise ValueError(f"Campaign check failed: {'; '.join(problems)}")
    return payload
