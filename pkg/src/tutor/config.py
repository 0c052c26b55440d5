"""Runtime configuration: validated, immutable snapshots swapped atomically.

Changes arrive as partial patches through the config endpoint and take effect
on the next request without a restart.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import InvalidConfig
from .policy import DEFAULT_SOLUTION_KEYWORDS, DEFAULT_SYSTEM_TEMPLATE, Awareness


@dataclass(frozen=True)
class Pricing:
    prompt_price_per_1m: float = 2.5
    completion_price_per_1m: float = 10.0


@dataclass(frozen=True)
class RuntimeConfig:
    """Service knobs a course team can turn while the tutor is running."""

    default_awareness: str = Awareness.NONE.value
    scope_threshold: float = 0.25
    max_code_lines: int = 8
    token_budget: int = 3000
    pricing: Pricing = field(default_factory=Pricing)
    solution_request_keywords: tuple[str, ...] = DEFAULT_SOLUTION_KEYWORDS
    template_version: int = 1
    course_name: str = "the course"
    system_prompt_template: str = DEFAULT_SYSTEM_TEMPLATE

    def to_dict(self) -> dict:
        data = asdict(self)
        data["solution_request_keywords"] = list(self.solution_request_keywords)
        return data


_AWARENESS_VALUES = tuple(level.value for level in Awareness)


def _check_positive_number(errors: dict, name: str, value) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors[name] = "must be a number"
    elif value <= 0:
        errors[name] = "must be positive"


def _check_positive_int(errors: dict, name: str, value) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        errors[name] = "must be an integer"
    elif value <= 0:
        errors[name] = "must be positive"


def apply_patch(current: RuntimeConfig, patch: dict) -> RuntimeConfig:
    """Validate a partial update against the invariants; raise InvalidConfig with
    field-level diagnostics on any violation."""
    errors: dict[str, str] = {}
    fields: dict = {}

    known = {"default_awareness", "scope_threshold", "max_code_lines", "token_budget",
             "pricing", "solution_request_keywords", "template_version", "course_name",
             "system_prompt_template"}
    for key in patch:
        if key not in known:
            errors[key] = "unknown field"

    if "default_awareness" in patch:
        value = patch["default_awareness"]
        if value not in _AWARENESS_VALUES:
            errors["default_awareness"] = f"must be one of {', '.join(_AWARENESS_VALUES)}"
        else:
            fields["default_awareness"] = value
    if "scope_threshold" in patch:
        _check_positive_number(errors, "scope_threshold", patch["scope_threshold"])
        if "scope_threshold" not in errors:
            fields["scope_threshold"] = float(patch["scope_threshold"])
    if "max_code_lines" in patch:
        _check_positive_int(errors, "max_code_lines", patch["max_code_lines"])
        if "max_code_lines" not in errors:
            fields["max_code_lines"] = patch["max_code_lines"]
    if "token_budget" in patch:
        _check_positive_int(errors, "token_budget", patch["token_budget"])
        if "token_budget" not in errors:
            fields["token_budget"] = patch["token_budget"]
    if "template_version" in patch:
        _check_positive_int(errors, "template_version", patch["template_version"])
        if "template_version" not in errors:
            fields["template_version"] = patch["template_version"]
    if "pricing" in patch:
        raw = patch["pricing"]
        if not isinstance(raw, dict):
            errors["pricing"] = "must be an object with prompt_price_per_1m and completion_price_per_1m"
        else:
            merged = {
                "prompt_price_per_1m": raw.get("prompt_price_per_1m",
                                               current.pricing.prompt_price_per_1m),
                "completion_price_per_1m": raw.get("completion_price_per_1m",
                                                   current.pricing.completion_price_per_1m),
            }
            for name, value in merged.items():
                _check_positive_number(errors, f"pricing.{name}", value)
            unknown = set(raw) - set(merged)
            for name in unknown:
                errors[f"pricing.{name}"] = "unknown field"
            if not any(key.startswith("pricing") for key in errors):
                fields["pricing"] = Pricing(float(merged["prompt_price_per_1m"]),
                                            float(merged["completion_price_per_1m"]))
    if "solution_request_keywords" in patch:
        raw = patch["solution_request_keywords"]
        if (not isinstance(raw, (list, tuple)) or not raw
                or not all(isinstance(s, str) and s.strip() for s in raw)):
            errors["solution_request_keywords"] = "must be a non-empty list of non-empty strings"
        else:
            fields["solution_request_keywords"] = tuple(raw)
    if "course_name" in patch:
        if not isinstance(patch["course_name"], str) or not patch["course_name"].strip():
            errors["course_name"] = "must be a non-empty string"
        else:
            fields["course_name"] = patch["course_name"]
    if "system_prompt_template" in patch:
        if not isinstance(patch["system_prompt_template"], str) or not patch["system_prompt_template"].strip():
            errors["system_prompt_template"] = "must be a non-empty string"
        else:
            fields["system_prompt_template"] = patch["system_prompt_template"]

    if errors:
        raise InvalidConfig(errors)
    return replace(current, **fields)


def runtime_config_from_dict(data: dict) -> RuntimeConfig:
    """Build a full config by patching the defaults (same validation path)."""
    return apply_patch(RuntimeConfig(), data)


def load_service_config(path: str | Path) -> dict:
    """Read the service config file: a `runtime` section plus static settings."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise InvalidConfig({"<root>": "service config must be a JSON object"})
    return data
