"""Loaders for the editable rule and lexicon data files.

Heuristics are data, not code: the secret rules, placeholder denylist, and
poisoning/steering word lists ship as JSON next to the package and can be
overridden per run.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


def _read_data(name: str) -> dict:
    return json.loads(resources.files("mcpguard.data").joinpath(name).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SecretRule:
    rule_id: str
    description: str
    pattern: re.Pattern


@dataclass(frozen=True)
class SecretRuleSet:
    rules: tuple[SecretRule, ...]
    placeholders: tuple[str, ...]


def load_secret_rules(path: str | Path | None = None) -> SecretRuleSet:
    data = json.loads(Path(path).read_text(encoding="utf-8")) if path else _read_data("secret_rules.json")
    rules = tuple(
        SecretRule(rule_id=r["id"], description=r.get("description", ""), pattern=re.compile(r["pattern"]))
        for r in data["rules"]
    )
    return SecretRuleSet(rules=rules, placeholders=tuple(data.get("placeholders", ())))


@dataclass(frozen=True)
class PoisonLexicon:
    attention_blocks: tuple[re.Pattern, ...]
    imperative_patterns: tuple[re.Pattern, ...]
    return_keywords: tuple[str, ...]
    return_imperative_patterns: tuple[re.Pattern, ...]
    steering_patterns: tuple[re.Pattern, ...]


def load_poison_lexicon(path: str | Path | None = None) -> PoisonLexicon:
    data = json.loads(Path(path).read_text(encoding="utf-8")) if path else _read_data("poison_lexicon.json")

    def compiled(key: str) -> tuple[re.Pattern, ...]:
        return tuple(re.compile(p, re.IGNORECASE) for p in data.get(key, ()))

    return PoisonLexicon(
        attention_blocks=compiled("attention_blocks"),
        imperative_patterns=compiled("imperative_patterns"),
        return_keywords=tuple(data.get("return_keywords", ())),
        return_imperative_patterns=compiled("return_imperative_patterns"),
        steering_patterns=compiled("steering_patterns"),
    )


def instruction_like_spans(text: str, lexicon: PoisonLexicon) -> list[str]:
    """Matched spans when text reads like a model-directed instruction:
    a keyword hit plus an imperative sentence shape. Used for both extracted
    return literals and live proxied results."""
    lowered = text.lower()
    keyword_hits = [k for k in lexicon.return_keywords if re.search(rf"\b{re.escape(k)}\b", lowered)]
    if not keyword_hits:
        return []
    spans: list[str] = []
    for pattern in lexicon.return_imperative_patterns:
        found = pattern.search(text)
        if found:
            spans.append(found.group(0))
    if not spans:
        return []
    return keyword_hits + spans
