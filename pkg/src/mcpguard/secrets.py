"""Secret scanning over configuration text, with masking and an ethics-gated
validity probe.

Matches are masked immediately: nothing downstream of ``scan_secrets`` ever
holds more than the first and last four characters of a credential.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .fetch import FetchError, FetchResponse
from .lexicon import SecretRuleSet, load_secret_rules

# A masked value reveals at most this many characters of the secret.
MAX_REVEALED_CHARS = 8

VALIDITY_UNCHECKED = "unchecked"
VALIDITY_VALID = "valid"
VALIDITY_INVALID = "invalid"

DEFAULT_PROBE_URL = "https://api.github.com/user"
BAD_CREDENTIALS_MESSAGE = "Bad credentials"


class ConsentRequired(Exception):
    """Token probing attempted without the explicit consent flag."""


@dataclass(frozen=True)
class SecretMatch:
    rule_id: str
    masked_value: str
    span: tuple[int, int]  # (offset, length) into the scanned text
    validity: str = VALIDITY_UNCHECKED

    def to_json(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "masked_value": self.masked_value,
            "span": list(self.span),
            "validity": self.validity,
        }


def mask_value(value: str) -> str:
    """First four and last four characters survive; the middle is starred out.
    Values of eight characters or fewer are fully starred."""
    if len(value) <= MAX_REVEALED_CHARS:
        return "*" * len(value)
    return value[:4] + "*" * (len(value) - 8) + value[-4:]


def is_placeholder(value: str, placeholders: tuple[str, ...]) -> bool:
    """Placeholder denylist hit, or any angle-bracketed template value."""
    if "<" in value or ">" in value:
        return True
    lowered = value.lower()
    return any(p.lower() in lowered for p in placeholders)


def scan_secrets(text: str, rules: SecretRuleSet | None = None) -> list[SecretMatch]:
    """Apply every rule to the text; placeholder values are suppressed."""
    if not text:
        return []
    rules = rules or load_secret_rules()
    matches: list[SecretMatch] = []
    for rule in rules.rules:
        for found in rule.pattern.finditer(text):
            value = found.group(0)
            if is_placeholder(value, rules.placeholders):
                continue
            matches.append(
                SecretMatch(
                    rule_id=rule.rule_id,
                    masked_value=mask_value(value),
                    span=(found.start(), len(value)),
                )
            )
    matches.sort(key=lambda m: (m.span[0], m.rule_id))
    return matches


# Transport for probes: (url, headers) -> FetchResponse. Kept separate from
# the Fetcher protocol so tests can count requests precisely.
ProbeTransport = Callable[[str, dict[str, str]], FetchResponse]


@dataclass
class TokenProber:
    """Validity probe against a self-referential benign endpoint.

    Gated on an explicit consent flag and limited to exactly one request per
    distinct token per run.
    """

    transport: ProbeTransport
    consent: bool = False
    probe_url: str = DEFAULT_PROBE_URL
    _seen: dict[str, str] = field(default_factory=dict)

    def probe(self, text: str, match: SecretMatch) -> str:
        if not self.consent:
            raise ConsentRequired("token probing requires the explicit consent flag")
        offset, length = match.span
        token = text[offset : offset + length]
        if token in self._seen:
            return self._seen[token]
        try:
            resp = self.transport(self.probe_url, {"Authorization": f"Bearer {token}"})
        except FetchError:
            self._seen[token] = VALIDITY_UNCHECKED
            return VALIDITY_UNCHECKED
        if resp.status == 200:
            validity = VALIDITY_VALID
        elif BAD_CREDENTIALS_MESSAGE.lower() in resp.body.lower():
            validity = VALIDITY_INVALID
        else:
            validity = VALIDITY_UNCHECKED
        self._seen[token] = validity
        return validity
