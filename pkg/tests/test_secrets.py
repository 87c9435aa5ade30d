from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcpguard.fetch import FetchResponse
from mcpguard.lexicon import load_secret_rules
from mcpguard.secrets import (
    ConsentRequired,
    MAX_REVEALED_CHARS,
    TokenProber,
    VALIDITY_INVALID,
    VALIDITY_UNCHECKED,
    VALIDITY_VALID,
    is_placeholder,
    mask_value,
    scan_secrets,
)
from synthetic_tokens import RULE_IDS, embed_in_config, synthetic_token

RULES = load_secret_rules()


def test_classic_token_shape_detected_and_masked():
    token = synthetic_token("code-host-pat-classic", random.Random(1))
    text = f'"GITHUB_PERSONAL_ACCESS_TOKEN": "{token}"'
    matches = scan_secrets(text, RULES)
    assert len(matches) == 1
    match = matches[0]
    assert match.rule_id == "code-host-pat-classic"
    assert match.masked_value.startswith("ghp_")
    assert "*" in match.masked_value
    assert token not in match.masked_value
    offset, length = match.span
    assert text[offset : offset + length] == token


def test_placeholder_value_not_flagged():
    assert scan_secrets('"token": "your-token"', RULES) == []
    assert scan_secrets('"token": "<token>"', RULES) == []


def test_empty_text_yields_nothing():
    assert scan_secrets("", RULES) == []


def test_placeholder_inside_matching_shape_suppressed():
    # matches the classic-token regex byte for byte, but is obviously filler
    fake = "ghp_" + "x" * 36
    assert scan_secrets(f'"token": "{fake}"', RULES) == []


def test_every_rule_matches_its_synthetic_shape():
    rng = random.Random(7)
    for rule_id in RULE_IDS:
        token = synthetic_token(rule_id, rng)
        matches = scan_secrets(embed_in_config(token, rng), RULES)
        assert any(m.rule_id == rule_id for m in matches), rule_id


def test_mask_reveals_at_most_eight_characters():
    rng = random.Random(3)
    for rule_id in RULE_IDS:
        token = synthetic_token(rule_id, rng)
        masked = mask_value(token)
        revealed = sum(1 for a, b in zip(token, masked) if a == b and b != "*")
        assert revealed <= MAX_REVEALED_CHARS
        assert len(masked) == len(token)


@settings(max_examples=150)
@given(st.text(min_size=0, max_size=120))
def test_mask_properties_hold_for_any_string(value):
    masked = mask_value(value)
    assert len(masked) == len(value)
    if len(value) <= 8:
        assert masked == "*" * len(value)
    else:
        assert masked == value[:4] + "*" * (len(value) - 8) + value[-4:]


def test_masked_values_never_rematch_any_rule():
    rng = random.Random(11)
    for rule_id in RULE_IDS:
        for _ in range(20):
            masked = mask_value(synthetic_token(rule_id, rng))
            for rule in RULES.rules:
                assert not rule.pattern.search(masked), (rule_id, masked)


def test_is_placeholder_angle_brackets():
    assert is_placeholder("<anything>", RULES.placeholders)
    assert not is_placeholder("ghp_realshape", RULES.placeholders)


class CountingTransport:
    def __init__(self, status=200, body=""):
        self.calls: list[tuple[str, dict]] = []
        self.status = status
        self.body = body

    def __call__(self, url, headers):
        self.calls.append((url, headers))
        return FetchResponse(status=self.status, body=self.body)


def one_match(text):
    matches = scan_secrets(text, RULES)
    assert len(matches) == 1
    return matches[0]


def test_probe_without_consent_raises_and_sends_nothing():
    token = synthetic_token("code-host-pat-classic", random.Random(5))
    text = f"t={token}"
    transport = CountingTransport()
    prober = TokenProber(transport=transport, consent=False)
    with pytest.raises(ConsentRequired):
        prober.probe(text, one_match(text))
    assert transport.calls == []


def test_probe_valid_on_200():
    token = synthetic_token("code-host-pat-classic", random.Random(6))
    text = f"t={token}"
    transport = CountingTransport(status=200, body="{}")
    prober = TokenProber(transport=transport, consent=True)
    assert prober.probe(text, one_match(text)) == VALIDITY_VALID


def test_probe_invalid_on_bad_credentials():
    token = synthetic_token("code-host-pat-classic", random.Random(8))
    text = f"t={token}"
    transport = CountingTransport(status=401, body='{"message": "Bad credentials"}')
    prober = TokenProber(transport=transport, consent=True)
    assert prober.probe(text, one_match(text)) == VALIDITY_INVALID


def test_probe_other_outcomes_stay_unchecked():
    token = synthetic_token("code-host-pat-classic", random.Random(9))
    text = f"t={token}"
    transport = CountingTransport(status=500, body="oops")
    prober = TokenProber(transport=transport, consent=True)
    assert prober.probe(text, one_match(text)) == VALIDITY_UNCHECKED


def test_exactly_one_probe_per_token_per_run():
    token = synthetic_token("code-host-pat-classic", random.Random(10))
    text = f"a={token} b={token}"
    matches = scan_secrets(text, RULES)
    assert len(matches) == 2
    transport = CountingTransport(status=200)
    prober = TokenProber(transport=transport, consent=True)
    for match in matches:
        prober.probe(text, match)
    assert len(transport.calls) == 1
