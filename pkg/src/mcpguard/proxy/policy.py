"""Per-tool invocation policy: glob patterns over qualified names."""
from __future__ import annotations

from fnmatch import fnmatchcase
from typing import Mapping


def decide_mode(policy: Mapping[str, str], default_mode: str, qualified: str) -> tuple[str, str | None]:
    """Mode for a qualified tool name; the longest matching pattern wins.

    Ties break lexicographically so the decision is deterministic. Returns
    (mode, matched pattern or None when the default applied).
    """
    matched = [pattern for pattern in policy if fnmatchcase(qualified, pattern)]
    if not matched:
        return default_mode, None
    best = max(matched, key=lambda p: (len(p), p))
    return policy[best], best
