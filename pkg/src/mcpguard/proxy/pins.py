"""Metadata pinning: content digests of tool metadata at first sight.

Downstream metadata is mutable and untrusted; the pin store notices when a
tool's advertised name, description, or parameter schema changes between
refreshes (the rug-pull channel) and demotes the tool to prompt mode until an
operator re-pins it.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass

from ..registry import utc_now_iso


def canonical_metadata(meta: dict) -> str:
    """Key-sorted, whitespace-free serialization of the pinned triple."""
    return json.dumps(
        {
            "name": meta.get("name"),
            "description": meta.get("description"),
            "inputSchema": meta.get("inputSchema"),
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def metadata_digest(meta: dict) -> str:
    return hashlib.sha256(canonical_metadata(meta).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ToolPin:
    qualified: str
    digest: str
    first_seen: str


@dataclass
class _PinEntry:
    pin: ToolPin
    pinned_meta: dict
    current_meta: dict
    demoted: bool = False
    absent: bool = False


@dataclass
class PinObservation:
    outcome: str  # "new" | "unchanged" | "changed"
    before: dict | None = None
    after: dict | None = None


class PinStore:
    """Concurrent reads, exclusive mutation during refresh and re-pin."""

    def __init__(self):
        self._lock = threading.RLock()
        self._entries: dict[str, _PinEntry] = {}

    def observe(self, qualified: str, meta: dict) -> PinObservation:
        """Record the metadata seen for a live tool during a refresh."""
        digest = metadata_digest(meta)
        with self._lock:
            entry = self._entries.get(qualified)
            if entry is None:
                pin = ToolPin(qualified=qualified, digest=digest, first_seen=utc_now_iso())
                self._entries[qualified] = _PinEntry(pin=pin, pinned_meta=dict(meta), current_meta=dict(meta))
                return PinObservation(outcome="new")
            entry.absent = False
            entry.current_meta = dict(meta)
            if entry.pin.digest == digest:
                return PinObservation(outcome="unchanged")
            before = dict(entry.pinned_meta)
            entry.demoted = True
            return PinObservation(outcome="changed", before=before, after=dict(meta))

    def mark_absent(self, qualified: str) -> None:
        with self._lock:
            entry = self._entries.get(qualified)
            if entry is not None:
                entry.absent = True

    def is_demoted(self, qualified: str) -> bool:
        with self._lock:
            entry = self._entries.get(qualified)
            return bool(entry and entry.demoted)

    def has_absent(self, qualified: str) -> bool:
        with self._lock:
            entry = self._entries.get(qualified)
            return bool(entry and entry.absent)

    def absent_with_tool(self, tool_name: str) -> list[str]:
        """Qualified names of absent pins whose raw tool name matches."""
        with self._lock:
            out = []
            for qualified, entry in self._entries.items():
                if entry.absent and entry.current_meta.get("name") == tool_name:
                    out.append(qualified)
            return sorted(out)

    def repin(self, qualified: str) -> ToolPin:
        """Accept the current metadata as the new pinned state."""
        with self._lock:
            entry = self._entries.get(qualified)
            if entry is None:
                raise KeyError(qualified)
            entry.pin = ToolPin(
                qualified=qualified, digest=metadata_digest(entry.current_meta), first_seen=utc_now_iso()
            )
            entry.pinned_meta = dict(entry.current_meta)
            entry.demoted = False
            return entry.pin

    def snapshot(self) -> list[dict]:
        with self._lock:
            out = []
            for qualified in sorted(self._entries):
                entry = self._entries[qualified]
                view = {
                    "qualified": qualified,
                    "digest": entry.pin.digest,
                    "first_seen": entry.pin.first_seen,
                    "demoted": entry.demoted,
                    "absent": entry.absent,
                }
                if entry.demoted:
                    view["diff"] = {"before": entry.pinned_meta, "after": entry.current_meta}
                out.append(view)
            return out
