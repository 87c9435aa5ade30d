"""Control events: the proxy's observable surface for operators.

Every security-relevant transition emits one event with a session-unique id.
Events fan out to the in-memory history (cursor replay for reconnecting
consoles), subscriber queues (server-push), and an optional JSONL log.
"""
from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass
from pathlib import Path

from ..registry import utc_now_iso

PENDING_APPROVAL = "pending_approval"
METADATA_DIFF = "metadata_diff"
COLLISION_WARNING = "collision_warning"
DANGLING_REJECTED = "dangling_rejected"
RESULT_FLAGGED = "result_flagged"
# audit trail for the approval queue; every operator decision lands here
APPROVAL_RESOLVED = "approval_resolved"


@dataclass(frozen=True)
class ControlEvent:
    id: int
    kind: str
    timestamp: str
    payload: dict

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.kind, "timestamp": self.timestamp, "payload": self.payload}


class EventBus:
    def __init__(self, log_path: str | Path | None = None):
        self._lock = threading.Lock()
        self._next_id = 1
        self._history: list[ControlEvent] = []
        self._subscribers: list[queue.Queue] = []
        self._log_path = Path(log_path) if log_path else None
        if self._log_path:
            self._log_path.parent.mkdir(parents=True, exist_ok=True)

    def emit(self, kind: str, payload: dict) -> ControlEvent:
        with self._lock:
            event = ControlEvent(id=self._next_id, kind=kind, timestamp=utc_now_iso(), payload=payload)
            self._next_id += 1
            self._history.append(event)
            subscribers = list(self._subscribers)
        if self._log_path:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_json(), ensure_ascii=False) + "\n")
        for q in subscribers:
            q.put(event)
        return event

    def history(self, after: int = 0) -> list[ControlEvent]:
        with self._lock:
            return [e for e in self._history if e.id > after]

    def latest_id(self) -> int:
        with self._lock:
            return self._next_id - 1

    def subscribe(self, after: int = 0) -> tuple[queue.Queue, list[ControlEvent]]:
        """Queue of future events plus the replay of everything past the cursor.

        Registration and replay happen under one lock so no event is lost or
        duplicated between them.
        """
        q: queue.Queue = queue.Queue()
        with self._lock:
            replay = [e for e in self._history if e.id > after]
            self._subscribers.append(q)
        return q, replay

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)
