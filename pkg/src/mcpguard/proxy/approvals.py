"""Approval broker for prompt-mode calls: block, wait, fail closed.

A pending approval belongs to exactly one blocked call. Resolutions are
idempotent per event id; the first decision wins and later ones are no-ops.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

from . import events as ev
from .events import EventBus

APPROVED = "approved"
DENIED = "denied"
TIMED_OUT = "timed_out"
PENDING = "pending"


class UnknownEvent(KeyError):
    def __init__(self, event_id: int):
        self.event_id = event_id
        super().__init__(f"unknown approval event id {event_id}")


@dataclass
class PendingCall:
    event_id: int
    qualified: str
    arguments: dict
    created: str
    state: str = PENDING
    decided_via: str | None = None
    _cv: threading.Condition = field(default_factory=threading.Condition, repr=False)

    def view(self) -> dict:
        return {
            "event_id": self.event_id,
            "qualified": self.qualified,
            "arguments": self.arguments,
            "created": self.created,
            "state": self.state,
        }


class ApprovalBroker:
    def __init__(self, bus: EventBus):
        self._bus = bus
        self._lock = threading.Lock()
        self._calls: dict[int, PendingCall] = {}

    def create(self, qualified: str, arguments: dict) -> PendingCall:
        event = self._bus.emit(
            ev.PENDING_APPROVAL, {"qualified": qualified, "arguments": arguments}
        )
        call = PendingCall(
            event_id=event.id, qualified=qualified, arguments=arguments, created=event.timestamp
        )
        with self._lock:
            self._calls[event.id] = call
        return call

    def wait(self, call: PendingCall, timeout: float) -> str:
        """Blocks only the affected call; timeout resolves to denial."""
        with call._cv:
            call._cv.wait_for(lambda: call.state != PENDING, timeout=timeout)
            if call.state == PENDING:
                call.state = TIMED_OUT
                call.decided_via = "timeout"
        if call.state == TIMED_OUT:
            self._bus.emit(
                ev.APPROVAL_RESOLVED,
                {"event_id": call.event_id, "decision": TIMED_OUT, "via": "timeout"},
            )
        return call.state

    def resolve(self, event_id: int, decision: str, via: str = "control") -> str:
        """Apply approve/deny; repeated calls for the same id are no-ops that
        report the settled state."""
        if decision not in (APPROVED, DENIED):
            raise ValueError(f"decision must be approved or denied, got {decision!r}")
        with self._lock:
            call = self._calls.get(event_id)
        if call is None:
            raise UnknownEvent(event_id)
        with call._cv:
            if call.state != PENDING:
                return call.state
            call.state = decision
            call.decided_via = via
            call._cv.notify_all()
        self._bus.emit(ev.APPROVAL_RESOLVED, {"event_id": event_id, "decision": decision, "via": via})
        return decision

    def get(self, event_id: int) -> PendingCall:
        with self._lock:
            call = self._calls.get(event_id)
        if call is None:
            raise UnknownEvent(event_id)
        return call

    def pending(self) -> list[dict]:
        with self._lock:
            calls = list(self._calls.values())
        return [c.view() for c in calls if c.state == PENDING]


class TtyApprover:
    """Minimal interactive approval frontend over a terminal-like stream.

    Commands: ``a <id>`` approves, ``d <id>`` denies, ``l`` lists pending.
    """

    def __init__(self, broker: ApprovalBroker, in_stream, out_stream):
        self._broker = broker
        self._in = in_stream
        self._out = out_stream
        self._thread: threading.Thread | None = None

    def announce(self, call: PendingCall) -> None:
        self._out.write(
            f"[guard] approval needed #{call.event_id}: {call.qualified} {call.arguments}\n"
            f"[guard] reply 'a {call.event_id}' to approve or 'd {call.event_id}' to deny\n"
        )
        self._out.flush()

    def run(self) -> None:
        for line in self._in:
            parts = line.strip().split()
            if not parts:
                continue
            cmd = parts[0].lower()
            try:
                if cmd == "l":
                    for view in self._broker.pending():
                        self._out.write(f"[guard] pending #{view['event_id']}: {view['qualified']}\n")
                    self._out.flush()
                elif cmd in ("a", "d") and len(parts) == 2:
                    decision = APPROVED if cmd == "a" else DENIED
                    state = self._broker.resolve(int(parts[1]), decision, via="tty")
                    self._out.write(f"[guard] #{parts[1]} -> {state}\n")
                    self._out.flush()
            except (UnknownEvent, ValueError) as exc:
                self._out.write(f"[guard] error: {exc}\n")
                self._out.flush()

    def start(self) -> None:
        self._thread = threading.Thread(target=self.run, daemon=True, name="guard-tty-approver")
        self._thread.start()
