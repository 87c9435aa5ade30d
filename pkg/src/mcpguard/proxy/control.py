"""Loopback control API: approval queue, pins, re-pin, refresh, event stream.

Plain stdlib HTTP on 127.0.0.1. The event stream is server-sent events with
the control-event id as the SSE id, so consoles resume with a cursor after a
drop. Optionally serves the operator console as static files.
"""
from __future__ import annotations

import json
import logging
import mimetypes
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .approvals import APPROVED, DENIED, UnknownEvent
from .core import GuardProxy

logger = logging.getLogger(__name__)

SSE_HEARTBEAT_SECONDS = 15.0


class ControlServer:
    def __init__(
        self,
        proxy: GuardProxy,
        port: int = 0,
        host: str = "127.0.0.1",
        console_dir: str | Path | None = None,
    ):
        self._proxy = proxy
        self._console_dir = Path(console_dir).resolve() if console_dir else None
        handler = _build_handler(proxy, self._console_dir)
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True, name="guard-control")
        self._thread.start()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()


def _build_handler(proxy: GuardProxy, console_dir: Path | None):
    class ControlHandler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # route through logging, not stderr
            logger.debug("control: " + fmt, *args)

        def _json(self, status: int, payload: dict) -> None:
            body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length", "0"))
            if length == 0:
                return {}
            raw = self.rfile.read(length)
            try:
                data = json.loads(raw)
            except json.JSONDecodeError:
                return {}
            return data if isinstance(data, dict) else {}

        # -- GET ---------------------------------------------------------------

        def do_GET(self) -> None:
            path, _, query = self.path.partition("?")
            if path == "/state":
                self._json(
                    200,
                    {
                        "pending": self._proxy_pending(),
                        "pins": proxy.pin_views(),
                        "cursor": proxy.bus.latest_id(),
                    },
                )
            elif path == "/approvals":
                self._json(200, {"pending": self._proxy_pending()})
            elif path == "/pins":
                self._json(200, {"pins": proxy.pin_views()})
            elif path == "/events":
                self._stream_events(query)
            elif console_dir is not None:
                self._serve_static(path)
            else:
                self._json(404, {"error": "not_found"})

        def _proxy_pending(self) -> list[dict]:
            return proxy.pending_approvals()

        def _serve_static(self, path: str) -> None:
            assert console_dir is not None
            rel = path.lstrip("/") or "index.html"
            target = (console_dir / rel).resolve()
            if not str(target).startswith(str(console_dir)) or not target.is_file():
                self._json(404, {"error": "not_found"})
                return
            body = target.read_bytes()
            content_type = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
            self.send_response(200)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _stream_events(self, query: str) -> None:
            cursor = 0
            for part in query.split("&"):
                if part.startswith("cursor="):
                    try:
                        cursor = int(part.split("=", 1)[1])
                    except ValueError:
                        cursor = 0
            last_event_id = self.headers.get("Last-Event-ID")
            if last_event_id:
                try:
                    cursor = max(cursor, int(last_event_id))
                except ValueError:
                    pass

            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-store")
            self.send_header("Connection", "keep-alive")
            self.end_headers()

            q, replay = proxy.bus.subscribe(after=cursor)
            try:
                for event in replay:
                    self._write_sse(event)
                while True:
                    try:
                        event = q.get(timeout=SSE_HEARTBEAT_SECONDS)
                    except queue.Empty:
                        self.wfile.write(b": heartbeat\n\n")
                        self.wfile.flush()
                        continue
                    self._write_sse(event)
            except (BrokenPipeError, ConnectionResetError, OSError):
                pass
            finally:
                proxy.bus.unsubscribe(q)

        def _write_sse(self, event) -> None:
            frame = (
                f"id: {event.id}\n"
                f"event: {event.kind}\n"
                f"data: {json.dumps(event.to_json(), ensure_ascii=False)}\n\n"
            )
            self.wfile.write(frame.encode("utf-8"))
            self.wfile.flush()

        # -- POST ---------------------------------------------------------------

        def do_POST(self) -> None:
            path = self.path.partition("?")[0]
            parts = [p for p in path.split("/") if p]
            if len(parts) == 2 and parts[0] == "approvals":
                self._post_approval(parts[1])
            elif parts == ["pins", "repin"]:
                self._post_repin()
            elif parts == ["refresh"]:
                body = self._read_body()
                diffs = proxy.refresh(trigger=body.get("trigger", "on_reenable"))
                self._json(200, {"diffs": diffs})
            else:
                self._json(404, {"error": "not_found"})

        def _post_approval(self, raw_id: str) -> None:
            try:
                event_id = int(raw_id)
            except ValueError:
                self._json(400, {"error": "bad_event_id"})
                return
            body = self._read_body()
            decision = body.get("decision")
            if decision not in ("approve", "deny"):
                self._json(400, {"error": "decision must be approve or deny"})
                return
            try:
                state = proxy.broker.resolve(
                    event_id, APPROVED if decision == "approve" else DENIED, via="control"
                )
            except UnknownEvent:
                self._json(404, {"error": "unknown_event", "event_id": event_id})
                return
            self._json(200, {"event_id": event_id, "state": state})

        def _post_repin(self) -> None:
            body = self._read_body()
            qualified = body.get("qualified")
            if not isinstance(qualified, str) or not qualified:
                self._json(400, {"error": "qualified is required"})
                return
            try:
                pin = proxy.repin(qualified)
            except KeyError:
                self._json(404, {"error": "unknown_pin", "qualified": qualified})
                return
            self._json(200, pin)

    return ControlHandler
