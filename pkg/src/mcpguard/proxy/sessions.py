"""Downstream sessions: stdio child processes and remote URL servers.

Each session serializes its own request/response matching by JSON-RPC id;
callers may issue calls from any thread.
"""
from __future__ import annotations

import json
import os
import subprocess
import sys
import threading
from typing import Protocol

import requests

from .config import ServerSpec

PROTOCOL_VERSION = "2025-03-26"
CLIENT_INFO = {"name": "mcpguard-proxy", "version": "0.1.0"}
DEFAULT_CALL_TIMEOUT = 30.0


class SessionError(Exception):
    def __init__(self, server: str, cause: str):
        self.server = server
        self.cause = cause
        super().__init__(f"session {server!r}: {cause}")


class ToolCallError(SessionError):
    """Downstream answered a tools/call with a JSON-RPC error."""

    def __init__(self, server: str, code: int, message: str):
        super().__init__(server, f"downstream error {code}: {message}")
        self.code = code
        self.message = message


class Session(Protocol):
    name: str
    transport: str

    def list_tools(self) -> list[dict]: ...
    def call_tool(self, tool: str, arguments: dict) -> dict: ...
    def close(self) -> None: ...


class StdioSession:
    """Child process speaking newline-delimited JSON-RPC on its stdio."""

    transport = "stdio"

    def __init__(self, spec: ServerSpec, call_timeout: float = DEFAULT_CALL_TIMEOUT):
        assert spec.command is not None
        self.name = spec.name
        self._timeout = call_timeout
        self._write_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._next_id = 1
        self._waiting: dict[int, tuple[threading.Event, list]] = {}
        env = dict(os.environ)
        env.update(spec.env_dict())
        try:
            self._proc = subprocess.Popen(
                [spec.command, *spec.args],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=sys.stderr.fileno() if hasattr(sys.stderr, "fileno") else subprocess.DEVNULL,
                env=env,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise SessionError(spec.name, f"spawn failed: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, daemon=True, name=f"session-{spec.name}")
        self._reader.start()
        self._initialize()

    def _read_loop(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                message = json.loads(line)
            except json.JSONDecodeError:
                continue
            msg_id = message.get("id")
            if msg_id is None:
                continue  # notifications from downstream are not interposed
            with self._state_lock:
                waiter = self._waiting.pop(msg_id, None)
            if waiter is not None:
                event, slot = waiter
                slot.append(message)
                event.set()

    def _request(self, method: str, params: dict | None) -> dict:
        with self._state_lock:
            if self._proc.poll() is not None:
                raise SessionError(self.name, "process exited")
            msg_id = self._next_id
            self._next_id += 1
            event = threading.Event()
            slot: list = []
            self._waiting[msg_id] = (event, slot)
        payload: dict = {"jsonrpc": "2.0", "id": msg_id, "method": method}
        if params is not None:
            payload["params"] = params
        self._send(payload)
        if not event.wait(self._timeout):
            with self._state_lock:
                self._waiting.pop(msg_id, None)
            raise SessionError(self.name, f"timeout waiting for {method}")
        response = slot[0]
        if "error" in response:
            error = response["error"]
            raise ToolCallError(self.name, int(error.get("code", -32603)), str(error.get("message", "")))
        return response.get("result", {})

    def _send(self, payload: dict) -> None:
        assert self._proc.stdin is not None
        data = json.dumps(payload, ensure_ascii=False) + "\n"
        with self._write_lock:
            try:
                self._proc.stdin.write(data)
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError, OSError) as exc:
                raise SessionError(self.name, f"write failed: {exc}") from exc

    def _initialize(self) -> None:
        self._request(
            "initialize",
            {"protocolVersion": PROTOCOL_VERSION, "capabilities": {}, "clientInfo": CLIENT_INFO},
        )
        self._send({"jsonrpc": "2.0", "method": "notifications/initialized"})

    def list_tools(self) -> list[dict]:
        result = self._request("tools/list", {})
        tools = result.get("tools", [])
        if not isinstance(tools, list):
            raise SessionError(self.name, "tools/list returned a non-list")
        return tools

    def call_tool(self, tool: str, arguments: dict) -> dict:
        return self._request("tools/call", {"name": tool, "arguments": arguments})

    def forward_raw(self, method: str, params: dict | None) -> dict:
        return self._request(method, params)

    def close(self) -> None:
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.terminate()
            self._proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            self._proc.kill()


class HttpSession:
    """Remote server behind a URL; one JSON-RPC request per HTTP POST.

    Streaming responses are negotiated by Accept header; a downstream that
    answers with an event stream gets its first data frame used as the
    response. The chosen variant is recorded in ``transport``.
    """

    def __init__(self, spec: ServerSpec, call_timeout: float = DEFAULT_CALL_TIMEOUT):
        assert spec.url is not None
        self.name = spec.name
        self.transport = "http"
        self._url = spec.url
        self._timeout = call_timeout
        self._session = requests.Session()
        self._lock = threading.Lock()
        self._next_id = 1
        self._initialize()

    def _request(self, method: str, params: dict | None) -> dict:
        with self._lock:
            msg_id = self._next_id
            self._next_id += 1
        payload: dict = {"jsonrpc": "2.0", "id": msg_id, "method": method}
        if params is not None:
            payload["params"] = params
        try:
            resp = self._session.post(
                self._url,
                json=payload,
                timeout=self._timeout,
                headers={"Accept": "application/json, text/event-stream"},
            )
        except requests.RequestException as exc:
            raise SessionError(self.name, f"http failure: {exc}") from exc
        if resp.status_code != 200:
            raise SessionError(self.name, f"http status {resp.status_code}")
        content_type = resp.headers.get("Content-Type", "")
        if "text/event-stream" in content_type:
            self.transport = "http+sse"
            message = self._first_sse_message(resp.text)
        else:
            message = resp.json()
        if "error" in message:
            error = message["error"]
            raise ToolCallError(self.name, int(error.get("code", -32603)), str(error.get("message", "")))
        return message.get("result", {})

    @staticmethod
    def _first_sse_message(body: str) -> dict:
        for line in body.splitlines():
            if line.startswith("data:"):
                return json.loads(line[len("data:") :].strip())
        raise ValueError("no data frame in event stream")

    def _initialize(self) -> None:
        self._request(
            "initialize",
            {"protocolVersion": PROTOCOL_VERSION, "capabilities": {}, "clientInfo": CLIENT_INFO},
        )

    def list_tools(self) -> list[dict]:
        result = self._request("tools/list", {})
        return list(result.get("tools", []))

    def call_tool(self, tool: str, arguments: dict) -> dict:
        return self._request("tools/call", {"name": tool, "arguments": arguments})

    def forward_raw(self, method: str, params: dict | None) -> dict:
        return self._request(method, params)

    def close(self) -> None:
        self._session.close()


def default_session_factory(spec: ServerSpec) -> Session:
    if spec.is_local:
        return StdioSession(spec)
    return HttpSession(spec)
