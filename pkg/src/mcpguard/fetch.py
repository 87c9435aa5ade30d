"""HTTP transport abstraction: live requests and recorded-response replay.

Everything that talks to the network goes through a ``Fetcher`` so probes can
be replayed offline from a recorded-responses file:

    { "GET <url>": {"status": 200, "body": "...", "headers": {...}} }

An entry may carry ``"error": "timeout"`` instead of a status to simulate a
transport failure.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import requests


class FetchError(Exception):
    """Transport-level failure (timeout, DNS, connection refused)."""

    def __init__(self, url: str, cause: str):
        self.url = url
        self.cause = cause
        super().__init__(f"{url}: {cause}")


@dataclass
class FetchResponse:
    status: int
    body: str = ""
    headers: dict[str, str] = field(default_factory=dict)

    def header(self, name: str) -> str | None:
        target = name.lower()
        for key, value in self.headers.items():
            if key.lower() == target:
                return value
        return None

    def json(self):
        return json.loads(self.body)


class Fetcher(Protocol):
    def fetch(self, method: str, url: str, headers: dict[str, str] | None = None) -> FetchResponse: ...


@dataclass
class LoggedRequest:
    method: str
    url: str
    at: float  # time.monotonic() timestamp


class RecordedFetcher:
    """Replays responses from a recorded-responses mapping.

    Never touches the network; unknown URLs raise FetchError so an offline
    run fails loudly instead of probing live services.
    """

    def __init__(self, responses: dict[str, dict]):
        self._responses = responses
        self.request_log: list[LoggedRequest] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "RecordedFetcher":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def fetch(self, method: str, url: str, headers: dict[str, str] | None = None) -> FetchResponse:
        self.request_log.append(LoggedRequest(method=method, url=url, at=time.monotonic()))
        entry = self._responses.get(f"{method} {url}")
        if entry is None:
            raise FetchError(url, "no recorded response")
        if "error" in entry:
            raise FetchError(url, entry["error"])
        return FetchResponse(
            status=int(entry["status"]),
            body=entry.get("body", ""),
            headers=dict(entry.get("headers", {})),
        )


class LiveFetcher:
    """requests-backed transport. Redirects are never auto-followed; callers
    that care about redirect chains walk them explicitly."""

    def __init__(self, timeout: float = 15.0, headers: dict[str, str] | None = None):
        self._timeout = timeout
        self._session = requests.Session()
        if headers:
            self._session.headers.update(headers)
        self.request_log: list[LoggedRequest] = []

    def fetch(self, method: str, url: str, headers: dict[str, str] | None = None) -> FetchResponse:
        self.request_log.append(LoggedRequest(method=method, url=url, at=time.monotonic()))
        try:
            resp = self._session.request(
                method, url, headers=headers, timeout=self._timeout, allow_redirects=False
            )
        except requests.RequestException as exc:
            raise FetchError(url, str(exc)) from exc
        return FetchResponse(status=resp.status_code, body=resp.text, headers=dict(resp.headers))
