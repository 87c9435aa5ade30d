"""Two-phase registry crawling: index page first, then per-server detail pages.

Field selectors are regular expressions supplied by the registry descriptor,
since every registry renders its pages differently. Live crawls enforce an
ethical floor on the request interval; only injected (mock or recorded)
transports may go faster.
"""
from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlparse

from .fetch import Fetcher, FetchError, LiveFetcher
from .registry import RegistrySnapshot, ServerRecord, utc_now_iso

# Floor for politeness between live requests, in seconds.
DEFAULT_ETHICAL_MIN_INTERVAL = 30.0


class CrawlIntervalError(Exception):
    """Live crawl configured with an interval below the ethical floor."""


@dataclass
class RateLimitSpec:
    interval: float  # minimum seconds between requests to one host

    def __post_init__(self) -> None:
        if self.interval < 0:
            raise ValueError("interval must be >= 0")


@dataclass
class RegistryDescriptor:
    """Where a registry's pages live and how to pull fields out of them."""

    registry_id: str
    index_url: str
    index_pattern: str  # regex with a named group "slug"
    detail_url_template: str  # contains {slug}
    fields: dict[str, str] = field(default_factory=dict)  # field -> regex with group "value"
    api_key_env: str | None = None
    auth_header: str = "Authorization"
    auth_value_template: str = "Bearer {key}"

    @classmethod
    def from_file(cls, path: str | Path) -> "RegistryDescriptor":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            registry_id=data["registry_id"],
            index_url=data["index_url"],
            index_pattern=data["index_pattern"],
            detail_url_template=data["detail_url_template"],
            fields=dict(data.get("fields", {})),
            api_key_env=data.get("api_key_env"),
            auth_header=data.get("auth_header", "Authorization"),
            auth_value_template=data.get("auth_value_template", "Bearer {key}"),
        )


@dataclass
class CrawlError:
    url: str
    cause: str


@dataclass
class CrawlResult:
    snapshot: RegistrySnapshot
    errors: list[CrawlError] = field(default_factory=list)


class HostRateLimiter:
    """Spaces requests per target host; the contract holds across workers
    because state is keyed by host and consulted before every request."""

    def __init__(self, interval: float, clock=time.monotonic, sleep=time.sleep):
        self._interval = interval
        self._clock = clock
        self._sleep = sleep
        self._last: dict[str, float] = {}

    def wait(self, url: str) -> None:
        host = urlparse(url).netloc
        last = self._last.get(host)
        if last is not None:
            remaining = self._interval - (self._clock() - last)
            if remaining > 0:
                self._sleep(remaining)
        self._last[host] = self._clock()


def build_live_fetcher(descriptor: RegistryDescriptor) -> LiveFetcher:
    """Live transport for a registry; reads the API key env var only when the
    descriptor names one."""
    headers: dict[str, str] = {}
    if descriptor.api_key_env:
        key = os.environ.get(descriptor.api_key_env)
        if not key:
            raise RuntimeError(
                f"descriptor requires API key from ${descriptor.api_key_env}, which is unset"
            )
        headers[descriptor.auth_header] = descriptor.auth_value_template.format(key=key)
    return LiveFetcher(headers=headers)


def crawl_registry(
    descriptor: RegistryDescriptor,
    limiter: RateLimitSpec,
    fetcher: Fetcher | None = None,
    *,
    live: bool | None = None,
    ethical_min_interval: float = DEFAULT_ETHICAL_MIN_INTERVAL,
) -> CrawlResult:
    """Index page, then one detail page per server. Page failures are recorded
    and skipped; they never abort the crawl.

    ``live`` defaults to True when no fetcher is injected. A live crawl with
    an interval below ``ethical_min_interval`` is refused before any request.
    """
    if live is None:
        live = fetcher is None
    if live and limiter.interval < ethical_min_interval:
        raise CrawlIntervalError(
            f"live crawl interval {limiter.interval}s is below the floor "
            f"{ethical_min_interval}s; slow down or use a recorded transport"
        )
    if fetcher is None:
        fetcher = build_live_fetcher(descriptor)

    rate = HostRateLimiter(limiter.interval)
    errors: list[CrawlError] = []
    records: list[ServerRecord] = []
    seen_names: set[str] = set()

    rate.wait(descriptor.index_url)
    try:
        index = fetcher.fetch("GET", descriptor.index_url)
    except FetchError as exc:
        errors.append(CrawlError(url=descriptor.index_url, cause=exc.cause))
        snapshot = RegistrySnapshot(records=[], captured_at=utc_now_iso(), source="live")
        return CrawlResult(snapshot=snapshot, errors=errors)
    if index.status != 200:
        errors.append(CrawlError(url=descriptor.index_url, cause=f"status {index.status}"))
        snapshot = RegistrySnapshot(records=[], captured_at=utc_now_iso(), source="live")
        return CrawlResult(snapshot=snapshot, errors=errors)

    slugs: list[str] = []
    for match in re.finditer(descriptor.index_pattern, index.body, re.DOTALL):
        slug = match.group("slug")
        if slug not in slugs:
            slugs.append(slug)

    field_patterns = {name: re.compile(pat, re.DOTALL) for name, pat in descriptor.fields.items()}
    for slug in slugs:
        url = descriptor.detail_url_template.format(slug=slug)
        rate.wait(url)
        try:
            page = fetcher.fetch("GET", url)
        except FetchError as exc:
            errors.append(CrawlError(url=url, cause=exc.cause))
            continue
        if page.status != 200:
            errors.append(CrawlError(url=url, cause=f"status {page.status}"))
            continue
        values: dict[str, str] = {}
        for name, pattern in field_patterns.items():
            found = pattern.search(page.body)
            if found:
                values[name] = found.group("value").strip()
        server_name = values.get("server_name") or slug
        if server_name in seen_names:
            errors.append(CrawlError(url=url, cause=f"duplicate server name {server_name!r}"))
            continue
        seen_names.add(server_name)
        try:
            records.append(
                ServerRecord(
                    registry_id=descriptor.registry_id,
                    server_name=server_name,
                    description=values.get("description", ""),
                    hosting_link=values.get("hosting_link"),
                    config_example=values.get("config_example"),
                    submitted_by=values.get("submitted_by"),
                )
            )
        except ValueError as exc:
            errors.append(CrawlError(url=url, cause=str(exc)))

    snapshot = RegistrySnapshot(records=records, captured_at=utc_now_iso(), source="live")
    return CrawlResult(snapshot=snapshot, errors=errors)
