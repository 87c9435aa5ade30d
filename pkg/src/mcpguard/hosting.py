"""Hosting-link resolution: link validity, repo facts, account availability,
and redirection detection.

Link status is three-valued on purpose: transient failures map to
``unreachable`` and never to ``invalid``, so a flaky network can never make a
server look hijackable.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urljoin, urlparse

from .fetch import Fetcher, FetchError, FetchResponse
from .registry import RegistrySnapshot, utc_now_iso

logger = logging.getLogger(__name__)

CODE_HOST = "github.com"
API_BASE = "https://api.github.com"
WEB_BASE = "https://github.com"

STATUSES_KIND = "mcp-hosting-statuses"
STATUSES_VERSION = 1

# link_status values
VALID = "valid"
INVALID = "invalid"
UNREACHABLE = "unreachable"

# tri-state values
YES = "yes"
NO = "no"
UNKNOWN = "unknown"

# owner_account values
EXISTS = "exists"
AVAILABLE = "available"

EMPTY_REPO_MESSAGE = "This repository is empty"


class ApiRateLimited(Exception):
    """Hosting API refused the probe; back off and retry later."""


@dataclass(frozen=True)
class HostingRef:
    """Parsed hosting link: either owner/repo on the code host, or any other URL.

    ``original_url`` is informational only; two refs are the same location
    regardless of the spelling they were parsed from.
    """

    kind: str  # "code_host" | "other_url"
    url: str  # canonical rendering
    owner: str | None = None
    repo: str | None = None
    original_url: str = field(default="", compare=False)

    @property
    def is_code_host(self) -> bool:
        return self.kind == "code_host"

    def render(self) -> str:
        return self.url

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind, "url": self.url, "original_url": self.original_url}
        if self.owner is not None:
            out["owner"] = self.owner
        if self.repo is not None:
            out["repo"] = self.repo
        return out

    @classmethod
    def from_json(cls, data: dict) -> "HostingRef":
        return cls(
            kind=data["kind"],
            url=data["url"],
            owner=data.get("owner"),
            repo=data.get("repo"),
            original_url=data.get("original_url", ""),
        )


def parse_hosting_ref(url: str) -> HostingRef:
    """Normalize a hosting link. Code-host URLs reduce to (owner, repo);
    anything else passes through as other_url. Never raises."""
    cleaned = url.strip()
    candidate = cleaned if "://" in cleaned else f"https://{cleaned}"
    parsed = urlparse(candidate)
    host = parsed.netloc.lower()
    if ":" in host:
        host = host.split(":", 1)[0]
    if host.startswith("www."):
        host = host[4:]
    if host == CODE_HOST:
        parts = [p for p in parsed.path.split("/") if p]
        if len(parts) >= 2:
            owner, repo = parts[0], parts[1]
            if repo.endswith(".git"):
                repo = repo[: -len(".git")]
            if owner and repo:
                return HostingRef(
                    kind="code_host",
                    url=f"https://{CODE_HOST}/{owner}/{repo}",
                    owner=owner,
                    repo=repo,
                    original_url=cleaned,
                )
    return HostingRef(kind="other_url", url=cleaned, original_url=cleaned)


@dataclass
class HostingStatus:
    """Resolved facts about one hosting location."""

    ref: HostingRef
    link_status: str
    repo_empty: str = UNKNOWN
    readme_present: str = UNKNOWN
    primary_language: str | None = None
    owner_account: str = UNKNOWN
    redirected_to_owner: str | None = None
    checked_at: str = field(default_factory=utc_now_iso)

    def __post_init__(self) -> None:
        if self.link_status != VALID and (self.repo_empty != UNKNOWN or self.readme_present != UNKNOWN):
            raise ValueError("repo facts require a valid link")
        if (
            self.redirected_to_owner is not None
            and self.ref.owner is not None
            and self.redirected_to_owner.casefold() == self.ref.owner.casefold()
        ):
            raise ValueError("redirected_to_owner must differ from ref.owner")

    def to_json(self) -> dict:
        out = {
            "ref": self.ref.to_json(),
            "link_status": self.link_status,
            "repo_empty": self.repo_empty,
            "readme_present": self.readme_present,
            "owner_account": self.owner_account,
            "checked_at": self.checked_at,
        }
        if self.primary_language is not None:
            out["primary_language"] = self.primary_language
        if self.redirected_to_owner is not None:
            out["redirected_to_owner"] = self.redirected_to_owner
        return out

    @classmethod
    def from_json(cls, data: dict) -> "HostingStatus":
        return cls(
            ref=HostingRef.from_json(data["ref"]),
            link_status=data["link_status"],
            repo_empty=data.get("repo_empty", UNKNOWN),
            readme_present=data.get("readme_present", UNKNOWN),
            primary_language=data.get("primary_language"),
            owner_account=data.get("owner_account", UNKNOWN),
            redirected_to_owner=data.get("redirected_to_owner"),
            checked_at=data.get("checked_at", ""),
        )


@dataclass
class ResolvedServer:
    """One statuses-file line: which record a HostingStatus belongs to."""

    registry_id: str
    server_name: str
    status: HostingStatus

    @property
    def subject(self) -> str:
        return f"{self.registry_id}/{self.server_name}"

    def to_json(self) -> dict:
        return {
            "registry_id": self.registry_id,
            "server_name": self.server_name,
            **self.status.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ResolvedServer":
        return cls(
            registry_id=data["registry_id"],
            server_name=data["server_name"],
            status=HostingStatus.from_json(data),
        )


def _is_rate_limited(resp: FetchResponse) -> bool:
    if resp.status == 429:
        return True
    if resp.status == 403 and "rate limit" in resp.body.lower():
        return True
    return False


class HostingResolver:
    """Runs all probes through one transport with a per-run cache, so a fixed
    mock-API state always resolves to the same statuses regardless of order."""

    def __init__(
        self,
        fetcher: Fetcher,
        *,
        api_base: str = API_BASE,
        web_base: str = WEB_BASE,
        max_redirects: int = 5,
        retries: int = 2,
    ):
        self._fetcher = fetcher
        self._api_base = api_base
        self._web_base = web_base
        self._max_redirects = max_redirects
        self._retries = retries
        self._cache: dict[str, FetchResponse | FetchError] = {}
        self.rate_limit_hits = 0

    def _fetch(self, url: str) -> FetchResponse:
        cached = self._cache.get(url)
        if cached is not None:
            if isinstance(cached, FetchError):
                raise cached
            return cached
        last_error: FetchError | None = None
        for _ in range(self._retries + 1):
            try:
                resp = self._fetcher.fetch("GET", url)
                self._cache[url] = resp
                return resp
            except FetchError as exc:
                last_error = exc
        assert last_error is not None
        self._cache[url] = last_error
        raise last_error

    def _walk_redirects(self, url: str) -> tuple[FetchResponse | None, str, int, bool]:
        """Follow up to max_redirects hops. Returns (final response or None on
        transport failure, final url, hop count, looped)."""
        current = url
        for hop in range(self._max_redirects + 1):
            try:
                resp = self._fetch(current)
            except FetchError:
                return None, current, hop, False
            if resp.status in (301, 302, 303, 307, 308):
                location = resp.header("Location")
                if not location:
                    return resp, current, hop, False
                current = urljoin(current, location)
                continue
            return resp, current, hop, False
        logger.warning("redirect cap reached walking %s", url)
        return None, current, self._max_redirects, True

    def check_link(self, ref: HostingRef) -> str:
        """200 -> valid, 404 -> invalid, anything else -> unreachable."""
        resp, _, _, looped = self._walk_redirects(ref.url)
        if looped or resp is None:
            return UNREACHABLE
        if resp.status == 200:
            return VALID
        if resp.status == 404:
            return INVALID
        return UNREACHABLE

    def detect_redirection(self, ref: HostingRef) -> str | None:
        """Owner of the final URL when the link redirects off the original
        owner; redirect loops count as no redirection (with a warning)."""
        if not ref.is_code_host:
            return None
        resp, final_url, hops, looped = self._walk_redirects(ref.url)
        if looped or resp is None or resp.status != 200 or hops == 0:
            return None
        final_ref = parse_hosting_ref(final_url)
        if not final_ref.is_code_host or final_ref.owner is None or ref.owner is None:
            return None
        if final_ref.owner.casefold() != ref.owner.casefold():
            return final_ref.owner
        return None

    def check_repo_facts(self, ref: HostingRef) -> tuple[str, str, str | None]:
        """(repo_empty, readme_present, primary_language) via the hosting API.

        Raises ApiRateLimited when the API refuses; the caller keeps the facts
        unknown and retries later.
        """
        contents_url = f"{self._api_base}/repos/{ref.owner}/{ref.repo}/contents/"
        try:
            contents = self._fetch(contents_url)
        except FetchError:
            return UNKNOWN, UNKNOWN, None
        if _is_rate_limited(contents):
            raise ApiRateLimited(contents_url)
        if contents.status == 404 and EMPTY_REPO_MESSAGE.lower() in contents.body.lower():
            return YES, UNKNOWN, None
        if contents.status != 200:
            return UNKNOWN, UNKNOWN, None

        readme_url = f"{self._api_base}/repos/{ref.owner}/{ref.repo}/readme"
        readme = UNKNOWN
        try:
            readme_resp = self._fetch(readme_url)
            if _is_rate_limited(readme_resp):
                raise ApiRateLimited(readme_url)
            if readme_resp.status == 200:
                readme = YES
            elif readme_resp.status == 404:
                readme = NO
        except FetchError:
            pass

        language: str | None = None
        languages_url = f"{self._api_base}/repos/{ref.owner}/{ref.repo}/languages"
        try:
            lang_resp = self._fetch(languages_url)
            if _is_rate_limited(lang_resp):
                raise ApiRateLimited(languages_url)
            if lang_resp.status == 200:
                byte_counts = lang_resp.json()
                if isinstance(byte_counts, dict) and byte_counts:
                    # most-bytes language wins; name breaks ties deterministically
                    language = max(byte_counts.items(), key=lambda kv: (kv[1], kv[0]))[0]
        except (FetchError, json.JSONDecodeError):
            pass
        return NO, readme, language

    def check_account_available(self, owner: str) -> str:
        """exists on 200, available only when both the user and the org
        endpoint answer 404, unknown otherwise."""
        if not owner:
            raise ValueError("owner must be non-empty")
        user_url = f"{self._api_base}/users/{owner}"
        try:
            user_resp = self._fetch(user_url)
        except FetchError:
            return UNKNOWN
        if _is_rate_limited(user_resp):
            self.rate_limit_hits += 1
            raise ApiRateLimited(user_url)
        if user_resp.status == 200:
            return EXISTS
        if user_resp.status != 404:
            return UNKNOWN
        # user endpoint says gone; organizations sometimes only answer here
        org_url = f"{self._api_base}/orgs/{owner}"
        try:
            org_resp = self._fetch(org_url)
        except FetchError:
            return UNKNOWN
        if _is_rate_limited(org_resp):
            self.rate_limit_hits += 1
            raise ApiRateLimited(org_url)
        if org_resp.status == 200:
            return EXISTS
        if org_resp.status == 404:
            return AVAILABLE
        return UNKNOWN

    def resolve(self, url: str) -> HostingStatus:
        """All facts for one hosting link. The owner account is probed only
        when it matters: invalid links and off-owner redirects."""
        ref = parse_hosting_ref(url)
        link_status = self.check_link(ref)

        repo_empty = UNKNOWN
        readme = UNKNOWN
        language: str | None = None
        redirected: str | None = None
        owner_account = UNKNOWN

        if link_status == VALID and ref.is_code_host:
            redirected = self.detect_redirection(ref)
            try:
                repo_empty, readme, language = self.check_repo_facts(ref)
            except ApiRateLimited:
                self.rate_limit_hits += 1
        if ref.is_code_host and ref.owner and (link_status == INVALID or redirected is not None):
            try:
                owner_account = self.check_account_available(ref.owner)
            except ApiRateLimited:
                owner_account = UNKNOWN

        return HostingStatus(
            ref=ref,
            link_status=link_status,
            repo_empty=repo_empty,
            readme_present=readme,
            primary_language=language,
            owner_account=owner_account,
            redirected_to_owner=redirected,
        )


def resolve_snapshot(snapshot: RegistrySnapshot, resolver: HostingResolver) -> list[ResolvedServer]:
    """One status per record that carries a hosting link."""
    resolved: list[ResolvedServer] = []
    for record in snapshot.records:
        if not record.hosting_link:
            continue
        status = resolver.resolve(record.hosting_link)
        resolved.append(
            ResolvedServer(registry_id=record.registry_id, server_name=record.server_name, status=status)
        )
    return resolved


def write_statuses(entries: list[ResolvedServer], path: str | Path) -> None:
    header = {"kind": STATUSES_KIND, "version": STATUSES_VERSION, "checked_at": utc_now_iso()}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for entry in entries:
            fh.write(json.dumps(entry.to_json(), ensure_ascii=False) + "\n")


def load_statuses(path: str | Path) -> list[ResolvedServer]:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if not lines:
        raise ValueError("statuses file is empty")
    header = json.loads(lines[0])
    if header.get("kind") != STATUSES_KIND:
        raise ValueError("not a statuses file")
    return [ResolvedServer.from_json(json.loads(line)) for line in lines[1:] if line.strip()]
