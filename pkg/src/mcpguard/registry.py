"""Registry data model: server records, snapshot files, merging, npm metadata.

Snapshot files are line-delimited JSON with a mandatory header line, so they
stream, diff cleanly, and stay registry-agnostic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urlparse

SNAPSHOT_KIND = "mcp-snapshot"
SNAPSHOT_VERSION = 1

# Registry ids used by the bundled fixtures. Loaders accept any non-empty id
# unless a restriction set is passed in.
KNOWN_REGISTRIES = ("mcp.so", "mcp-market", "mcp-store", "pulse-mcp", "smithery", "npm")
CENTRALIZED_REGISTRIES = frozenset({"smithery", "npm"})

# SDK names that mark an npm package as an MCP server. Non-exhaustive by
# design; callers may pass their own set.
DEFAULT_SDK_NAMES = frozenset(
    {"@modelcontextprotocol/sdk", "modelcontextprotocol/sdk", "fastmcp"}
)


class SnapshotError(Exception):
    """Base error for snapshot file handling."""


class MalformedLine(SnapshotError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class DuplicateRecord(SnapshotError):
    def __init__(self, key: tuple[str, str]):
        self.key = key
        super().__init__(f"duplicate record {key[0]}/{key[1]}")


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def is_valid_url(value: str) -> bool:
    """Syntactic URL check; scheme-less host/path forms are accepted."""
    if not value or any(c.isspace() for c in value):
        return False
    candidate = value if "://" in value else f"https://{value}"
    parsed = urlparse(candidate)
    if parsed.scheme not in ("http", "https"):
        return False
    return bool(parsed.netloc) and "." in parsed.netloc


@dataclass(frozen=True)
class ServerRecord:
    """One registry entry as displayed to users."""

    registry_id: str
    server_name: str
    description: str = ""
    hosting_link: str | None = None
    config_example: str | None = None
    submitted_by: str | None = None

    def __post_init__(self) -> None:
        if not self.registry_id:
            raise ValueError("registry_id must be non-empty")
        if not self.server_name:
            raise ValueError("server_name must be non-empty")
        if self.hosting_link is not None and not is_valid_url(self.hosting_link):
            raise ValueError(f"hosting_link is not a valid URL: {self.hosting_link!r}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.registry_id, self.server_name)

    @property
    def subject(self) -> str:
        return f"{self.registry_id}/{self.server_name}"

    def to_json(self) -> dict:
        out: dict = {"registry_id": self.registry_id, "server_name": self.server_name}
        if self.description:
            out["description"] = self.description
        for name in ("hosting_link", "config_example", "submitted_by"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ServerRecord":
        return cls(
            registry_id=data.get("registry_id", ""),
            server_name=data.get("server_name", ""),
            description=data.get("description", ""),
            hosting_link=data.get("hosting_link"),
            config_example=data.get("config_example"),
            submitted_by=data.get("submitted_by"),
        )


@dataclass
class RegistrySnapshot:
    """Ordered collection of server records captured at one point in time."""

    records: list[ServerRecord] = field(default_factory=list)
    captured_at: str = field(default_factory=utc_now_iso)
    source: str = "fixture"  # "fixture" | "live"

    def __post_init__(self) -> None:
        if self.source not in ("fixture", "live"):
            raise ValueError(f"unknown snapshot source: {self.source!r}")
        seen: set[tuple[str, str]] = set()
        for record in self.records:
            if record.key in seen:
                raise DuplicateRecord(record.key)
            seen.add(record.key)

    def by_key(self) -> dict[tuple[str, str], ServerRecord]:
        return {r.key: r for r in self.records}

    def registries(self) -> list[str]:
        seen: dict[str, None] = {}
        for record in self.records:
            seen.setdefault(record.registry_id, None)
        return list(seen)


def normalize_hosting_link(link: str) -> str:
    """Cross-registry identity key for a hosting link.

    Lowercased host, trailing slash and ``.git`` stripped; registries point at
    the same repository in slightly different spellings.
    """
    candidate = link if "://" in link else f"https://{link}"
    parsed = urlparse(candidate)
    host = parsed.netloc.lower()
    if host.startswith("www."):
        host = host[4:]
    path = parsed.path.rstrip("/")
    if path.endswith(".git"):
        path = path[: -len(".git")]
    return f"{host}{path}"


def load_snapshot(path: str | Path, allowed_registries: set[str] | None = None) -> RegistrySnapshot:
    """Parse a snapshot file; any malformed line aborts with its line number."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if not lines:
        raise MalformedLine(1, "missing header line")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise MalformedLine(1, f"header is not JSON: {exc}") from exc
    if not isinstance(header, dict) or header.get("kind") != SNAPSHOT_KIND:
        raise MalformedLine(1, "header kind must be 'mcp-snapshot'")
    if header.get("version") != SNAPSHOT_VERSION:
        raise MalformedLine(1, f"unsupported snapshot version: {header.get('version')!r}")
    source = header.get("source", "fixture")
    captured_at = header.get("captured_at", "")
    if not captured_at:
        raise MalformedLine(1, "header missing captured_at")

    records: list[ServerRecord] = []
    seen: set[tuple[str, str]] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(line_no, f"not JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise MalformedLine(line_no, "record line must be a JSON object")
        try:
            record = ServerRecord.from_json(data)
        except ValueError as exc:
            raise MalformedLine(line_no, str(exc)) from exc
        if allowed_registries is not None and record.registry_id not in allowed_registries:
            raise MalformedLine(line_no, f"registry {record.registry_id!r} not in configured set")
        if record.key in seen:
            raise DuplicateRecord(record.key)
        seen.add(record.key)
        records.append(record)
    snapshot = RegistrySnapshot(records=records, captured_at=captured_at, source=source)
    return snapshot


def write_snapshot(snapshot: RegistrySnapshot, path: str | Path) -> None:
    header = {
        "kind": SNAPSHOT_KIND,
        "version": SNAPSHOT_VERSION,
        "captured_at": snapshot.captured_at,
        "source": snapshot.source,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for record in snapshot.records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")


@dataclass
class OverlapReport:
    """How many normalized hosting links appear in exactly k registries."""

    counts: dict[int, int] = field(default_factory=dict)
    links_by_count: dict[int, list[str]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "links_by_count": {str(k): v for k, v in sorted(self.links_by_count.items())},
        }


def merge_snapshots(snaps: list[RegistrySnapshot]) -> tuple[RegistrySnapshot, OverlapReport]:
    """Union of records keyed by (registry_id, server_name), plus link overlap.

    Order-insensitive: record order is canonical (sorted by key) and key
    conflicts resolve to the lexicographically smallest serialized record.
    """
    if not snaps:
        return RegistrySnapshot(records=[], source="fixture"), OverlapReport(counts={}, links_by_count={})

    chosen: dict[tuple[str, str], ServerRecord] = {}
    for snap in snaps:
        for record in snap.records:
            current = chosen.get(record.key)
            if current is None:
                chosen[record.key] = record
            else:
                a = json.dumps(current.to_json(), sort_keys=True)
                b = json.dumps(record.to_json(), sort_keys=True)
                chosen[record.key] = current if a <= b else record

    merged_records = [chosen[k] for k in sorted(chosen)]
    captured_at = max(s.captured_at for s in snaps)
    source = "fixture" if all(s.source == "fixture" for s in snaps) else "live"
    merged = RegistrySnapshot(records=merged_records, captured_at=captured_at, source=source)

    registries_by_link: dict[str, set[str]] = {}
    for record in merged_records:
        if record.hosting_link:
            link = normalize_hosting_link(record.hosting_link)
            registries_by_link.setdefault(link, set()).add(record.registry_id)
    counts: dict[int, int] = {}
    links_by_count: dict[int, list[str]] = {}
    for link, regs in registries_by_link.items():
        k = len(regs)
        counts[k] = counts.get(k, 0) + 1
        links_by_count.setdefault(k, []).append(link)
    for bucket in links_by_count.values():
        bucket.sort()
    return merged, OverlapReport(counts=counts, links_by_count=links_by_count)


@dataclass(frozen=True)
class NpmPackageMeta:
    """Metadata collected for one npm package candidate."""

    package_name: str
    dependencies: frozenset[str] = frozenset()
    maintainers: frozenset[str] = frozenset()
    version_count: int = 1

    def __post_init__(self) -> None:
        if not self.package_name:
            raise ValueError("package_name must be non-empty")
        if self.version_count < 1:
            raise ValueError("version_count must be >= 1 for a published package")

    def to_json(self) -> dict:
        return {
            "package_name": self.package_name,
            "dependencies": sorted(self.dependencies),
            "maintainers": sorted(self.maintainers),
            "version_count": self.version_count,
        }

    @classmethod
    def from_json(cls, data: dict) -> "NpmPackageMeta":
        return cls(
            package_name=data.get("package_name", ""),
            dependencies=frozenset(data.get("dependencies", ())),
            maintainers=frozenset(data.get("maintainers", ())),
            version_count=int(data.get("version_count", 1)),
        )


def load_npm_meta(path: str | Path) -> list[NpmPackageMeta]:
    packages: list[NpmPackageMeta] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            packages.append(NpmPackageMeta.from_json(json.loads(line)))
        except (json.JSONDecodeError, ValueError) as exc:
            raise MalformedLine(line_no, str(exc)) from exc
    return packages


def write_npm_meta(packages: list[NpmPackageMeta], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for package in packages:
            fh.write(json.dumps(package.to_json(), ensure_ascii=False) + "\n")


def filter_npm_mcp(
    packages: list[NpmPackageMeta], sdk_names: frozenset[str] | set[str] = DEFAULT_SDK_NAMES
) -> list[NpmPackageMeta]:
    """Keep exactly the packages that depend on at least one known MCP SDK."""
    if not sdk_names:
        raise ValueError("sdk_names must be non-empty")
    sdk = frozenset(sdk_names)
    return [p for p in packages if p.dependencies & sdk]
