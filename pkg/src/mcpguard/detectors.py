"""Detectors: one analyzer per weakness class.

Every detector is a pure function over immutable inputs and yields findings
in a deterministic order, so the suite can run them in any order or in
parallel and still produce an identical findings file.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .extractor import ToolRecord
from .findings import Category, Finding, make_finding, sort_findings
from .hosting import AVAILABLE, INVALID, NO, VALID, YES, ResolvedServer, parse_hosting_ref
from .lexicon import PoisonLexicon, SecretRuleSet, instruction_like_spans, load_poison_lexicon
from .registry import CENTRALIZED_REGISTRIES, NpmPackageMeta, RegistrySnapshot
from .secrets import scan_secrets

DEFAULT_VERSION_ANOMALY_THRESHOLD = 20


# ---------------------------------------------------------------------------
# Missing information and hijackability (hosting-status driven)
# ---------------------------------------------------------------------------


def check_status_coverage(snapshot: RegistrySnapshot, entries: list[ResolvedServer]) -> None:
    """Every record with a hosting link needs a resolved status."""
    covered = {(e.registry_id, e.server_name) for e in entries}
    missing = [r.subject for r in snapshot.records if r.hosting_link and r.key not in covered]
    if missing:
        raise ValueError(f"statuses missing for: {', '.join(sorted(missing))}")


def detect_missing_info(snapshot: RegistrySnapshot, entries: list[ResolvedServer]) -> list[Finding]:
    """Invalid links, empty repositories, and missing READMEs.

    Unreachable links produce nothing: a transient failure is not evidence.
    """
    check_status_coverage(snapshot, entries)
    findings: list[Finding] = []
    for entry in entries:
        status = entry.status
        if status.link_status == INVALID:
            findings.append(
                make_finding(
                    Category.INVALID_LINK,
                    entry.subject,
                    {"link": status.ref.render(), "link_status": INVALID},
                )
            )
        elif status.link_status == VALID:
            if status.repo_empty == YES:
                findings.append(
                    make_finding(
                        Category.EMPTY_REPO,
                        entry.subject,
                        {"link": status.ref.render(), "repo_empty": YES},
                    )
                )
            elif status.repo_empty == NO and status.readme_present == NO:
                findings.append(
                    make_finding(
                        Category.MISSING_README,
                        entry.subject,
                        {"link": status.ref.render(), "readme_present": NO},
                    )
                )
    return sort_findings(findings)


def detect_maintainer_hijackable(entries: list[ResolvedServer]) -> list[Finding]:
    """Invalid link whose hosting account can be re-registered."""
    findings = [
        make_finding(
            Category.MAINTAINER_HIJACKABLE,
            entry.subject,
            {
                "link": entry.status.ref.render(),
                "owner": entry.status.ref.owner,
                "owner_account": AVAILABLE,
            },
        )
        for entry in entries
        if entry.status.link_status == INVALID and entry.status.owner_account == AVAILABLE
    ]
    return sort_findings(findings)


def detect_redirection_hijackable(entries: list[ResolvedServer]) -> list[Finding]:
    """Valid link that redirects off an owner whose account is claimable."""
    findings = [
        make_finding(
            Category.REDIRECTION_HIJACKABLE,
            entry.subject,
            {
                "link": entry.status.ref.render(),
                "original_owner": entry.status.ref.owner,
                "redirected_to_owner": entry.status.redirected_to_owner,
                "owner_account": AVAILABLE,
            },
        )
        for entry in entries
        if entry.status.link_status == VALID
        and entry.status.redirected_to_owner is not None
        and entry.status.owner_account == AVAILABLE
    ]
    return sort_findings(findings)


def detect_successor(snapshot: RegistrySnapshot, redirection_findings: list[Finding]) -> list[Finding]:
    """A same-named record already hosted under the redirect target: users can
    pick the stale, hijackable listing over its successor."""
    findings: list[Finding] = []
    for finding in redirection_findings:
        new_owner = finding.evidence.get("redirected_to_owner")
        if not new_owner:
            continue
        registry_id, _, server_name = finding.subject.partition("/")
        for record in snapshot.records:
            if record.server_name != server_name or not record.hosting_link:
                continue
            if record.subject == finding.subject:
                continue
            ref = parse_hosting_ref(record.hosting_link)
            if ref.owner and ref.owner.casefold() == new_owner.casefold():
                findings.append(
                    make_finding(
                        Category.SUCCESSOR_AMBIGUITY,
                        finding.subject,
                        {
                            "stale_record": finding.subject,
                            "successor_record": record.subject,
                            "server_name": server_name,
                            "successor_owner": ref.owner,
                        },
                    )
                )
    return sort_findings(findings)


# ---------------------------------------------------------------------------
# Credential leakage in registry-displayed configs
# ---------------------------------------------------------------------------


def detect_leaked_credentials(snapshot: RegistrySnapshot, rules: SecretRuleSet | None = None) -> list[Finding]:
    """One finding per masked secret match in a record's config example."""
    findings: list[Finding] = []
    for record in snapshot.records:
        if not record.config_example:
            continue
        for match in scan_secrets(record.config_example, rules):
            findings.append(
                make_finding(
                    Category.LEAKED_CREDENTIAL,
                    record.subject,
                    {
                        "rule_id": match.rule_id,
                        "masked_value": match.masked_value,
                        "span": list(match.span),
                        "validity": match.validity,
                        "source": "config_example",
                    },
                )
            )
    return sort_findings(findings)


# ---------------------------------------------------------------------------
# Affix squatting on the package registry
# ---------------------------------------------------------------------------

AFFIX_NONE = "none"
AFFIX_PREFIX = "prefix-mcp"
AFFIX_SUFFIX = "suffix-mcp"
AFFIX_SUFFIX_SERVER = "suffix-mcp-server"
AFFIX_INFIX = "infix-mcp-core-server"


def normalize_package_name(name: str) -> tuple[str, str]:
    """Strip one recognized affix shape; returns (core, affix_pattern).

    Precedence when several shapes apply: the infix template, then the long
    suffix, the short suffix, and finally the prefix.
    """
    lowered = name.lower()
    if lowered.startswith("mcp-") and lowered.endswith("-server"):
        core = lowered[len("mcp-") : -len("-server")]
        if core:
            return core, AFFIX_INFIX
    if lowered.endswith("-mcp-server"):
        core = lowered[: -len("-mcp-server")]
        if core:
            return core, AFFIX_SUFFIX_SERVER
    if lowered.endswith("-mcp"):
        core = lowered[: -len("-mcp")]
        if core:
            return core, AFFIX_SUFFIX
    if lowered.startswith("mcp-"):
        core = lowered[len("mcp-") :]
        if core:
            return core, AFFIX_PREFIX
    return lowered, AFFIX_NONE


@dataclass(frozen=True)
class AffixMember:
    package_name: str
    maintainers: frozenset[str]
    affix_pattern: str

    def to_json(self) -> dict:
        return {
            "package_name": self.package_name,
            "maintainers": sorted(self.maintainers),
            "affix_pattern": self.affix_pattern,
        }


@dataclass(frozen=True)
class AffixGroup:
    core_name: str
    members: tuple[AffixMember, ...]
    distinct_maintainers: bool

    def to_json(self) -> dict:
        return {
            "core_name": self.core_name,
            "members": [m.to_json() for m in self.members],
            "distinct_maintainers": self.distinct_maintainers,
        }


def detect_affix_squatting(packages: list[NpmPackageMeta]) -> list[AffixGroup]:
    """Group packages whose names differ only in a recognized affix.

    Groups whose members all share a maintainer are retained in the output
    (distinct_maintainers = False) but never produce a finding.
    """
    by_core: dict[str, list[AffixMember]] = {}
    for package in packages:
        if not package.package_name:
            continue
        core, affix = normalize_package_name(package.package_name)
        by_core.setdefault(core, []).append(
            AffixMember(package_name=package.package_name, maintainers=package.maintainers, affix_pattern=affix)
        )

    groups: list[AffixGroup] = []
    for core in sorted(by_core):
        members = sorted(by_core[core], key=lambda m: m.package_name)
        if len(members) < 2:
            continue
        shared = set(members[0].maintainers)
        for member in members[1:]:
            shared &= member.maintainers
        groups.append(
            AffixGroup(core_name=core, members=tuple(members), distinct_maintainers=not shared)
        )
    return groups


def affix_findings(groups: list[AffixGroup]) -> list[Finding]:
    findings = [
        make_finding(
            Category.AFFIX_SQUAT_GROUP,
            f"npm:core={group.core_name}",
            {
                "core_name": group.core_name,
                "members": [m.to_json() for m in group.members],
            },
        )
        for group in groups
        if group.distinct_maintainers
    ]
    return sort_findings(findings)


# ---------------------------------------------------------------------------
# Tool-level analyzers
# ---------------------------------------------------------------------------


def detect_tool_name_collisions(tools: list[ToolRecord]) -> list[Finding]:
    """Identical tool names across servers (cross-server scope), plus
    warn-level notes for duplicates inside a single server."""
    servers_by_name: dict[str, dict[tuple[str, str], int]] = {}
    for tool in tools:
        per_server = servers_by_name.setdefault(tool.tool_name, {})
        per_server[tool.server_id] = per_server.get(tool.server_id, 0) + 1

    findings: list[Finding] = []
    for name in sorted(servers_by_name):
        per_server = servers_by_name[name]
        members = sorted(f"{reg}/{srv}" for reg, srv in per_server)
        duplicated_within = sorted(
            f"{reg}/{srv}" for (reg, srv), count in per_server.items() if count > 1
        )
        if len(per_server) >= 2:
            evidence: dict = {"tool_name": name, "scope": "cross-server", "members": members}
            if duplicated_within:
                evidence["intra_server_duplicates"] = duplicated_within
            findings.append(make_finding(Category.TOOL_NAME_COLLISION, f"tool:{name}", evidence))
        elif duplicated_within:
            findings.append(
                make_finding(
                    Category.TOOL_NAME_COLLISION,
                    f"tool:{name}",
                    {"tool_name": name, "scope": "intra-server", "members": duplicated_within},
                )
            )
    return sort_findings(findings)


def detect_poisoned_description(tool: ToolRecord, lexicon: PoisonLexicon | None = None) -> Finding | None:
    """Attention blocks or stacked imperatives in a tool description.

    Fires on (a) an attention-grabbing block, or (b) two or more imperative
    lexicon hits aimed at files, commands, or other tools. Every matched span
    and the heuristic that fired go into the evidence.
    """
    if not tool.description:
        return None
    lexicon = lexicon or load_poison_lexicon()
    heuristics: list[str] = []
    spans: list[str] = []

    for pattern in lexicon.attention_blocks:
        found = pattern.search(tool.description)
        if found:
            if "attention-block" not in heuristics:
                heuristics.append("attention-block")
            spans.append(found.group(0))

    imperative_hits = []
    for pattern in lexicon.imperative_patterns:
        found = pattern.search(tool.description)
        if found:
            imperative_hits.append(found.group(0))
    if len(imperative_hits) >= 2:
        heuristics.append("imperative-lexicon")
        spans.extend(imperative_hits)

    if not heuristics:
        return None
    return make_finding(
        Category.POISONED_DESCRIPTION,
        tool.subject,
        {"heuristics": heuristics, "spans": spans, "imperative_hits": len(imperative_hits)},
    )


def detect_poisoned_return(tool: ToolRecord, lexicon: PoisonLexicon | None = None) -> Finding | None:
    """Return literals that read as model-directed instructions."""
    if not tool.return_literals:
        return None
    lexicon = lexicon or load_poison_lexicon()
    offending: list[dict] = []
    for literal in tool.return_literals:
        spans = instruction_like_spans(literal, lexicon)
        if spans:
            offending.append({"literal": literal, "spans": spans})
    if not offending:
        return None
    return make_finding(Category.POISONED_RETURN, tool.subject, {"literals": offending})


def detect_shadowing_descriptions(tools: list[ToolRecord], lexicon: PoisonLexicon | None = None) -> list[Finding]:
    """A description that names a different tool and steers its parameters.

    A cross-reference alone is not enough; legitimate descriptions mention
    sibling tools. The steering-verb requirement is the false-positive brake.
    This rule is heuristic-grade and marked as such in the evidence.
    """
    if len(tools) < 2:
        return []
    lexicon = lexicon or load_poison_lexicon()
    names = sorted({t.tool_name for t in tools})
    findings: list[Finding] = []
    for tool in tools:
        if not tool.description:
            continue
        mentioned = [
            name
            for name in names
            if name != tool.tool_name
            and re.search(rf"(?<![A-Za-z0-9_]){re.escape(name)}(?![A-Za-z0-9_])", tool.description)
        ]
        if not mentioned:
            continue
        steering = []
        for pattern in lexicon.steering_patterns:
            found = pattern.search(tool.description)
            if found:
                steering.append(found.group(0))
        if not steering:
            continue
        findings.append(
            make_finding(
                Category.SHADOWING_DESCRIPTION,
                tool.subject,
                {
                    "references": mentioned,
                    "steering_spans": steering,
                    "grade": "heuristic",
                },
            )
        )
    return sort_findings(findings)


# ---------------------------------------------------------------------------
# Package-metadata anomalies
# ---------------------------------------------------------------------------


def detect_version_anomaly(
    packages: list[NpmPackageMeta], threshold: int = DEFAULT_VERSION_ANOMALY_THRESHOLD
) -> list[Finding]:
    findings = [
        make_finding(
            Category.VERSION_ANOMALY,
            f"npm:{package.package_name}",
            {"version_count": package.version_count, "threshold": threshold},
        )
        for package in packages
        if package.version_count >= threshold
    ]
    return sort_findings(findings)


def detect_no_tools(
    snapshot: RegistrySnapshot,
    tool_counts: dict[tuple[str, str], int],
    centralized: frozenset[str] = CENTRALIZED_REGISTRIES,
) -> list[Finding]:
    """Centralized-registry servers that expose no tools at all."""
    findings = [
        make_finding(
            Category.NO_TOOLS_PROVIDED,
            record.subject,
            {"tool_count": 0},
        )
        for record in snapshot.records
        if record.registry_id in centralized and tool_counts.get(record.key, 0) == 0
    ]
    return sort_findings(findings)


# ---------------------------------------------------------------------------
# Whole-suite orchestration
# ---------------------------------------------------------------------------


@dataclass
class ScanInputs:
    snapshot: RegistrySnapshot
    statuses: list[ResolvedServer] = field(default_factory=list)
    tools: list[ToolRecord] = field(default_factory=list)
    packages: list[NpmPackageMeta] | None = None
    secret_rules: SecretRuleSet | None = None
    lexicon: PoisonLexicon | None = None
    version_threshold: int = DEFAULT_VERSION_ANOMALY_THRESHOLD


@dataclass
class ScanOutput:
    findings: list[Finding]
    affix_groups: list[AffixGroup] = field(default_factory=list)


def run_scan(inputs: ScanInputs) -> ScanOutput:
    """Run every analyzer over the loaded artifacts; deterministic final sort."""
    lexicon = inputs.lexicon or load_poison_lexicon()
    findings: list[Finding] = []

    findings += detect_missing_info(inputs.snapshot, inputs.statuses)
    findings += detect_maintainer_hijackable(inputs.statuses)
    redirection = detect_redirection_hijackable(inputs.statuses)
    findings += redirection
    findings += detect_successor(inputs.snapshot, redirection)
    findings += detect_leaked_credentials(inputs.snapshot, inputs.secret_rules)

    findings += detect_tool_name_collisions(inputs.tools)
    for tool in inputs.tools:
        poisoned_desc = detect_poisoned_description(tool, lexicon)
        if poisoned_desc:
            findings.append(poisoned_desc)
        poisoned_ret = detect_poisoned_return(tool, lexicon)
        if poisoned_ret:
            findings.append(poisoned_ret)
    findings += detect_shadowing_descriptions(inputs.tools, lexicon)

    tool_counts: dict[tuple[str, str], int] = {}
    for tool in inputs.tools:
        tool_counts[tool.server_id] = tool_counts.get(tool.server_id, 0) + 1
    findings += detect_no_tools(inputs.snapshot, tool_counts)

    groups: list[AffixGroup] = []
    if inputs.packages is not None:
        groups = detect_affix_squatting(inputs.packages)
        findings += affix_findings(groups)
        findings += detect_version_anomaly(inputs.packages, inputs.version_threshold)

    return ScanOutput(findings=sort_findings(findings), affix_groups=groups)
