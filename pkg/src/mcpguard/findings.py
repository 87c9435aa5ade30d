"""Finding data model and findings-file IO."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .registry import utc_now_iso

FINDINGS_KIND = "mcp-findings"
FINDINGS_VERSION = 1


class Category(str, Enum):
    INVALID_LINK = "InvalidLink"
    EMPTY_REPO = "EmptyRepo"
    MISSING_README = "MissingReadme"
    LEAKED_CREDENTIAL = "LeakedCredential"
    MAINTAINER_HIJACKABLE = "MaintainerHijackable"
    REDIRECTION_HIJACKABLE = "RedirectionHijackable"
    SUCCESSOR_AMBIGUITY = "SuccessorAmbiguity"
    AFFIX_SQUAT_GROUP = "AffixSquatGroup"
    TOOL_NAME_COLLISION = "ToolNameCollision"
    POISONED_DESCRIPTION = "PoisonedDescription"
    POISONED_RETURN = "PoisonedReturn"
    SHADOWING_DESCRIPTION = "ShadowingDescription"
    VERSION_ANOMALY = "VersionAnomaly"
    NO_TOOLS_PROVIDED = "NoToolsProvided"


class Severity(str, Enum):
    INFO = "info"
    WARN = "warn"
    HIGH = "high"
    CRITICAL = "critical"


SEVERITY_RANK = {Severity.INFO: 0, Severity.WARN: 1, Severity.HIGH: 2, Severity.CRITICAL: 3}

# Hijack and credential exposure outrank injection heuristics, which outrank
# confusion and hygiene signals.
SEVERITY_BY_CATEGORY = {
    Category.INVALID_LINK: Severity.INFO,
    Category.EMPTY_REPO: Severity.INFO,
    Category.MISSING_README: Severity.INFO,
    Category.NO_TOOLS_PROVIDED: Severity.INFO,
    Category.TOOL_NAME_COLLISION: Severity.WARN,
    Category.VERSION_ANOMALY: Severity.WARN,
    Category.AFFIX_SQUAT_GROUP: Severity.WARN,
    Category.SUCCESSOR_AMBIGUITY: Severity.WARN,
    Category.POISONED_DESCRIPTION: Severity.HIGH,
    Category.POISONED_RETURN: Severity.HIGH,
    Category.SHADOWING_DESCRIPTION: Severity.HIGH,
    Category.LEAKED_CREDENTIAL: Severity.CRITICAL,
    Category.MAINTAINER_HIJACKABLE: Severity.CRITICAL,
    Category.REDIRECTION_HIJACKABLE: Severity.CRITICAL,
}

# Issue family tags group findings by the class of weakness they evidence.
FAMILY_BY_CATEGORY = {
    Category.INVALID_LINK: "missing-info",
    Category.EMPTY_REPO: "missing-info",
    Category.MISSING_README: "missing-info",
    Category.NO_TOOLS_PROVIDED: "missing-info",
    Category.LEAKED_CREDENTIAL: "credential-leak",
    Category.MAINTAINER_HIJACKABLE: "maintainer-hijacking",
    Category.REDIRECTION_HIJACKABLE: "redirection-hijacking",
    Category.SUCCESSOR_AMBIGUITY: "redirection-hijacking",
    Category.AFFIX_SQUAT_GROUP: "affix-squatting",
    Category.TOOL_NAME_COLLISION: "tool-confusion",
    Category.POISONED_DESCRIPTION: "tool-poisoning",
    Category.POISONED_RETURN: "tool-poisoning",
    Category.SHADOWING_DESCRIPTION: "tool-shadowing",
    Category.VERSION_ANOMALY: "version-anomaly",
}


@dataclass(frozen=True)
class Finding:
    category: Category
    severity: Severity
    subject: str  # "registry/server", "registry/server#tool", or "npm:package"
    evidence: dict = field(default_factory=dict)
    family: str = ""

    def sort_key(self) -> tuple:
        return (self.category.value, self.subject, json.dumps(self.evidence, sort_keys=True))

    def to_json(self) -> dict:
        return {
            "category": self.category.value,
            "severity": self.severity.value,
            "subject": self.subject,
            "evidence": self.evidence,
            "family": self.family,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Finding":
        return cls(
            category=Category(data["category"]),
            severity=Severity(data["severity"]),
            subject=data["subject"],
            evidence=data.get("evidence", {}),
            family=data.get("family", ""),
        )


def make_finding(category: Category, subject: str, evidence: dict) -> Finding:
    return Finding(
        category=category,
        severity=SEVERITY_BY_CATEGORY[category],
        subject=subject,
        evidence=evidence,
        family=FAMILY_BY_CATEGORY[category],
    )


def sort_findings(findings: list[Finding]) -> list[Finding]:
    return sorted(findings, key=Finding.sort_key)


def write_findings(findings: list[Finding], path: str | Path) -> None:
    header = {"kind": FINDINGS_KIND, "version": FINDINGS_VERSION, "generated_at": utc_now_iso()}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for finding in findings:
            fh.write(json.dumps(finding.to_json(), ensure_ascii=False) + "\n")


def load_findings(path: str | Path) -> list[Finding]:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if not lines:
        raise ValueError("findings file is empty")
    header = json.loads(lines[0])
    if header.get("kind") != FINDINGS_KIND:
        raise ValueError("not a findings file")
    return [Finding.from_json(json.loads(line)) for line in lines[1:] if line.strip()]
