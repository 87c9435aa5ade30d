"""Summary tables over findings: missing-info percentages, hijackable counts,
and the affix-group maintainer split.

Rendering is a pure function of findings plus denominators, and percentage
rounding is fixed at half-up to two decimals so goldens are byte-stable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

from .detectors import AffixGroup
from .findings import Category, Finding


class ZeroDenominator(Exception):
    def __init__(self, registry: str):
        self.registry = registry
        super().__init__(f"registry {registry!r} has no records")


def pct(count: int, denominator: int) -> Decimal:
    """100 * count / denominator, half-up to two decimals."""
    if denominator <= 0:
        raise ValueError("denominator must be positive")
    return (Decimal(count) * 100 / Decimal(denominator)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


@dataclass
class SummaryTable:
    title: str
    columns: list[str]
    rows: list[tuple[str, list]]  # (registry, cell values)
    totals: list | None = None
    footnote: str = ""

    def to_json(self) -> dict:
        out: dict = {
            "title": self.title,
            "columns": self.columns,
            "rows": [{"registry": name, "values": [str(v) for v in values]} for name, values in self.rows],
        }
        if self.totals is not None:
            out["totals"] = [str(v) for v in self.totals]
        if self.footnote:
            out["footnote"] = self.footnote
        return out


def _registry_of_subject(subject: str) -> str:
    return subject.partition("/")[0]


def render_missing_table(findings: list[Finding], denominators: dict[str, int]) -> SummaryTable:
    """One row per registry with invalid / empty / missing-README percentages."""
    for registry, denominator in denominators.items():
        if denominator == 0:
            raise ZeroDenominator(registry)

    counts = {
        registry: {cat: 0 for cat in (Category.INVALID_LINK, Category.EMPTY_REPO, Category.MISSING_README)}
        for registry in denominators
    }
    for finding in findings:
        if finding.category not in (Category.INVALID_LINK, Category.EMPTY_REPO, Category.MISSING_README):
            continue
        registry = _registry_of_subject(finding.subject)
        if registry in counts:
            counts[registry][finding.category] += 1

    rows = []
    for registry in sorted(denominators):
        denominator = denominators[registry]
        rows.append(
            (
                registry,
                [
                    pct(counts[registry][Category.INVALID_LINK], denominator),
                    pct(counts[registry][Category.EMPTY_REPO], denominator),
                    pct(counts[registry][Category.MISSING_README], denominator),
                ],
            )
        )
    return SummaryTable(
        title="Missing server information",
        columns=["Invalid links %", "Empty content %", "Missing README %"],
        rows=rows,
        footnote="Percentages use every snapshot record of the registry as the denominator.",
    )


def render_hijackable_table(findings: list[Finding], registries: list[str]) -> SummaryTable:
    """Per-registry hijackable counts with a totals row of column sums."""
    counts = {
        registry: {Category.MAINTAINER_HIJACKABLE: 0, Category.REDIRECTION_HIJACKABLE: 0}
        for registry in registries
    }
    for finding in findings:
        if finding.category not in (Category.MAINTAINER_HIJACKABLE, Category.REDIRECTION_HIJACKABLE):
            continue
        registry = _registry_of_subject(finding.subject)
        if registry in counts:
            counts[registry][finding.category] += 1

    rows = [
        (
            registry,
            [counts[registry][Category.MAINTAINER_HIJACKABLE], counts[registry][Category.REDIRECTION_HIJACKABLE]],
        )
        for registry in sorted(registries)
    ]
    totals = [sum(values[0] for _, values in rows), sum(values[1] for _, values in rows)]
    return SummaryTable(
        title="Hijackable servers",
        columns=["Maintainer hijacking", "Redirection hijacking"],
        rows=rows,
        totals=totals,
    )


@dataclass
class AffixSummary:
    group_count: int
    same_maintainer_fraction: Decimal | None
    different_maintainer_fraction: Decimal | None
    affix_histogram: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "group_count": self.group_count,
            "same_maintainer_fraction": (
                str(self.same_maintainer_fraction) if self.same_maintainer_fraction is not None else None
            ),
            "different_maintainer_fraction": (
                str(self.different_maintainer_fraction)
                if self.different_maintainer_fraction is not None
                else None
            ),
            "affix_histogram": dict(sorted(self.affix_histogram.items())),
        }


def render_affix_summary(groups: list[AffixGroup]) -> AffixSummary:
    """Maintainer split across groups plus a histogram of affix shapes.

    With zero groups the fractions are absent rather than invented.
    """
    if not groups:
        return AffixSummary(group_count=0, same_maintainer_fraction=None, different_maintainer_fraction=None)
    different = sum(1 for g in groups if g.distinct_maintainers)
    total = len(groups)
    histogram: dict[str, int] = {}
    for group in groups:
        for member in group.members:
            if member.affix_pattern != "none":
                histogram[member.affix_pattern] = histogram.get(member.affix_pattern, 0) + 1
    quant = Decimal("0.01")
    return AffixSummary(
        group_count=total,
        same_maintainer_fraction=(Decimal(total - different) / total).quantize(quant, rounding=ROUND_HALF_UP),
        different_maintainer_fraction=(Decimal(different) / total).quantize(quant, rounding=ROUND_HALF_UP),
        affix_histogram=histogram,
    )


def table_to_markdown(table: SummaryTable) -> str:
    lines = [f"## {table.title}", ""]
    header = ["Registry"] + table.columns
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join([" --- "] * len(header)) + "|")
    for registry, values in table.rows:
        lines.append("| " + " | ".join([registry] + [str(v) for v in values]) + " |")
    if table.totals is not None:
        lines.append("| " + " | ".join(["Total"] + [str(v) for v in table.totals]) + " |")
    lines.append("")
    if table.footnote:
        lines.append(f"_{table.footnote}_")
        lines.append("")
    return "\n".join(lines)


def affix_summary_to_markdown(summary: AffixSummary) -> str:
    lines = ["## Affix-squatting groups", ""]
    if summary.group_count == 0:
        lines.append("No affix groups detected.")
        lines.append("")
        return "\n".join(lines)
    lines.append(f"Groups: {summary.group_count}")
    lines.append("")
    lines.append("| Maintainer split | Fraction |")
    lines.append("| --- | --- |")
    lines.append(f"| different maintainers | {summary.different_maintainer_fraction} |")
    lines.append(f"| same maintainer | {summary.same_maintainer_fraction} |")
    lines.append("")
    lines.append("| Affix shape | Packages |")
    lines.append("| --- | --- |")
    for affix, count in sorted(summary.affix_histogram.items()):
        lines.append(f"| {affix} | {count} |")
    lines.append("")
    return "\n".join(lines)


def render_report_markdown(
    missing: SummaryTable, hijackable: SummaryTable, affix: AffixSummary | None = None
) -> str:
    parts = ["# Registry audit summary", "", table_to_markdown(missing), table_to_markdown(hijackable)]
    if affix is not None:
        parts.append(affix_summary_to_markdown(affix))
    return "\n".join(parts)


def render_report_json(
    missing: SummaryTable, hijackable: SummaryTable, affix: AffixSummary | None = None
) -> dict:
    out = {"missing": missing.to_json(), "hijackable": hijackable.to_json()}
    if affix is not None:
        out["affix"] = affix.to_json()
    return out
