"""Command-line entry points.

Subcommands compose through the JSONL artifacts: ``snapshot`` produces and
merges snapshot files, ``resolve`` turns hosting links into statuses,
``extract`` pulls tool records out of source trees, ``scan`` emits findings,
``report`` renders summary tables, and ``proxy`` runs the guard.

Exit codes: 0 success, 1 findings at or above ``--fail-on``, 2 usage or IO
errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .crawler import (
    CrawlIntervalError,
    RateLimitSpec,
    RegistryDescriptor,
    crawl_registry,
)
from .detectors import ScanInputs, run_scan
from .extractor import MatcherConfig, extract_tools, load_tools, write_tools
from .fetch import LiveFetcher, RecordedFetcher
from .findings import SEVERITY_RANK, Severity, load_findings, write_findings
from .hosting import HostingResolver, load_statuses, resolve_snapshot, write_statuses
from .lexicon import load_poison_lexicon, load_secret_rules
from .registry import (
    load_npm_meta,
    load_snapshot,
    merge_snapshots,
    write_snapshot,
)
from .report import (
    ZeroDenominator,
    render_affix_summary,
    render_hijackable_table,
    render_missing_table,
    render_report_json,
    render_report_markdown,
)


def _cmd_snapshot(args: argparse.Namespace) -> int:
    if args.crawl:
        descriptor = RegistryDescriptor.from_file(args.crawl)
        fetcher = RecordedFetcher.from_file(args.offline) if args.offline else None
        try:
            result = crawl_registry(
                descriptor,
                RateLimitSpec(interval=args.interval),
                fetcher=fetcher,
                ethical_min_interval=args.min_interval,
            )
        except CrawlIntervalError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for error in result.errors:
            print(f"crawl error: {error.url}: {error.cause}", file=sys.stderr)
        write_snapshot(result.snapshot, args.out)
        print(f"wrote {len(result.snapshot.records)} records to {args.out}")
        return 0

    snapshots = [load_snapshot(path) for path in args.merge]
    merged, overlap = merge_snapshots(snapshots)
    write_snapshot(merged, args.out)
    if args.overlap_report:
        Path(args.overlap_report).write_text(
            json.dumps(overlap.to_json(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    print(f"wrote {len(merged.records)} records to {args.out}")
    return 0


def _cmd_resolve(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.snapshot)
    if args.offline:
        fetcher = RecordedFetcher.from_file(args.offline)
    else:
        import os

        headers = {}
        token = os.environ.get(args.token_env) if args.token_env else None
        if token:
            headers["Authorization"] = f"Bearer {token}"
        fetcher = LiveFetcher(headers=headers)
    resolver = HostingResolver(fetcher)
    entries = resolve_snapshot(snapshot, resolver)
    write_statuses(entries, args.out)
    print(f"resolved {len(entries)} hosting links to {args.out}")
    if resolver.rate_limit_hits:
        print(f"warning: {resolver.rate_limit_hits} probes hit API rate limits", file=sys.stderr)
    return 0


def _cmd_extract(args: argparse.Namespace) -> int:
    config = MatcherConfig()
    result = extract_tools(args.source, server_id=tuple(args.server.split("/", 1)), config=config)
    write_tools(result.records, args.out)
    for failure in result.parse_errors:
        print(f"parse error: {failure.source_path}: {failure.message}", file=sys.stderr)
    for skip in result.skipped:
        print(f"skipped nested tool: {skip.source_path}:{skip.line} {skip.name}", file=sys.stderr)
    print(f"extracted {len(result.records)} tools to {args.out}")
    return 0


def _cmd_scan(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.snapshot)
    statuses = load_statuses(args.statuses) if args.statuses else []
    tools = load_tools(args.tools) if args.tools else []
    packages = load_npm_meta(args.npm) if args.npm else None
    rules = load_secret_rules(args.secret_rules) if args.secret_rules else None
    lexicon = load_poison_lexicon(args.lexicon) if args.lexicon else None

    output = run_scan(
        ScanInputs(
            snapshot=snapshot,
            statuses=statuses,
            tools=tools,
            packages=packages,
            secret_rules=rules,
            lexicon=lexicon,
        )
    )

    if args.probe_tokens:
        if not args.i_understand_probing:
            print(
                "error: --probe-tokens sends live requests with the discovered tokens; "
                "pass --i-understand-probing to consent",
                file=sys.stderr,
            )
            return 2
        output.findings = _probe_leaked_tokens(snapshot, output.findings, rules)

    write_findings(output.findings, args.out)
    if args.affix_groups:
        with open(args.affix_groups, "w", encoding="utf-8", newline="\n") as fh:
            for group in output.affix_groups:
                fh.write(json.dumps(group.to_json(), ensure_ascii=False) + "\n")
    print(f"wrote {len(output.findings)} findings to {args.out}")

    if args.fail_on:
        threshold = SEVERITY_RANK[Severity(args.fail_on)]
        if any(SEVERITY_RANK[f.severity] >= threshold for f in output.findings):
            return 1
    return 0


def _probe_leaked_tokens(snapshot, findings, rules, transport=None):
    """Check each leaked credential's validity, one request per token."""
    from .findings import Category, Finding
    from .secrets import TokenProber, scan_secrets

    if transport is None:
        fetcher = LiveFetcher()

        def transport(url, headers):
            return fetcher.fetch("GET", url, headers=headers)

    prober = TokenProber(transport=transport, consent=True)
    configs = {record.subject: record.config_example or "" for record in snapshot.records}
    updated = []
    for finding in findings:
        if finding.category != Category.LEAKED_CREDENTIAL:
            updated.append(finding)
            continue
        text = configs.get(finding.subject, "")
        span = tuple(finding.evidence.get("span", ()))
        match = next((m for m in scan_secrets(text, rules) if m.span == span), None)
        if match is None:
            updated.append(finding)
            continue
        evidence = dict(finding.evidence, validity=prober.probe(text, match))
        updated.append(Finding(finding.category, finding.severity, finding.subject, evidence, finding.family))
    return updated


def _cmd_report(args: argparse.Namespace) -> int:
    findings = load_findings(args.findings)
    snapshot = load_snapshot(args.snapshot)
    denominators: dict[str, int] = {}
    for record in snapshot.records:
        denominators[record.registry_id] = denominators.get(record.registry_id, 0) + 1

    try:
        missing = render_missing_table(findings, denominators)
    except ZeroDenominator as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    hijackable = render_hijackable_table(findings, list(denominators))

    affix = None
    if args.npm:
        from .detectors import detect_affix_squatting

        affix = render_affix_summary(detect_affix_squatting(load_npm_meta(args.npm)))

    if args.format == "markdown":
        rendered = render_report_markdown(missing, hijackable, affix)
    else:
        rendered = json.dumps(render_report_json(missing, hijackable, affix), indent=2, ensure_ascii=False) + "\n"

    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8", newline="\n")
        print(f"wrote report to {args.out}")
    else:
        sys.stdout.write(rendered)
    return 0


def _cmd_proxy(args: argparse.Namespace) -> int:
    from .proxy.stdio import run_proxy

    tty_streams = None
    if args.tty:
        try:
            tty_in = open("/dev/tty", "r", encoding="utf-8")
            tty_out = open("/dev/tty", "w", encoding="utf-8")
            tty_streams = (tty_in, tty_out)
        except OSError:
            print("warning: no controlling terminal; TTY approvals disabled", file=sys.stderr)
    return run_proxy(
        args.config,
        control_port=args.control,
        policy_path=args.policy,
        log_path=args.log,
        console_dir=args.console,
        tty_streams=tty_streams,
        ready_file=args.ready_file,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcpguard", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mcpguard {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("snapshot", help="merge snapshot fixtures or crawl a registry")
    p.add_argument("--merge", nargs="+", default=[], help="snapshot files to merge")
    p.add_argument("--crawl", help="registry descriptor file for a live crawl")
    p.add_argument("--offline", help="recorded-responses file (replay instead of the network)")
    p.add_argument("--interval", type=float, default=30.0, help="seconds between requests per host")
    p.add_argument("--min-interval", type=float, default=30.0, help="ethical floor for live crawls")
    p.add_argument("--out", required=True)
    p.add_argument("--overlap-report", help="write the cross-registry overlap report here")
    p.set_defaults(func=_cmd_snapshot)

    p = sub.add_parser("resolve", help="resolve hosting links into statuses")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--offline", help="recorded-responses file; required for reproducible runs")
    p.add_argument("--token-env", default="GITHUB_TOKEN", help="env var holding the hosting API token")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_resolve)

    p = sub.add_parser("extract", help="extract tool records from a source tree")
    p.add_argument("--source", required=True)
    p.add_argument("--server", required=True, help="server id as registry/name")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("scan", help="run every detector and write findings")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--statuses")
    p.add_argument("--tools")
    p.add_argument("--npm")
    p.add_argument("--secret-rules", help="override the bundled secret rules file")
    p.add_argument("--lexicon", help="override the bundled poisoning lexicon")
    p.add_argument("--out", required=True)
    p.add_argument("--affix-groups", help="also write all affix groups (JSONL)")
    p.add_argument("--probe-tokens", action="store_true", help="probe discovered tokens for validity")
    p.add_argument("--i-understand-probing", action="store_true")
    p.add_argument("--fail-on", choices=[s.value for s in Severity], help="exit 1 at this severity or above")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("report", help="render summary tables from findings")
    p.add_argument("--findings", required=True)
    p.add_argument("--snapshot", required=True, help="snapshot supplying per-registry denominators")
    p.add_argument("--npm", help="package metadata for the affix summary")
    p.add_argument("--format", choices=("json", "markdown"), default="markdown")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("proxy", help="run the guard proxy on stdio")
    p.add_argument("--config", required=True)
    p.add_argument("--control", type=int, help="loopback control API port (0 picks a free one)")
    p.add_argument("--policy", help="extra policy file merged over the config's guard.policy")
    p.add_argument("--log", help="control-event JSONL log")
    p.add_argument("--console", help="directory of operator console static files")
    p.add_argument("--tty", action="store_true", help="enable terminal approvals")
    p.add_argument("--ready-file", help="write the bound control port here once listening")
    p.set_defaults(func=_cmd_proxy)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
