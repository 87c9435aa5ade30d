#!/usr/bin/env python3
"""Run the full offline audit pipeline over the bundled planted corpus.

Writes statuses, findings, and the markdown report to ./demo-out/ and prints
the report. Useful as a smoke test and as a template for real snapshots.
"""
from __future__ import annotations

import sys
from pathlib import Path

from mcpguard.cli import main

ROOT = Path(__file__).resolve().parent.parent
PLANTED = ROOT / "tests" / "fixtures" / "planted"


def run() -> int:
    out = ROOT / "demo-out"
    out.mkdir(exist_ok=True)
    steps = [
        [
            "resolve",
            "--snapshot", str(PLANTED / "snapshot.jsonl"),
            "--offline", str(PLANTED / "recorded_responses.json"),
            "--out", str(out / "statuses.jsonl"),
        ],
        [
            "scan",
            "--snapshot", str(PLANTED / "snapshot.jsonl"),
            "--statuses", str(out / "statuses.jsonl"),
            "--tools", str(PLANTED / "tools.jsonl"),
            "--npm", str(PLANTED / "npm.jsonl"),
            "--out", str(out / "findings.jsonl"),
        ],
        [
            "report",
            "--findings", str(out / "findings.jsonl"),
            "--snapshot", str(PLANTED / "snapshot.jsonl"),
            "--npm", str(PLANTED / "npm.jsonl"),
            "--format", "markdown",
            "--out", str(out / "report.md"),
        ],
    ]
    for argv in steps:
        code = main(argv)
        if code != 0:
            return code
    print()
    print((out / "report.md").read_text(encoding="utf-8"))
    return 0


if __name__ == "__main__":
    sys.exit(run())
