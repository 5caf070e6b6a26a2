"""Consolidated markdown summary of a verification run.

Reads the reports of one run (or every saved report) and writes one table
row per suite together with the first failing witness of each.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path

import config
from report import VerificationReport

logger = logging.getLogger(__name__)

SUMMARY_FILE = "verification_summary.md"


def _row(data: dict) -> str:
    failing = next((item for item in data["items"] if not item["passed"]), None)
    witness = f"{failing['label']}: {failing['witness']}" if failing else ""
    return f"| {data['suite']} | {data['datum']} | {data['status']} | {witness} |"


def summarize(reports: list[dict]) -> str:
    """Markdown text for a list of report dictionaries."""
    timestamp = datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M UTC")
    passed = sum(1 for data in reports if data["passed"])
    lines = [
        "# Verification Summary",
        "",
        f"Generated: {timestamp}",
        f"Suites passed: {passed}/{len(reports)}",
        "",
        "| Suite | Datum | Status | First failure |",
        "|---|---|---|---|",
    ]
    lines.extend(_row(data) for data in reports)
    lines.append("")
    return "\n".join(lines)


def write_summary(reports: list[VerificationReport], directory: Path | None = None) -> Path:
    """Write the summary of this run's reports and return its path."""
    directory = Path(directory) if directory else config.REPORTS_DIR
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / SUMMARY_FILE
    path.write_text(summarize([r.to_dict(include_timing=False) for r in reports]), encoding="utf-8")
    logger.info("Summary saved: %s", path)
    return path


def summarize_saved_reports(directory: Path | None = None) -> Path:
    """Rebuild the summary from every report JSON saved in ``directory``."""
    directory = Path(directory) if directory else config.REPORTS_DIR
    directory.mkdir(parents=True, exist_ok=True)
    files = sorted(directory.glob("*.json"))
    if not files:
        logger.warning("No reports found in %s", directory)
    reports = [json.loads(f.read_text(encoding="utf-8")) for f in files]
    path = directory / SUMMARY_FILE
    path.write_text(summarize(reports), encoding="utf-8")
    logger.info("Summary of %d saved report(s): %s", len(reports), path)
    return path
