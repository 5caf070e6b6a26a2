"""Verification reports and their persistence.

Accumulates per-item outcomes of one verification suite and saves the
result as a structured JSON file.
"""

import json
import logging
import re
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import config

logger = logging.getLogger(__name__)


@dataclass
class ReportItem:
    """Outcome of a single check."""

    label: str
    passed: bool
    witness: str = ""
    skipped: bool = False
    elapsed: float = 0.0  # seconds spent on this item


@dataclass
class VerificationReport:
    """Accumulates check outcomes and writes them to disk.

    Usage::

        report = VerificationReport(suite="1c", datum_label="B2")
        report.start()
        report.add("beta=(1, 0)", True, "(1+u2^2)/u1")
        path = report.save()
    """

    suite: str
    datum_label: str
    items: list[ReportItem] = field(default_factory=list)
    _start_time: float = 0.0
    _last_time: float = 0.0

    def start(self) -> None:
        """Mark the beginning of the suite."""
        self._start_time = self._last_time = time.time()
        logger.info("=" * 60)
        logger.info("Suite %s on %s", self.suite, self.datum_label)

    def add(self, label: str, passed: bool, witness: str = "") -> None:
        now = time.time()
        elapsed = now - self._last_time if self._last_time else 0.0
        self._last_time = now
        self.items.append(ReportItem(label=label, passed=passed, witness=witness, elapsed=round(elapsed, 3)))
        if passed:
            logger.info("[%s] PASS %s", self.suite, label)
        else:
            logger.error("[%s] FAIL %s: %s", self.suite, label, witness)

    def skip(self, label: str, reason: str) -> None:
        self.items.append(ReportItem(label=label, passed=True, witness=reason, skipped=True))
        logger.info("[%s] SKIP %s: %s", self.suite, label, reason)

    @property
    def checked(self) -> list[ReportItem]:
        return [item for item in self.items if not item.skipped]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def first_failure(self) -> ReportItem | None:
        return next((item for item in self.items if not item.passed), None)

    def status(self) -> str:
        good = sum(1 for item in self.checked if item.passed)
        text = f"{'PASS' if self.passed else 'FAIL'} ({good}/{len(self.checked)})"
        skipped = len(self.items) - len(self.checked)
        return f"{text}, {skipped} skipped" if skipped else text

    def to_dict(self, include_timing: bool = True) -> dict:
        items = []
        for item in self.items:
            entry = {"label": item.label, "passed": item.passed, "witness": item.witness}
            if item.skipped:
                entry["skipped"] = True
            if include_timing:
                entry["elapsed"] = item.elapsed
            items.append(entry)
        data = {
            "schema": config.SCHEMA_VERSION,
            "suite": self.suite,
            "datum": self.datum_label,
            "passed": self.passed,
            "status": self.status(),
            "items": items,
        }
        if include_timing:
            data["timestamp"] = datetime.now(timezone.utc).isoformat()
            data["duration_seconds"] = round(time.time() - self._start_time, 1) if self._start_time else 0.0
        return data

    def save(self, directory: Path | None = None) -> Path:
        """Write the report to a JSON file and return the path."""
        directory = Path(directory) if directory else config.REPORTS_DIR
        directory.mkdir(parents=True, exist_ok=True)
        ts = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
        stem = re.sub(r"[^A-Za-z0-9.,-]+", "_", f"{self.suite}_{self.datum_label}").strip("_")
        path = directory / f"{stem}_{ts}.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False), encoding="utf-8")
        logger.info("Report saved: %s (%s)", path, self.status())
        return path

    def to_readable_text(self) -> str:
        """Fixed-width table of the items."""
        width = max([len(item.label) for item in self.items] + [5])
        lines = [f"=== Suite {self.suite} on {self.datum_label}: {self.status()} ==="]
        for item in self.items:
            mark = "SKIP" if item.skipped else ("PASS" if item.passed else "FAIL")
            lines.append(f"{mark}  {item.label:<{width}}  {item.witness}".rstrip())
        return "\n".join(lines)
