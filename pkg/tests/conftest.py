"""Shared fixtures: the scored benchmark corpus and the criterion summary.

The corpus is generated and scored exactly once per test session; every
test that needs volumes, selection reports, or measured statistics draws
from that single run, keeping the suite's runtime dominated by one pass.
"""

import re
import time
from typing import Dict, NamedTuple

import pytest

from ascankit.bench import CorpusEntry, ExpectedStats, bench_corpus, measure_entry
from ascankit.model import QSelectionReport, Volume


class CorpusRun(NamedTuple):
    entry: CorpusEntry
    volume: Volume
    background: Volume
    report: QSelectionReport
    measured: ExpectedStats
    seconds: float


@pytest.fixture(scope="session")
def scored_corpus() -> Dict[str, CorpusRun]:
    """Every corpus entry generated, q-selected, and fully scored once."""
    runs = {}
    for entry in bench_corpus():
        volume, background, _ = entry.generate()
        start = time.perf_counter()
        report = entry.select(volume)
        measured = measure_entry(entry, volume, background, report=report)
        seconds = time.perf_counter() - start
        runs[entry.name] = CorpusRun(entry, volume, background, report, measured, seconds)
    return runs


_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    verdicts = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            match = _CRITERION.search(getattr(report, "nodeid", ""))
            if match is None:
                continue
            number, slug = int(match.group(1)), match.group(2)
            if label == "FAIL" or number not in verdicts:
                verdicts[number] = (label, slug)
    if not verdicts:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(verdicts):
        label, slug = verdicts[number]
        terminalreporter.write_line(f"[criterion {number:02d}] {label} {slug}")
