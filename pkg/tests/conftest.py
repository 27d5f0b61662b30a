from __future__ import annotations

import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from migplan.demo import SLF4J, build_corpus, slf4j_events  # noqa: E402
from migplan.extract import LibraryId  # noqa: E402
from migplan.graph import build_graphs  # noqa: E402
from migplan.ingest import RawIssueRecord  # noqa: E402
from migplan.issues import AdoptionRecord  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
COMMONS_IO = LibraryId("commons-io", "commons-io")

# version, open issues, closed issues, delta
COMMONS_IO_ROWS = [
    ("1.0", 14, 33, 19),
    ("1.3.2", 150, 420, 270),
    ("1.4", 87, 408, 321),
    ("2.0", 5, 10, 5),
    ("2.0.1", 133, 457, 324),
    ("2.1", 129, 516, 387),
    ("2.2", 67, 999, 932),
    ("2.3", 5, 20, 15),
    ("2.4", 939, 3283, 2344),
    ("2.5", 64, 918, 854),
    ("2.6", 64, 548, 484),
]


def utc(*args) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)


def commons_io_raw_data() -> tuple[list[AdoptionRecord], list[RawIssueRecord]]:
    """Adoptions and issues whose windowed counts add up to the commons-io table.

    Each version is adopted by two client projects; the open and closed
    totals are split between them. Open issues are opened inside the window
    and never closed; closed issues were opened before the window and closed
    inside it, so each stream hits exactly one counter.
    """
    adoptions, issues = [], []
    base = utc(2018, 1, 1)
    for n, (version, opened, closed, _) in enumerate(COMMONS_IO_ROWS):
        for half in (0, 1):
            pid = f"io-client-{n:02d}-{half}"
            adopted = base + timedelta(days=100 * n + half)
            adoptions.append(AdoptionRecord(pid, COMMONS_IO, version, adopted))
            o = opened // 2 + (opened % 2 if half == 0 else 0)
            c = closed // 2 + (closed % 2 if half == 0 else 0)
            for i in range(o):
                issues.append(RawIssueRecord(pid, adopted + timedelta(hours=1 + i % 1000)))
            for i in range(c):
                issues.append(RawIssueRecord(pid, adopted - timedelta(days=10),
                                             adopted + timedelta(days=2, minutes=i % 5000)))
            # noise outside the window
            issues.append(RawIssueRecord(pid, adopted + timedelta(days=61), adopted + timedelta(days=62)))
            issues.append(RawIssueRecord(pid, adopted - timedelta(days=30), adopted - timedelta(days=1)))
    return adoptions, issues


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    return build_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def slf4j_graph():
    graphs, _ = build_graphs(slf4j_events())
    return graphs[SLF4J]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
