"""Windowed issue activity per (library, version) across adopting client projects."""

from __future__ import annotations

import csv
import os
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable

from .errors import CsvFormatError, DeltaMismatch
from .extract import DependencyDelta, LibraryId, MigrationEvent, Sign
from .ingest import RawIssueRecord
from .timeutil import format_rfc3339, parse_rfc3339

WINDOW_DAYS = 60
STATS_COLUMNS = ["group_id", "artifact_id", "version", "open_issues", "closed_issues", "delta"]
RATIO_COLUMN = "delta_ratio"
ADOPTION_COLUMNS = ["project_id", "group_id", "artifact_id", "version", "adopted_at"]


@dataclass(frozen=True)
class AdoptionRecord:
    project_id: str
    library: LibraryId
    version: str
    adopted_at: datetime


@dataclass(frozen=True)
class IssueStats:
    library: LibraryId
    version: str
    open_issues: int
    closed_issues: int

    @property
    def delta(self) -> int:
        return self.closed_issues - self.open_issues

    @property
    def delta_ratio(self) -> float:
        """Delta normalised by activity volume; reported, never used for ranking."""
        return self.delta / max(1, self.open_issues + self.closed_issues)


def adoption_window(adopted_at: datetime, days: int = WINDOW_DAYS) -> tuple[datetime, datetime]:
    """Half-open interval [adopted_at, adopted_at + days)."""
    return adopted_at, adopted_at + timedelta(days=days)


def count_window(
    issues: Iterable[RawIssueRecord],
    project_id: str,
    window: tuple[datetime, datetime],
) -> tuple[int, int]:
    """Issues of ``project_id`` opened in the window, and closed in it.

    The two counts are independent: an issue opened earlier but closed
    inside the window counts as closed only.
    """
    start, end = window
    opened = closed = 0
    for issue in issues:
        if issue.project_id != project_id:
            continue
        if start <= issue.opened_at < end:
            opened += 1
        if issue.closed_at is not None and start <= issue.closed_at < end:
            closed += 1
    return opened, closed


def adoptions_from(
    deltas: Iterable[DependencyDelta] = (),
    events: Iterable[MigrationEvent] = (),
) -> list[AdoptionRecord]:
    """One record per added dependency version or migration target.

    A project adopting the same version several times (e.g. in two pom.xml
    files) keeps only its earliest adoption.
    """
    earliest: dict[tuple[str, LibraryId, str], datetime] = {}

    def note(pid, lib, version, ts):
        key = (pid, lib, version)
        if key not in earliest or ts < earliest[key]:
            earliest[key] = ts

    for d in deltas:
        if d.sign is Sign.ADDED:
            note(d.project_id, d.library, d.version, d.timestamp)
    for e in events:
        note(e.project_id, e.library, e.to_version, e.timestamp)
    return [
        AdoptionRecord(pid, lib, version, ts)
        for (pid, lib, version), ts in sorted(earliest.items(), key=lambda kv: (kv[0][1], kv[0][2], kv[0][0]))
    ]


def aggregate_stats(
    adoptions: Iterable[AdoptionRecord],
    issues: Iterable[RawIssueRecord],
    window_days: int = WINDOW_DAYS,
) -> list[IssueStats]:
    by_project: dict[str, list[RawIssueRecord]] = defaultdict(list)
    for issue in issues:
        by_project[issue.project_id].append(issue)

    totals: dict[tuple[LibraryId, str], list[int]] = {}
    for a in adoptions:
        opened, closed = count_window(by_project.get(a.project_id, ()), a.project_id,
                                      adoption_window(a.adopted_at, window_days))
        acc = totals.setdefault((a.library, a.version), [0, 0])
        acc[0] += opened
        acc[1] += closed
    return [
        IssueStats(lib, version, o, c)
        for (lib, version), (o, c) in sorted(totals.items())
    ]


def stats_index(stats: Iterable[IssueStats]) -> dict[tuple[LibraryId, str], IssueStats]:
    return {(s.library, s.version): s for s in stats}


# -- CSV ---------------------------------------------------------------------

def export_stats_csv(stats: Iterable[IssueStats], path: str | os.PathLike, with_ratio: bool = False) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(STATS_COLUMNS + ([RATIO_COLUMN] if with_ratio else []))
        for s in stats:
            row = [s.library.group_id, s.library.artifact_id, s.version, s.open_issues, s.closed_issues, s.delta]
            if with_ratio:
                row.append(f"{s.delta_ratio:.6f}")
            writer.writerow(row)


def import_stats_csv(path: str | os.PathLike) -> list[IssueStats]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header not in (STATS_COLUMNS, STATS_COLUMNS + [RATIO_COLUMN]):
            raise CsvFormatError(1, f"expected header {','.join(STATS_COLUMNS)}")
        stats = []
        for row in reader:
            line = reader.line_num
            if len(row) != len(header):
                raise CsvFormatError(line, f"expected {len(header)} columns, got {len(row)}")
            group, artifact, version, o, c, d = row[:6]
            try:
                o_, c_, d_ = int(o), int(c), int(d)
                if o_ < 0 or c_ < 0:
                    raise ValueError("negative issue count")
                s = IssueStats(LibraryId(group, artifact), version, o_, c_)
            except ValueError as exc:
                raise CsvFormatError(line, str(exc)) from exc
            if s.delta != d_:
                raise DeltaMismatch(line, f"delta {d_} != {c_} - {o_}")
            stats.append(s)
    return stats


def export_adoptions_csv(adoptions: Iterable[AdoptionRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(ADOPTION_COLUMNS)
        for a in adoptions:
            writer.writerow([a.project_id, a.library.group_id, a.library.artifact_id, a.version,
                             format_rfc3339(a.adopted_at)])


def import_adoptions_csv(path: str | os.PathLike) -> list[AdoptionRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != ADOPTION_COLUMNS:
            raise CsvFormatError(1, f"expected header {','.join(ADOPTION_COLUMNS)}")
        out = []
        for row in reader:
            if len(row) != len(ADOPTION_COLUMNS):
                raise CsvFormatError(reader.line_num, f"expected {len(ADOPTION_COLUMNS)} columns")
            pid, group, artifact, version, ts = row
            try:
                out.append(AdoptionRecord(pid, LibraryId(group, artifact), version, parse_rfc3339(ts)))
            except ValueError as exc:
                raise CsvFormatError(reader.line_num, str(exc)) from exc
    return out
