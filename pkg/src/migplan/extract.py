"""Turn pom.xml diffs into dependency deltas and pair them into migration events."""

from __future__ import annotations

import enum
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime

from .errors import DiffFormatError, VcsError
from .ingest import CommitRecord, ProjectRef, commit_history

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class LibraryId:
    """Maven coordinates without version. Stored lowercased."""

    group_id: str
    artifact_id: str

    def __post_init__(self):
        if not self.artifact_id:
            raise ValueError("artifactId must be nonempty")
        object.__setattr__(self, "group_id", self.group_id.strip().lower())
        object.__setattr__(self, "artifact_id", self.artifact_id.strip().lower())

    @classmethod
    def parse(cls, text: str) -> "LibraryId":
        group, sep, artifact = text.partition(":")
        if not sep:
            raise ValueError(f"expected group:artifact, got {text!r}")
        return cls(group, artifact)

    def __str__(self) -> str:
        return f"{self.group_id}:{self.artifact_id}"


class Sign(enum.Enum):
    ADDED = "+"
    REMOVED = "-"


class Direction(enum.Enum):
    UPGRADE = "upgrade"
    DOWNGRADE = "downgrade"
    UNORDERED = "unordered"


class Order(enum.Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class DependencyDelta:
    library: LibraryId
    version: str
    sign: Sign
    sha: str
    timestamp: datetime
    project_id: str
    pom_path: str

    def __post_init__(self):
        if not self.version:
            raise ValueError("version must be nonempty")


@dataclass(frozen=True)
class MigrationEvent:
    project_id: str
    library: LibraryId
    from_version: str
    to_version: str
    sha: str
    timestamp: datetime
    direction: Direction

    def __post_init__(self):
        if self.from_version == self.to_version:
            raise ValueError("fromVersion equals toVersion")


@dataclass(frozen=True)
class SkippedLine:
    sha: str
    pom_path: str
    text: str
    reason: str


# -- version comparison ---------------------------------------------------------

_NUMERIC = re.compile(r"^\d+(\.\d+)*$")


def compare_versions(a: str, b: str) -> Order:
    """Compare purely numeric dotted versions; anything else is incomparable.

    Missing components count as zero, so "1.6" equals "1.6.0".
    """
    if a == b:
        return Order.EQUAL
    if not (_NUMERIC.match(a) and _NUMERIC.match(b)):
        return Order.INCOMPARABLE
    pa = [int(x) for x in a.split(".")]
    pb = [int(x) for x in b.split(".")]
    n = max(len(pa), len(pb))
    pa += [0] * (n - len(pa))
    pb += [0] * (n - len(pb))
    if pa < pb:
        return Order.LESS
    if pa > pb:
        return Order.GREATER
    return Order.EQUAL


def migration_direction(from_version: str, to_version: str) -> Direction | None:
    """None when the two strings denote the same version (e.g. "1.6" -> "1.6.0")."""
    order = compare_versions(from_version, to_version)
    if order is Order.LESS:
        return Direction.UPGRADE
    if order is Order.GREATER:
        return Direction.DOWNGRADE
    if order is Order.INCOMPARABLE:
        return Direction.UNORDERED
    return None


# -- unified diff parsing ---------------------------------------------------------

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")
_HEADER_PREFIXES = (
    "diff ", "index ", "--- ", "+++ ", "new file mode", "deleted file mode",
    "old mode", "new mode", "similarity index", "dissimilarity index",
    "rename from", "rename to", "copy from", "copy to", "Binary files",
)
_VERSION_RE = re.compile(r"<version>\s*([^<]*?)\s*</version>")
_GROUP_RE = re.compile(r"<groupId>\s*([^<]*?)\s*</groupId>")
_ARTIFACT_RE = re.compile(r"<artifactId>\s*([^<]*?)\s*</artifactId>")
_DEP_OPEN = re.compile(r"<dependency[\s>]")
_DEP_CLOSE = "</dependency>"
# elements that can own a <version> but are not dependencies
_FOREIGN_OPEN = re.compile(r"<(plugin|parent|extension|project|build|reporting|properties)[\s>]|</dependencies>")


@dataclass
class _Line:
    kind: str  # " ", "+", "-"
    text: str
    new_pos: int  # 1-based line number in the post-image (next line for removals)


def _parse_hunks(diff_text: str) -> list[list[_Line]]:
    lines = diff_text.splitlines()
    hunks: list[list[_Line]] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        m = _HUNK_RE.match(line)
        if not m:
            if line.startswith(_HEADER_PREFIXES) or not line.strip():
                i += 1
                continue
            raise DiffFormatError(f"unexpected line outside hunk: {line[:80]!r}")
        old_left = int(m.group(2)) if m.group(2) is not None else 1
        new_left = int(m.group(4)) if m.group(4) is not None else 1
        new_pos = int(m.group(3)) if new_left else int(m.group(3)) + 1
        hunk: list[_Line] = []
        i += 1
        while (old_left > 0 or new_left > 0) and i < len(lines):
            line = lines[i]
            tag = line[:1] if line else " "
            if tag == "\\":
                i += 1
                continue
            if tag == " ":
                hunk.append(_Line(" ", line[1:], new_pos))
                old_left -= 1
                new_left -= 1
                new_pos += 1
            elif tag == "-":
                hunk.append(_Line("-", line[1:], new_pos))
                old_left -= 1
            elif tag == "+":
                hunk.append(_Line("+", line[1:], new_pos))
                new_left -= 1
                new_pos += 1
            else:
                raise DiffFormatError(f"bad hunk line: {line[:80]!r}")
            i += 1
        if old_left > 0 or new_left > 0:
            raise DiffFormatError("truncated hunk")
        while i < len(lines) and lines[i].startswith("\\"):
            i += 1
        hunks.append(hunk)
    if not hunks and any(l.strip() and not l.startswith(_HEADER_PREFIXES) for l in lines):
        raise DiffFormatError("no hunks found")
    return hunks


def _first(regex: re.Pattern, text: str) -> str | None:
    m = regex.search(text)
    return m.group(1) if m else None


def _enclosing_dependency(lines: list[str], idx: int) -> tuple[str, LibraryId | None]:
    """Find the <dependency> element around ``lines[idx]``.

    Returns ("dep", id), ("none", None) when the line belongs to some other
    element, or ("unknown", None) when the view is too short to tell.
    """
    start = None
    for j in range(idx, -1, -1):
        text = lines[j]
        if _DEP_OPEN.search(text):
            start = j
            break
        if j < idx and _DEP_CLOSE in text:
            return "none", None
        if _FOREIGN_OPEN.search(text):
            return "none", None
    if start is None:
        return "unknown", None

    group = artifact = None
    closed = False
    in_exclusions = False
    for k in range(start, len(lines)):
        text = lines[k]
        if k > start and _DEP_OPEN.search(text):
            break
        if "<exclusions>" in text:
            in_exclusions = True
        if not in_exclusions:
            group = group or _first(_GROUP_RE, text)
            artifact = artifact or _first(_ARTIFACT_RE, text)
        if "</exclusions>" in text:
            in_exclusions = False
        if _DEP_CLOSE in text:
            closed = True
            break
    if artifact and (group is not None or closed):
        return "dep", LibraryId(group or "", artifact)
    return "unknown", None


def parse_pom_diff(
    record: CommitRecord,
    project_id: str,
    skipped: list[SkippedLine] | None = None,
) -> list[DependencyDelta]:
    """Extract one delta per added/removed dependency ``<version>`` line.

    The owning groupId/artifactId is looked up in the hunk first and then, if
    the hunk is too short, in the post-commit file content. Lines that cannot
    be attributed, and versions given as ``${property}`` placeholders, are
    appended to ``skipped`` instead of raising.
    """
    if not record.diff_text.strip():
        return []
    hunks = _parse_hunks(record.diff_text)
    file_lines = record.file_content.splitlines() if record.file_content is not None else None

    def skip(text: str, reason: str) -> None:
        log.debug("%s %s: skipped %r (%s)", record.sha[:10], record.pom_path, text.strip(), reason)
        if skipped is not None:
            skipped.append(SkippedLine(record.sha, record.pom_path, text.strip(), reason))

    deltas = []
    for hunk in hunks:
        old_view = [(n, ln) for n, ln in enumerate(hunk) if ln.kind in " -"]
        new_view = [(n, ln) for n, ln in enumerate(hunk) if ln.kind in " +"]
        for n, ln in enumerate(hunk):
            if ln.kind == " ":
                continue
            version = _first(_VERSION_RE, ln.text)
            if version is None:
                continue
            view = old_view if ln.kind == "-" else new_view
            texts = [x.text for _, x in view]
            pos = next(i for i, (m, _) in enumerate(view) if m == n)
            status, lib = _enclosing_dependency(texts, pos)
            if status == "unknown" and file_lines:
                at = min(max(ln.new_pos - 1, 0), len(file_lines) - 1)
                status, lib = _enclosing_dependency(file_lines, at)
            if status == "none":
                continue
            if status == "unknown" or lib is None:
                skip(ln.text, "unresolved dependency context")
                continue
            if "${" in version:
                skip(ln.text, "property placeholder")
                continue
            if not version:
                skip(ln.text, "empty version")
                continue
            deltas.append(DependencyDelta(
                library=lib,
                version=version,
                sign=Sign.ADDED if ln.kind == "+" else Sign.REMOVED,
                sha=record.sha,
                timestamp=record.timestamp,
                project_id=project_id,
                pom_path=record.pom_path,
            ))
    return deltas


def pair_migrations(deltas: list[DependencyDelta]) -> tuple[list[MigrationEvent], list[DependencyDelta]]:
    """Pair exactly one removal with one addition of the same library.

    Libraries with several additions or removals in the commit are ambiguous
    and returned unpaired, as are pairs whose versions are equivalent.
    """
    by_lib: dict[LibraryId, list[DependencyDelta]] = defaultdict(list)
    for d in deltas:
        by_lib[d.library].append(d)

    events = []
    paired: set[int] = set()
    for lib, group in by_lib.items():
        removed = [d for d in group if d.sign is Sign.REMOVED]
        added = [d for d in group if d.sign is Sign.ADDED]
        if len(removed) != 1 or len(added) != 1:
            continue
        old, new = removed[0], added[0]
        direction = migration_direction(old.version, new.version)
        if direction is None:
            continue
        events.append(MigrationEvent(
            project_id=new.project_id,
            library=lib,
            from_version=old.version,
            to_version=new.version,
            sha=new.sha,
            timestamp=new.timestamp,
            direction=direction,
        ))
        paired.update((id(old), id(new)))
    unpaired = [d for d in deltas if id(d) not in paired]
    return events, unpaired


@dataclass
class Extraction:
    """Everything mined from one project."""

    events: list[MigrationEvent] = field(default_factory=list)
    deltas: list[DependencyDelta] = field(default_factory=list)
    unpaired: list[DependencyDelta] = field(default_factory=list)
    skipped: list[SkippedLine] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


def extract_project(project: ProjectRef) -> Extraction:
    result = Extraction()
    for pom in project.pom_paths:
        try:
            history = commit_history(project, pom)
        except VcsError as exc:
            result.errors.append(f"{pom}: {exc}")
            continue
        for record in history:
            try:
                deltas = parse_pom_diff(record, project.id, result.skipped)
            except DiffFormatError as exc:
                result.errors.append(f"{pom}@{record.sha[:10]}: {exc}")
                continue
            events, unpaired = pair_migrations(deltas)
            result.deltas.extend(deltas)
            result.events.extend(events)
            result.unpaired.extend(unpaired)
    return result
