"""Locate project clones, read pom.xml history through git, and load issue dumps."""

from __future__ import annotations

import json
import logging
import os
import re
import subprocess
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable

from .errors import FormatError, HttpError, NoPomFound, NotARepository, RateLimited, VcsError
from .timeutil import format_rfc3339, from_epoch, parse_rfc3339

log = logging.getLogger(__name__)

POM_NAME = "pom.xml"
SHA_RE = re.compile(r"^[0-9a-f]{40}$")
_SKIP_DIRS = {".git", ".hg", ".svn", "node_modules", "target"}


@dataclass(frozen=True)
class ProjectRef:
    id: str
    root_path: Path
    pom_paths: tuple[str, ...]

    def __post_init__(self):
        if not self.id:
            raise ValueError("project id must be nonempty")
        if len(set(self.pom_paths)) != len(self.pom_paths):
            raise ValueError("duplicate pom paths")


@dataclass(frozen=True)
class CommitRecord:
    sha: str
    timestamp: datetime
    pom_path: str
    diff_text: str
    # post-commit content of pom_path; None when the file was deleted
    file_content: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not SHA_RE.match(self.sha):
            raise ValueError(f"not a full sha: {self.sha!r}")


@dataclass(frozen=True)
class RawIssueRecord:
    project_id: str
    opened_at: datetime
    closed_at: datetime | None = None

    def __post_init__(self):
        if self.closed_at is not None and self.closed_at < self.opened_at:
            raise ValueError("closedAt precedes openedAt")

    def to_json(self) -> dict:
        return {
            "projectId": self.project_id,
            "openedAt": format_rfc3339(self.opened_at),
            "closedAt": format_rfc3339(self.closed_at) if self.closed_at else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RawIssueRecord":
        closed = obj.get("closedAt")
        return cls(
            project_id=str(obj["projectId"]),
            opened_at=parse_rfc3339(obj["openedAt"]),
            closed_at=parse_rfc3339(closed) if closed is not None else None,
        )


# -- local clones -----------------------------------------------------------

def _git(root: Path, *args: str) -> str:
    try:
        proc = subprocess.run(
            ["git", "-C", str(root), *args],
            capture_output=True,
            check=False,
            env={**os.environ, "GIT_CONFIG_NOSYSTEM": "1", "LC_ALL": "C"},
        )
    except OSError as exc:
        raise VcsError("cannot run git", str(exc)) from exc
    if proc.returncode != 0:
        raise VcsError(f"git {args[0]} failed", proc.stderr.decode("utf-8", "replace"))
    return proc.stdout.decode("utf-8", "replace")


def scan_project(root: str | os.PathLike, project_id: str | None = None) -> ProjectRef:
    """Enumerate every pom.xml under a version-controlled working tree.

    Each descriptor is listed separately. Paths are POSIX-style, relative to
    ``root`` and sorted, so re-scanning an unchanged tree is deterministic.
    """
    root = Path(root)
    if not root.is_dir() or not (root / ".git").exists():
        raise NotARepository(f"{root} is not a git working tree")
    poms = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = [d for d in dirnames if d not in _SKIP_DIRS]
        if POM_NAME in filenames:
            rel = Path(dirpath, POM_NAME).relative_to(root)
            poms.append(rel.as_posix())
    if not poms:
        raise NoPomFound(f"no {POM_NAME} under {root}")
    return ProjectRef(id=project_id or root.name, root_path=root, pom_paths=tuple(sorted(poms)))


def commit_history(project: ProjectRef, pom_path: str) -> list[CommitRecord]:
    """Commits that touched ``pom_path``, oldest first, each with its file-scoped diff.

    Merge commits are skipped: their combined diffs are not unified diffs.
    Ordering is (committer timestamp, sha).
    """
    if pom_path not in project.pom_paths:
        raise ValueError(f"{pom_path} is not a pom of {project.id}")
    root = project.root_path
    out = _git(root, "log", "--no-merges", "--format=%H %ct", "--", pom_path)
    entries = []
    for line in out.splitlines():
        if not line.strip():
            continue
        sha, ct = line.split()
        entries.append((from_epoch(int(ct)), sha))
    entries.sort()

    records = []
    for ts, sha in entries:
        diff = _git(root, "show", "--no-color", "--no-ext-diff", "--format=", "-U3", sha, "--", pom_path)
        try:
            content = _git(root, "show", f"{sha}:{pom_path}")
        except VcsError:
            content = None
        records.append(CommitRecord(sha=sha, timestamp=ts, pom_path=pom_path, diff_text=diff, file_content=content))
    return records


# -- issue dumps --------------------------------------------------------------

def load_issue_dump(path: str | os.PathLike) -> list[RawIssueRecord]:
    """Read a JSON-lines issue dump. Bad lines are logged and dropped.

    Raises FormatError when more than half of the nonblank lines are bad,
    which usually means the wrong file was passed.
    """
    text = Path(path).read_text(encoding="utf-8")
    records: list[RawIssueRecord] = []
    bad = 0
    total = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        total += 1
        try:
            records.append(RawIssueRecord.from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            bad += 1
            log.warning("%s:%d: rejected issue line (%s)", path, lineno, exc)
    if total and bad * 2 > total:
        raise FormatError(f"{path}: {bad} of {total} lines malformed")
    return records


def write_issue_dump(records: Iterable[RawIssueRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")


# -- forge API ----------------------------------------------------------------

def _retry_after(resp) -> float | None:
    value = resp.headers.get("Retry-After")
    if value is not None:
        try:
            return float(value)
        except ValueError:
            return None
    reset = resp.headers.get("X-RateLimit-Reset")
    if reset is not None:
        try:
            return max(0.0, float(reset) - time.time())
        except ValueError:
            return None
    return None


def fetch_issues(
    project_id: str,
    endpoint_base: str,
    token: str | None = None,
    dump_path: str | os.PathLike | None = None,
    per_page: int = 100,
    session=None,
) -> list[RawIssueRecord]:
    """List every issue of ``project_id`` ("owner/name") from a GitHub-style REST API.

    Pages are requested with ``?state=all&page=N`` until an empty page comes
    back. Pull requests (objects carrying a ``pull_request`` key) are skipped.
    """
    import requests

    http = session or requests.Session()
    headers = {"Accept": "application/vnd.github+json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    url = f"{endpoint_base.rstrip('/')}/repos/{project_id}/issues"

    records: list[RawIssueRecord] = []
    page = 1
    while True:
        resp = http.get(url, headers=headers, params={"state": "all", "per_page": per_page, "page": page}, timeout=30)
        if resp.status_code == 429 or (
            resp.status_code == 403 and resp.headers.get("X-RateLimit-Remaining") == "0"
        ):
            raise RateLimited(resp.status_code, _retry_after(resp), resp.text)
        if resp.status_code != 200:
            raise HttpError(resp.status_code, resp.text)
        items = resp.json()
        if not isinstance(items, list):
            raise HttpError(resp.status_code, "expected a JSON array")
        if not items:
            break
        for item in items:
            if "pull_request" in item:
                continue
            closed = item.get("closed_at")
            records.append(RawIssueRecord(
                project_id=project_id,
                opened_at=parse_rfc3339(item["created_at"]),
                closed_at=parse_rfc3339(closed) if closed else None,
            ))
        page += 1

    if dump_path is not None:
        write_issue_dump(records, dump_path)
    return records
