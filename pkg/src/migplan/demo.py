"""Reproducible sample data: a three-repository git corpus and a synthetic slf4j graph.

    python -m migplan.demo corpus DEST     # build the git fixture corpus
    python -m migplan.demo slf4j DEST.csv  # write the slf4j events CSV

The slf4j weights are a reconstruction: the client counts behind the
reference plan list are not available, so the table below was chosen so
that 1.6.1 -> 1.6.4 is travelled by 14 clients and the five cheapest
1.5.8 -> 1.7.25 plans carry popularity values that round to 0.898, 1.0,
1.0, 1.238 and 1.446.
"""

from __future__ import annotations

import os
import subprocess
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .extract import Direction, LibraryId, MigrationEvent

SLF4J = LibraryId("org.slf4j", "slf4j-api")

# (from, to, clients)
SLF4J_WEIGHTS = [
    ("1.5.8", "1.6.1", 4),
    ("1.5.8", "1.7.5", 2),
    ("1.6.1", "1.6.4", 14),
    ("1.6.1", "1.7.5", 4),
    ("1.6.4", "1.7.5", 13),
    ("1.6.4", "1.6.6", 2),
    ("1.6.6", "1.7.5", 8),
    ("1.6.4", "1.7.2", 3),
    ("1.7.2", "1.7.5", 12),
    ("1.7.5", "1.7.25", 2),
    # off the 1.5.8 -> 1.7.25 plans or far more expensive than them
    ("1.5.8", "1.5.11", 3),
    ("1.5.11", "1.6.1", 1),
    ("1.7.25", "1.7.30", 6),
    ("1.7.30", "1.8.0", 2),
]

_EPOCH = datetime(2015, 1, 1, tzinfo=timezone.utc)


def slf4j_events() -> list[MigrationEvent]:
    """One event per (edge, client); every edge has its own set of client projects."""
    events = []
    for i, (v1, v2, w) in enumerate(SLF4J_WEIGHTS):
        for j in range(w):
            events.append(MigrationEvent(
                project_id=f"slf4j-client-{i:02d}-{j:02d}",
                library=SLF4J,
                from_version=v1,
                to_version=v2,
                sha=f"{i:02x}{j:02x}".ljust(40, "0"),
                timestamp=_EPOCH + timedelta(days=30 * i + j),
                direction=Direction.UPGRADE,
            ))
    return events


# -- git corpus -----------------------------------------------------------------

_POM_HEAD = """<?xml version="1.0" encoding="UTF-8"?>
<project xmlns="http://maven.apache.org/POM/4.0.0">
  <modelVersion>4.0.0</modelVersion>
  <groupId>org.example</groupId>
  <artifactId>{name}</artifactId>
  <version>1.0.0</version>
  <dependencies>
"""
_POM_DEP = """    <dependency>
      <groupId>{g}</groupId>
      <artifactId>{a}</artifactId>
      <version>{v}</version>
    </dependency>
"""
_POM_TAIL = """  </dependencies>
</project>
"""


def render_pom(name: str, deps: list[tuple[str, str, str]]) -> str:
    body = "".join(_POM_DEP.format(g=g, a=a, v=v) for g, a, v in deps)
    return _POM_HEAD.format(name=name) + body + _POM_TAIL


LOG4J = ("log4j", "log4j")
JUNIT = ("junit", "junit")
SLF = ("org.slf4j", "slf4j-api")

# repo -> list of (iso date, message, {relative path: [(g, a, v), ...] or raw text})
CORPUS = {
    "repoA": [
        ("2019-01-10T10:00:00Z", "initial pom", {"pom.xml": [(*LOG4J, "1.2"), (*JUNIT, "4.11")]}),
        ("2019-03-02T09:30:00Z", "upgrade log4j", {"pom.xml": [(*LOG4J, "1.3"), (*JUNIT, "4.11")]}),
        ("2019-05-20T16:45:00Z", "upgrade junit", {"pom.xml": [(*LOG4J, "1.3"), (*JUNIT, "4.12")]}),
    ],
    "repoB": [
        ("2019-02-01T08:00:00Z", "initial", {
            "pom.xml": [(*LOG4J, "1.2"), (*SLF, "1.6.1")],
            "sub/pom.xml": [(*SLF, "1.6.1")],
        }),
        ("2019-04-11T12:00:00Z", "slf4j 1.6.4", {
            "pom.xml": [(*LOG4J, "1.2"), (*SLF, "1.6.4")],
            "sub/pom.xml": [(*SLF, "1.6.4")],
        }),
        ("2019-06-01T12:00:00Z", "notes", {"README.md": "dependency notes\n"}),
        ("2019-07-15T12:00:00Z", "log4j 1.3 and slf4j 1.7.5", {
            "pom.xml": [(*LOG4J, "1.3"), (*SLF, "1.7.5")],
        }),
    ],
    "repoC": [
        ("2018-11-05T07:00:00Z", "initial", {"pom.xml": [(*LOG4J, "1.2"), (*JUNIT, "4.11"), (*SLF, "1.6.1")]}),
        ("2019-01-21T07:00:00Z", "log4j 1.2.17", {"pom.xml": [(*LOG4J, "1.2.17"), (*JUNIT, "4.11"), (*SLF, "1.6.1")]}),
        ("2019-02-14T07:00:00Z", "log4j 1.3, slf4j 1.7.5", {"pom.xml": [(*LOG4J, "1.3"), (*JUNIT, "4.11"), (*SLF, "1.7.5")]}),
        ("2019-08-30T07:00:00Z", "junit via property", {"pom.xml": [(*LOG4J, "1.3"), (*JUNIT, "${junit.version}"), (*SLF, "1.7.5")]}),
    ],
}


def _run_git(repo: Path, env: dict, *args: str) -> None:
    subprocess.run(["git", "-C", str(repo), *args], check=True, env=env, capture_output=True)


def git_env(date: str | None = None) -> dict:
    env = {
        **os.environ,
        "GIT_AUTHOR_NAME": "Fixture", "GIT_AUTHOR_EMAIL": "fixture@example.org",
        "GIT_COMMITTER_NAME": "Fixture", "GIT_COMMITTER_EMAIL": "fixture@example.org",
        "GIT_CONFIG_NOSYSTEM": "1", "GIT_CONFIG_GLOBAL": os.devnull,
    }
    if date:
        env["GIT_AUTHOR_DATE"] = date
        env["GIT_COMMITTER_DATE"] = date
    return env


def init_repo(repo: Path) -> None:
    repo.mkdir(parents=True, exist_ok=True)
    _run_git(repo, git_env(), "init", "-q", "-b", "main")


def commit_files(repo: Path, date: str, message: str, files: dict) -> None:
    for rel, content in files.items():
        path = repo / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, list):
            content = render_pom(repo.name + ("-" + path.parent.name if path.parent != repo else ""), content)
        path.write_text(content, encoding="utf-8")
        _run_git(repo, git_env(date), "add", rel)
    _run_git(repo, git_env(date), "commit", "-q", "--no-gpg-sign", "-m", message)


def build_corpus(dest: str | os.PathLike) -> Path:
    """Create the fixture repositories under ``dest``. Commit shas are stable across runs."""
    dest = Path(dest)
    for name, commits in CORPUS.items():
        repo = dest / name
        init_repo(repo)
        for date, message, files in commits:
            commit_files(repo, date, message, files)
    return dest


def main(argv: list[str] | None = None) -> int:
    from .graph import export_events_csv

    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2 or argv[0] not in {"corpus", "slf4j"}:
        print("usage: python -m migplan.demo corpus DEST | slf4j DEST.csv", file=sys.stderr)
        return 1
    if argv[0] == "corpus":
        print(build_corpus(argv[1]))
    else:
        export_events_csv(slf4j_events(), argv[1])
    return 0


if __name__ == "__main__":
    sys.exit(main())
