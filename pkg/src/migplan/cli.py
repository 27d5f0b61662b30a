"""Command-line entry point: ``migplan ingest | plan | evaluate | fetch-issues``."""

from __future__ import annotations

import argparse
import difflib
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock, Timeout

from . import evaluate as ev
from .errors import (
    CorpusTooSmall, CsvFormatError, FormatError, HttpError, MigplanError,
    NoPath, NoPomFound, NotARepository, UnknownVersion,
)
from .extract import LibraryId, extract_project
from .graph import (
    build_graphs, export_events_csv, graph_filename, import_events_csv, load_graph, save_graph,
)
from .ingest import fetch_issues, load_issue_dump, scan_project, write_issue_dump
from .issues import (
    WINDOW_DAYS, adoptions_from, aggregate_stats, export_adoptions_csv, export_stats_csv,
    import_stats_csv,
)
from .plan import DEFAULT_K, k_shortest_plans
from .rank import rank_plans

log = logging.getLogger("migplan")

ENV_PREFIX = "MIGPLAN_"
EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2
EXIT_UNKNOWN_VERSION, EXIT_NO_PATH, EXIT_CORPUS_TOO_SMALL = 3, 4, 5

EVENTS_FILE = "events.csv"
ISSUES_FILE = "issues.jsonl"
ADOPTIONS_FILE = "adoptions.csv"
STATS_FILE = "issue_stats.csv"
SCAN_REPORT = "scan_report.json"
GRAPH_DIR = "graphs"
MANIFEST = "manifest.json"
REPORT_JSON = "eval_report.json"
REPORT_CSV = "eval_report.csv"
LOCK_FILE = ".migplan.lock"


@dataclass
class Config:
    data_dir: Path
    k: int = DEFAULT_K
    window_days: int = WINDOW_DAYS
    include_downgrades: bool = False
    seed: int = 42


def _env(name: str, default):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return default
    if isinstance(default, bool):
        return raw.strip().lower() in {"1", "true", "yes", "on"}
    if isinstance(default, int):
        return int(raw)
    return raw


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data-dir", type=Path, default=Path(_env("DATA_DIR", "migplan-data")))
    common.add_argument("--window-days", type=_positive, default=_env("WINDOW_DAYS", WINDOW_DAYS))
    common.add_argument("--include-downgrades", action="store_true", default=_env("INCLUDE_DOWNGRADES", False))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="migplan", description="Mine library migrations and recommend upgrade plans.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="mine events from clones and/or import events and issues")
    p.add_argument("--repos", type=Path, help="a git clone, or a directory whose subdirectories are clones")
    p.add_argument("--events", type=Path, help="pre-extracted events CSV to merge in")
    p.add_argument("--issues", type=Path, help="issue dump (JSON lines)")

    p = sub.add_parser("plan", parents=[common], help="recommend upgrade plans for one library")
    p.add_argument("--library", required=True, help="groupId:artifactId")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--k", type=_positive, default=_env("K", DEFAULT_K))
    p.add_argument("--rank-by-issues", action="store_true")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("evaluate", parents=[common], help="cross-validate recommendations against real paths")
    p.add_argument("--folds", type=_positive, default=ev.DEFAULT_FOLDS)
    p.add_argument("--seed", type=int, default=_env("SEED", 42))
    p.add_argument("--k", type=_positive, default=_env("K", DEFAULT_K))
    p.add_argument("--rank-by-issues", action="store_true")

    p = sub.add_parser("fetch-issues", parents=[common], help="download issues from a GitHub-style API")
    p.add_argument("--project", required=True, help="owner/name")
    p.add_argument("--endpoint", default=_env("ENDPOINT", "https://api.github.com"))
    p.add_argument("--out", type=Path, required=True)
    return parser


# -- ingest --------------------------------------------------------------------

def _project_dirs(root: Path) -> list[Path]:
    if (root / ".git").exists():
        return [root]
    return sorted(p for p in root.iterdir() if p.is_dir() and not p.name.startswith("."))


def cmd_ingest(args, cfg: Config) -> int:
    if not (args.repos or args.events or args.issues):
        print("ingest: give at least one of --repos, --events, --issues", file=sys.stderr)
        return EXIT_FATAL
    events, deltas = [], []
    report = {"projects": [], "skipped": []}
    partial = False

    if args.repos:
        if not args.repos.is_dir():
            print(f"ingest: {args.repos} is not a directory", file=sys.stderr)
            return EXIT_FATAL
        for d in _project_dirs(args.repos):
            try:
                ref = scan_project(d)
            except (NotARepository, NoPomFound) as exc:
                log.warning("skipping %s: %s", d.name, exc)
                report["skipped"].append({"project": d.name, "reason": str(exc)})
                partial = True
                continue
            result = extract_project(ref)
            events.extend(result.events)
            deltas.extend(result.deltas)
            if result.errors:
                partial = True
            report["projects"].append({
                "id": ref.id,
                "pom_paths": list(ref.pom_paths),
                "events": len(result.events),
                "deltas": len(result.deltas),
                "skipped_lines": len(result.skipped),
                "errors": result.errors,
            })

    if args.events:
        try:
            events.extend(import_events_csv(args.events))
        except (OSError, CsvFormatError) as exc:
            print(f"ingest: {args.events}: {exc}", file=sys.stderr)
            return EXIT_FATAL

    events.sort(key=lambda e: (e.project_id, e.library, e.timestamp, e.sha, e.from_version, e.to_version))
    deltas.sort(key=lambda d: (d.project_id, d.library, d.timestamp, d.sha, d.version, d.sign.value))
    adoptions = adoptions_from(deltas, events)

    cfg.data_dir.mkdir(parents=True, exist_ok=True)
    export_events_csv(events, cfg.data_dir / EVENTS_FILE)
    export_adoptions_csv(adoptions, cfg.data_dir / ADOPTIONS_FILE)

    if args.issues:
        try:
            issues = load_issue_dump(args.issues)
        except (OSError, FormatError) as exc:
            print(f"ingest: {args.issues}: {exc}", file=sys.stderr)
            return EXIT_FATAL
        issues.sort(key=lambda i: (i.project_id, i.opened_at, i.closed_at is None, i.closed_at or i.opened_at))
        write_issue_dump(issues, cfg.data_dir / ISSUES_FILE)
        export_stats_csv(aggregate_stats(adoptions, issues, cfg.window_days), cfg.data_dir / STATS_FILE)

    report["events"] = len(events)
    (cfg.data_dir / SCAN_REPORT).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for item in report["skipped"]:
        print(f"skipped {item['project']}: {item['reason']}", file=sys.stderr)
    print(f"{len(events)} migration events from {len(report['projects'])} projects -> {cfg.data_dir / EVENTS_FILE}")
    return EXIT_PARTIAL if partial else EXIT_OK


# -- graph snapshot cache ------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def ensure_graphs(cfg: Config) -> Path:
    """Rebuild per-library snapshots when events.csv changed since the last build."""
    events_path = cfg.data_dir / EVENTS_FILE
    if not events_path.exists():
        raise FileNotFoundError(f"{events_path} missing; run `migplan ingest` first")
    gdir = cfg.data_dir / GRAPH_DIR
    manifest_path = gdir / MANIFEST
    wanted = {"events_sha256": _sha256(events_path), "include_downgrades": cfg.include_downgrades}
    if manifest_path.exists():
        try:
            if json.loads(manifest_path.read_text(encoding="utf-8")) == wanted:
                return gdir
        except json.JSONDecodeError:
            pass
    gdir.mkdir(parents=True, exist_ok=True)
    for old in gdir.glob("*.json"):
        old.unlink()
    graphs, rejected = build_graphs(import_events_csv(events_path), cfg.include_downgrades)
    for g in graphs.values():
        save_graph(g, gdir / graph_filename(g.library))
    if rejected:
        export_events_csv(rejected, gdir / "rejected_events.csv")
    manifest_path.write_text(json.dumps(wanted, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("built %d graphs (%d events set aside)", len(graphs), len(rejected))
    return gdir


def _nearest(version: str, known) -> list[str]:
    return difflib.get_close_matches(version, sorted(known), n=3, cutoff=0.0)


# -- plan ------------------------------------------------------------------------

def cmd_plan(args, cfg: Config) -> int:
    try:
        lib = LibraryId.parse(args.library)
    except ValueError as exc:
        print(f"plan: {exc}", file=sys.stderr)
        return EXIT_FATAL
    gdir = ensure_graphs(cfg)
    gpath = gdir / graph_filename(lib)
    if not gpath.exists():
        print(f"plan: no migrations recorded for {lib}", file=sys.stderr)
        return EXIT_UNKNOWN_VERSION
    g = load_graph(gpath)
    try:
        plans = k_shortest_plans(g, args.source, args.target, args.k)
    except UnknownVersion as exc:
        hint = ", ".join(_nearest(exc.version, g.nodes))
        print(f"plan: {exc}; nearest known versions: {hint}", file=sys.stderr)
        return EXIT_UNKNOWN_VERSION
    except NoPath as exc:
        print(f"plan: {exc}", file=sys.stderr)
        return EXIT_NO_PATH

    ranked = False
    if args.rank_by_issues:
        stats_path = cfg.data_dir / STATS_FILE
        if stats_path.exists():
            plans = list(rank_plans(plans, import_stats_csv(stats_path)).plans)
            ranked = True
        else:
            log.warning("no %s; showing popularity order", STATS_FILE)

    if args.json:
        doc = {
            "library": str(lib),
            "from": args.source,
            "to": args.target,
            "k": args.k,
            "ranked_by_issues": ranked,
            "selected": 0,
            "plans": [
                {"rank": i + 1, "path": list(p.path), "popularity_value": p.popularity_value,
                 "issue_value": p.issue_value}
                for i, p in enumerate(plans)
            ],
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(format_plan_table(plans, ranked))
    return EXIT_OK


def format_plan_table(plans, with_issues: bool) -> str:
    rows = [(str(i + 1), ", ".join(p.path), f"{p.popularity_value:.3f}",
             "" if p.issue_value is None else f"{p.issue_value:g}") for i, p in enumerate(plans)]
    header = ("#", "Proposed path", "Pop. value", "Issues value")
    ncol = 4 if with_issues else 3
    widths = [max(len(r[c]) for r in rows + [header]) for c in range(ncol)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return "\n".join(lines)


# -- evaluate ------------------------------------------------------------------

def cmd_evaluate(args, cfg: Config) -> int:
    events_path = cfg.data_dir / EVENTS_FILE
    if not events_path.exists():
        print(f"evaluate: {events_path} missing; run `migplan ingest` first", file=sys.stderr)
        return EXIT_FATAL
    events = import_events_csv(events_path)
    stats = None
    stats_path = cfg.data_dir / STATS_FILE
    if stats_path.exists():
        stats = import_stats_csv(stats_path)
    try:
        cv = ev.run_cross_validation(
            events, seed=args.seed, k=args.k, n_folds=args.folds,
            stats=stats if args.rank_by_issues else None,
        )
    except CorpusTooSmall as exc:
        print(f"evaluate: {exc}", file=sys.stderr)
        return EXIT_CORPUS_TOO_SMALL

    correlation = None
    if stats:
        graphs, _ = build_graphs(events)
        xs, ys = ev.popularity_delta_pairs(graphs.values(), stats)
        if len(xs) >= 2:
            correlation = ev.correlations(xs, ys)

    ev.write_reports(cv, cfg.data_dir / REPORT_JSON, cfg.data_dir / REPORT_CSV, correlation)
    for line in cv.diagnostics:
        log.info("skipped query: %s", line)
    print(format_metrics_table(cv))
    return EXIT_OK


def format_metrics_table(cv: ev.CrossValidation) -> str:
    lines = [f"{'Library':<40} {'Precision':>9} {'Recall':>7} {'F-measure':>9}"]
    for lib in cv.libraries():
        m = cv.micro(lib)
        lines.append(f"{str(lib):<40} {m.precision:>9.2f} {m.recall:>7.2f} {m.f_measure:>9.2f}")
    return "\n".join(lines)


# -- fetch-issues --------------------------------------------------------------

def cmd_fetch_issues(args, cfg: Config) -> int:
    token = os.environ.get(ENV_PREFIX + "TOKEN")
    try:
        records = fetch_issues(args.project, args.endpoint, token, dump_path=args.out)
    except HttpError as exc:
        print(f"fetch-issues: {exc}", file=sys.stderr)
        return EXIT_FATAL
    print(f"{len(records)} issues -> {args.out}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "plan": cmd_plan,
    "evaluate": cmd_evaluate,
    "fetch-issues": cmd_fetch_issues,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    cfg = Config(
        data_dir=args.data_dir,
        k=getattr(args, "k", DEFAULT_K),
        window_days=args.window_days,
        include_downgrades=args.include_downgrades,
        seed=getattr(args, "seed", 42),
    )
    if args.command == "ingest":
        cfg.data_dir.mkdir(parents=True, exist_ok=True)
    lock_dir = cfg.data_dir if cfg.data_dir.is_dir() else None
    try:
        if lock_dir is None:
            return COMMANDS[args.command](args, cfg)
        with FileLock(str(lock_dir / LOCK_FILE), timeout=0):
            return COMMANDS[args.command](args, cfg)
    except Timeout:
        print(f"{cfg.data_dir} is in use by another migplan process", file=sys.stderr)
        return EXIT_FATAL
    except (MigplanError, OSError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
