"""Ten-fold cross-validation, edge-level precision/recall, and popularity/issue correlations."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import random
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CorpusTooSmall, EndpointMismatch, LengthMismatch, MigplanError, NoMigrations
from .extract import Direction, LibraryId, MigrationEvent
from .graph import MigrationGraph, build_graphs
from .issues import IssueStats, stats_index
from .plan import DEFAULT_K, k_shortest_plans
from .rank import rank_plans

log = logging.getLogger(__name__)

DEFAULT_FOLDS = 10


@dataclass(frozen=True)
class FoldSplit:
    round: int
    test_projects: frozenset[str]
    train_projects: frozenset[str]


@dataclass(frozen=True)
class MetricsReport:
    library: LibraryId | None
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f_measure(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "p": self.precision, "r": self.recall, "f": self.f_measure}


def compute_metrics(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall and F-measure; each is 0 when its denominator is."""
    m = MetricsReport(None, tp, fp, fn)
    return m.precision, m.recall, m.f_measure


# -- folds -------------------------------------------------------------------

def make_folds(corpus: Iterable[str], seed: int, n_folds: int = DEFAULT_FOLDS) -> list[FoldSplit]:
    """Shuffle the corpus under ``seed`` and cut it into ``n_folds`` contiguous folds.

    The first ``len % n_folds`` folds get one extra project.
    """
    projects = sorted(set(corpus))
    if len(projects) < n_folds:
        raise CorpusTooSmall(f"{len(projects)} projects cannot fill {n_folds} folds")
    random.Random(seed).shuffle(projects)
    size, extra = divmod(len(projects), n_folds)
    everyone = frozenset(projects)
    folds = []
    start = 0
    for i in range(n_folds):
        end = start + size + (1 if i < extra else 0)
        test = frozenset(projects[start:end])
        folds.append(FoldSplit(i + 1, test, everyone - test))
        start = end
    return folds


# -- paths and metrics ---------------------------------------------------------

def actual_path(events: Iterable[MigrationEvent], project: str, library: LibraryId) -> list[str]:
    """Longest chain of consecutive upgrades a project made on a library.

    A step whose from-version differs from the previous to-version starts a
    new chain. Equal-length chains resolve to the most recent one.
    """
    mine = sorted(
        (e for e in events
         if e.project_id == project and e.library == library and e.direction is Direction.UPGRADE),
        key=lambda e: (e.timestamp, e.sha),
    )
    if not mine:
        raise NoMigrations(f"{project} has no upgrades of {library}")
    chains: list[list[str]] = []
    for e in mine:
        if chains and chains[-1][-1] == e.from_version and e.to_version not in chains[-1]:
            chains[-1].append(e.to_version)
        else:
            chains.append([e.from_version, e.to_version])
    best = chains[0]
    for chain in chains[1:]:
        if len(chain) >= len(best):
            best = chain
    return best


def path_metrics(recommended: Sequence[str], actual: Sequence[str]) -> tuple[int, int, int]:
    """(tp, fp, fn) over the two paths' edge sets."""
    if not recommended or not actual or recommended[0] != actual[0] or recommended[-1] != actual[-1]:
        raise EndpointMismatch(f"{list(recommended)} vs {list(actual)}")
    rec = set(zip(recommended, recommended[1:]))
    act = set(zip(actual, actual[1:]))
    return len(rec & act), len(rec - act), len(act - rec)


# -- correlations ----------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationReport:
    """None marks a coefficient that is undefined for the input (zero variance)."""

    kendall_tau: float | None
    pearson_r: float | None
    spearman_rho: float | None
    n: int

    def as_dict(self) -> dict:
        return {"kendall_tau": self.kendall_tau, "pearson_r": self.pearson_r,
                "spearman_rho": self.spearman_rho, "n": self.n}


def _clean(value) -> float | None:
    value = float(value)
    if math.isnan(value):
        return None
    return max(-1.0, min(1.0, value))


def correlations(x: Sequence[float], y: Sequence[float]) -> CorrelationReport:
    """Pearson r, Spearman rho (average ranks for ties) and Kendall tau-b."""
    from scipy import stats

    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} != {len(y)}")
    if len(x) < 2:
        raise LengthMismatch("need at least two observations")
    if len(set(x)) < 2 or len(set(y)) < 2:
        return CorrelationReport(None, None, None, len(x))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tau = stats.kendalltau(x, y, variant="b").statistic
        r = stats.pearsonr(x, y).statistic
        rho = stats.spearmanr(x, y).statistic
    return CorrelationReport(_clean(tau), _clean(r), _clean(rho), len(x))


def popularity_delta_pairs(
    graphs: Iterable[MigrationGraph],
    stats: Iterable[IssueStats],
) -> tuple[list[int], list[int]]:
    """(edge weight, target-version delta) for every edge whose target has stats."""
    index = stats_index(stats)
    xs, ys = [], []
    for g in sorted(graphs, key=lambda g: g.library):
        for (s, t) in sorted(g.edges):
            st = index.get((g.library, t))
            if st is not None:
                xs.append(g.edges[(s, t)].weight)
                ys.append(st.delta)
    return xs, ys


# -- cross-validation ---------------------------------------------------------

@dataclass
class CrossValidation:
    folds: list[FoldSplit]
    rounds: dict[LibraryId, dict[int, MetricsReport]]
    diagnostics: list[str] = field(default_factory=list)
    # per-round training graphs; kept only when requested
    graphs: dict[int, dict[LibraryId, MigrationGraph]] = field(default_factory=dict)

    def micro(self, library: LibraryId) -> MetricsReport:
        per = self.rounds[library].values()
        return MetricsReport(library, sum(m.tp for m in per), sum(m.fp for m in per), sum(m.fn for m in per))

    def libraries(self) -> list[LibraryId]:
        return sorted(self.rounds)

    def to_json(self) -> list[dict]:
        out = []
        for lib in self.libraries():
            rounds = [
                {"round": r, **m.as_dict()} for r, m in sorted(self.rounds[lib].items())
            ]
            out.append({"library": str(lib), "rounds": rounds, "micro": self.micro(lib).as_dict()})
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["library", "round", "tp", "fp", "fn", "precision", "recall", "f_measure"])
        for lib in self.libraries():
            rows = sorted(self.rounds[lib].items()) + [("micro", self.micro(lib))]
            for r, m in rows:
                writer.writerow([str(lib), r, m.tp, m.fp, m.fn,
                                 f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f_measure:.6f}"])
        return buf.getvalue()


def run_cross_validation(
    events: Sequence[MigrationEvent],
    corpus: Iterable[str] | None = None,
    seed: int = 42,
    k: int = DEFAULT_K,
    n_folds: int = DEFAULT_FOLDS,
    stats: Iterable[IssueStats] | None = None,
    keep_graphs: bool = False,
) -> CrossValidation:
    """Leave one fold out, build graphs from the rest, and score each test project.

    For every upgrade chain of a test project the first and last versions are
    queried against the training graph; the top plan (re-ranked by issues
    when ``stats`` is given) is compared edge by edge with the real chain.
    Queries that fail (unknown version, no path) are skipped and recorded in
    ``diagnostics``.
    """
    if corpus is None:
        corpus = {e.project_id for e in events}
    folds = make_folds(corpus, seed, n_folds)
    stats = list(stats) if stats is not None else None

    by_project: dict[str, list[MigrationEvent]] = defaultdict(list)
    for e in events:
        by_project[e.project_id].append(e)

    counts: dict[LibraryId, dict[int, list[int]]] = defaultdict(dict)
    result = CrossValidation(folds, {})
    for fold in folds:
        train_events = [e for p in sorted(fold.train_projects) for e in by_project.get(p, ())]
        graphs, _ = build_graphs(train_events)
        leaked = {c for g in graphs.values() for e in g.edges.values() for c in e.clients} & fold.test_projects
        if leaked:
            raise AssertionError(f"round {fold.round}: test projects in training graph: {sorted(leaked)}")
        if keep_graphs:
            result.graphs[fold.round] = graphs

        for project in sorted(fold.test_projects):
            libs = sorted({e.library for e in by_project.get(project, ()) if e.direction is Direction.UPGRADE})
            for lib in libs:
                actual = actual_path(by_project[project], project, lib)
                tally = counts[lib].setdefault(fold.round, [0, 0, 0])
                g = graphs.get(lib)
                if g is None:
                    result.diagnostics.append(f"round {fold.round} {project} {lib}: library absent from training graph")
                    continue
                try:
                    plans = k_shortest_plans(g, actual[0], actual[-1], k)
                except MigplanError as exc:
                    result.diagnostics.append(f"round {fold.round} {project} {lib}: {exc}")
                    continue
                best = rank_plans(plans, stats).best if stats is not None else plans[0]
                tp, fp, fn = path_metrics(best.path, actual)
                tally[0] += tp
                tally[1] += fp
                tally[2] += fn

    for lib, per_round in counts.items():
        result.rounds[lib] = {r: MetricsReport(lib, *c) for r, c in per_round.items()}
    return result


def write_reports(cv: CrossValidation, json_path, csv_path, correlation: CorrelationReport | None = None) -> None:
    doc = {
        "folds": [{"round": f.round, "test": len(f.test_projects), "train": len(f.train_projects)} for f in cv.folds],
        "libraries": cv.to_json(),
        "correlation": correlation.as_dict() if correlation else None,
        "skipped": len(cv.diagnostics),
    }
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(cv.to_csv())
