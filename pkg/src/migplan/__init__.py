"""Mine library-version migrations from pom.xml histories and recommend upgrade plans."""

from .extract import Direction, LibraryId, MigrationEvent, compare_versions, pair_migrations, parse_pom_diff
from .graph import MigrationGraph, add_event, build_graphs, load_graph, save_graph
from .issues import IssueStats, aggregate_stats
from .plan import UpgradePlan, edge_cost, k_shortest_plans, shortest_path
from .rank import RankedPlans, plan_issue_value, rank_plans

__version__ = "0.1.0"

__all__ = [
    "Direction", "LibraryId", "MigrationEvent", "compare_versions", "pair_migrations", "parse_pom_diff",
    "MigrationGraph", "add_event", "build_graphs", "load_graph", "save_graph",
    "IssueStats", "aggregate_stats",
    "UpgradePlan", "edge_cost", "k_shortest_plans", "shortest_path",
    "RankedPlans", "plan_issue_value", "rank_plans",
]
