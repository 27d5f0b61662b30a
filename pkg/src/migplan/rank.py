"""Re-rank candidate plans by post-adoption issue activity."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import EmptyPlanList
from .issues import IssueStats, stats_index
from .plan import UpgradePlan


@dataclass(frozen=True)
class RankedPlans:
    plans: tuple[UpgradePlan, ...]
    selected: int = 0

    @property
    def best(self) -> UpgradePlan:
        return self.plans[self.selected]


def plan_issue_value(plan: UpgradePlan, stats: Iterable[IssueStats] | dict) -> float:
    """Mean issue delta over every version the plan moves to (the source excluded).

    Versions without stats are left out of the mean; no stats at all gives 0.
    """
    index = stats if isinstance(stats, dict) else stats_index(stats)
    deltas = [index[(plan.library, v)].delta for v in plan.path[1:] if (plan.library, v) in index]
    if not deltas:
        return 0.0
    return sum(deltas) / len(deltas)


def _order(plan: UpgradePlan):
    return (-(plan.issue_value or 0.0), plan.popularity_value, plan.path)


def rank_plans(plans: Iterable[UpgradePlan], stats: Iterable[IssueStats] | None = None) -> RankedPlans:
    """Order plans by issue value (high first), then popularity value (low first).

    With ``stats=None`` the plans' existing issue values are used as given.
    """
    plans = list(plans)
    if not plans:
        raise EmptyPlanList("nothing to rank")
    if stats is not None:
        index = stats_index(stats)
        plans = [p.with_issue_value(plan_issue_value(p, index)) for p in plans]
    else:
        plans = [p if p.issue_value is not None else p.with_issue_value(0.0) for p in plans]
    return RankedPlans(tuple(sorted(plans, key=_order)), 0)
