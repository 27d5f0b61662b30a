"""K most popular loopless upgrade paths (Yen's algorithm over inverse-popularity costs).

Path costs are accumulated as exact fractions so that ties between paths of
equal cost are real ties, then broken by hop count and by the version
sequence compared element-wise as strings.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import NoPath, UnknownVersion, ZeroWeight
from .extract import LibraryId
from .graph import MigrationGraph

DEFAULT_K = 5

Adjacency = Mapping[str, Mapping[str, int]]


@dataclass(frozen=True)
class UpgradePlan:
    library: LibraryId
    path: tuple[str, ...]
    popularity_value: float
    issue_value: float | None = None

    @property
    def steps(self) -> list[tuple[str, str]]:
        return list(zip(self.path, self.path[1:]))

    def with_issue_value(self, value: float) -> "UpgradePlan":
        return replace(self, issue_value=value)


def edge_cost(w: int) -> float:
    """Cost of traversing an edge taken by ``w`` clients: 1/w."""
    if w < 1:
        raise ZeroWeight(f"edge weight must be >= 1, got {w}")
    return 1.0 / w


def _exact_cost(w: int) -> Fraction:
    if w < 1:
        raise ZeroWeight(f"edge weight must be >= 1, got {w}")
    return Fraction(1, w)


def path_cost(adj: Adjacency, path: Sequence[str]) -> Fraction:
    return sum((_exact_cost(adj[a][b]) for a, b in zip(path, path[1:])), Fraction(0))


def _key(cost: Fraction, path: tuple[str, ...]):
    return (cost, len(path), path)


def _best_path(
    adj: Adjacency,
    source: str,
    target: str,
    banned_nodes: frozenset[str] | set[str] = frozenset(),
    banned_edges: frozenset[tuple[str, str]] | set[tuple[str, str]] = frozenset(),
) -> tuple[Fraction, tuple[str, ...]] | None:
    """Dijkstra with labels ordered by (cost, hops, version sequence).

    That order is preserved when two paths to the same node are extended by
    the same edge, so the settled label at ``target`` is the minimum under it.
    """
    start = (Fraction(0), 1, (source,))
    best = {source: start}
    heap = [start]
    done = set()
    while heap:
        cost, hops, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done.add(node)
        if node == target:
            return cost, path
        for nxt, w in adj.get(node, {}).items():
            if nxt in banned_nodes or nxt in done or (node, nxt) in banned_edges:
                continue
            label = (cost + _exact_cost(w), hops + 1, path + (nxt,))
            cur = best.get(nxt)
            if cur is None or label < cur:
                best[nxt] = label
                heapq.heappush(heap, label)
    return None


def yen_k_shortest(adj: Adjacency, source: str, target: str, k: int) -> list[tuple[Fraction, tuple[str, ...]]]:
    """Up to ``k`` loopless source->target paths in (cost, hops, sequence) order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    first = _best_path(adj, source, target)
    if first is None:
        return []
    found = [first]
    candidates: list[tuple] = []
    seen = {first[1]}
    while len(found) < k:
        _, last = found[-1]
        for i in range(len(last) - 1):
            spur = last[i]
            root = last[: i + 1]
            banned_edges = {
                (p[i], p[i + 1]) for _, p in found if len(p) > i + 1 and p[: i + 1] == root
            }
            banned_nodes = set(root[:-1])
            tail = _best_path(adj, spur, target, banned_nodes, banned_edges)
            if tail is None:
                continue
            full = root[:-1] + tail[1]
            if full in seen:
                continue
            seen.add(full)
            cost = path_cost(adj, full)
            heapq.heappush(candidates, _key(cost, full))
        if not candidates:
            break
        cost, _, path = heapq.heappop(candidates)
        found.append((cost, path))
    return found


def _check_nodes(g: MigrationGraph, source: str, target: str) -> None:
    if source not in g.nodes:
        raise UnknownVersion(source, "source")
    if target not in g.nodes:
        raise UnknownVersion(target, "target")


def k_shortest_plans(g: MigrationGraph, source: str, target: str, k: int = DEFAULT_K) -> list[UpgradePlan]:
    """The ``k`` most popular loopless plans from ``source`` to ``target``.

    Lower popularity value means more clients travelled the path. Fewer than
    ``k`` plans come back when the graph has fewer simple paths.
    """
    _check_nodes(g, source, target)
    if k < 1:
        raise ValueError("k must be >= 1")
    if source == target:
        return [UpgradePlan(g.library, (source,), 0.0)]
    paths = yen_k_shortest(g.adjacency(), source, target, k)
    if not paths:
        raise NoPath(f"{g.library}: no path {source} -> {target}")
    return [UpgradePlan(g.library, p, float(c)) for c, p in paths]


def shortest_path(g: MigrationGraph, source: str, target: str) -> UpgradePlan:
    return k_shortest_plans(g, source, target, 1)[0]
