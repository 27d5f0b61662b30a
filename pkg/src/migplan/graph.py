"""Per-library migration graphs: versions as nodes, client counts as edge weights."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable

from .errors import CsvFormatError, DirectionRejected, SchemaError
from .extract import Direction, LibraryId, MigrationEvent
from .timeutil import format_rfc3339, parse_rfc3339

SCHEMA_VERSION = 1
EVENT_COLUMNS = [
    "project_id", "group_id", "artifact_id", "from_version", "to_version",
    "sha", "timestamp", "direction",
]


@dataclass
class MigrationEdge:
    source: str
    target: str
    first_seen: datetime
    last_seen: datetime
    # project ids that performed this step; weight is their count
    clients: set[str] = field(default_factory=set)
    # used only for graphs loaded from snapshots written without client lists
    _weight: int | None = None

    @property
    def weight(self) -> int:
        return len(self.clients) if self.clients else (self._weight or 0)

    def __eq__(self, other):
        if not isinstance(other, MigrationEdge):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and self.weight == other.weight
            and self.first_seen == other.first_seen
            and self.last_seen == other.last_seen
            and self.clients == other.clients
        )


@dataclass
class MigrationGraph:
    library: LibraryId
    nodes: set[str] = field(default_factory=set)
    edges: dict[tuple[str, str], MigrationEdge] = field(default_factory=dict)

    def successors(self, version: str) -> Iterable[MigrationEdge]:
        return (e for (s, _), e in self.edges.items() if s == version)

    def adjacency(self) -> dict[str, dict[str, int]]:
        adj: dict[str, dict[str, int]] = {v: {} for v in self.nodes}
        for (s, t), e in self.edges.items():
            adj[s][t] = e.weight
        return adj

    def weight(self, source: str, target: str) -> int:
        return self.edges[(source, target)].weight

    def total_weight(self) -> int:
        return sum(e.weight for e in self.edges.values())


def add_event(g: MigrationGraph, e: MigrationEvent, include_downgrades: bool = False) -> MigrationGraph:
    """Fold one event into ``g`` in place and return it.

    The edge weight counts distinct (project, from, to) triples, so replaying
    an event from the same project is a no-op apart from timestamps.
    """
    if e.library != g.library:
        raise ValueError(f"event for {e.library} added to graph of {g.library}")
    if e.direction is not Direction.UPGRADE and not include_downgrades:
        raise DirectionRejected(
            f"{e.library} {e.from_version}->{e.to_version} is {e.direction.value}"
        )
    g.nodes.add(e.from_version)
    g.nodes.add(e.to_version)
    key = (e.from_version, e.to_version)
    edge = g.edges.get(key)
    if edge is None:
        g.edges[key] = MigrationEdge(e.from_version, e.to_version, e.timestamp, e.timestamp, {e.project_id})
    else:
        edge.clients.add(e.project_id)
        edge.first_seen = min(edge.first_seen, e.timestamp)
        edge.last_seen = max(edge.last_seen, e.timestamp)
    return g


def build_graphs(
    events: Iterable[MigrationEvent],
    include_downgrades: bool = False,
) -> tuple[dict[LibraryId, MigrationGraph], list[MigrationEvent]]:
    """Group events by library into graphs. Rejected events go to the side ledger."""
    graphs: dict[LibraryId, MigrationGraph] = {}
    rejected = []
    for e in events:
        if e.direction is not Direction.UPGRADE and not include_downgrades:
            rejected.append(e)
            continue
        g = graphs.get(e.library)
        if g is None:
            g = graphs[e.library] = MigrationGraph(e.library)
        add_event(g, e, include_downgrades)
    return graphs, rejected


# -- JSON snapshots ------------------------------------------------------------

def graph_to_dict(g: MigrationGraph, with_clients: bool = True) -> dict:
    edges = []
    for (s, t) in sorted(g.edges):
        e = g.edges[(s, t)]
        item = {
            "from": s,
            "to": t,
            "weight": e.weight,
            "first_seen": format_rfc3339(e.first_seen),
            "last_seen": format_rfc3339(e.last_seen),
        }
        if with_clients and e.clients:
            item["clients"] = sorted(e.clients)
        edges.append(item)
    return {
        "schema": SCHEMA_VERSION,
        "library": {"group": g.library.group_id, "artifact": g.library.artifact_id},
        "nodes": sorted(g.nodes),
        "edges": edges,
    }


def graph_from_dict(doc: dict) -> MigrationGraph:
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported graph schema {doc.get('schema') if isinstance(doc, dict) else doc!r}")
    try:
        lib = LibraryId(doc["library"]["group"], doc["library"]["artifact"])
        g = MigrationGraph(lib, set(doc["nodes"]))
        for item in doc["edges"]:
            s, t, w = item["from"], item["to"], int(item["weight"])
            if s not in g.nodes or t not in g.nodes:
                raise SchemaError(f"edge {s}->{t} references a missing node")
            if s == t:
                raise SchemaError(f"self-loop on {s}")
            if (s, t) in g.edges:
                raise SchemaError(f"duplicate edge {s}->{t}")
            if w < 1:
                raise SchemaError(f"edge {s}->{t} has weight {w}")
            clients = set(item.get("clients", ()))
            if clients and len(clients) != w:
                raise SchemaError(f"edge {s}->{t}: weight {w} but {len(clients)} clients")
            first, last = parse_rfc3339(item["first_seen"]), parse_rfc3339(item["last_seen"])
            if first > last:
                raise SchemaError(f"edge {s}->{t}: first_seen after last_seen")
            g.edges[(s, t)] = MigrationEdge(s, t, first, last, clients, None if clients else w)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed graph document: {exc}") from exc
    return g


def save_graph(g: MigrationGraph, path: str | os.PathLike) -> None:
    text = json.dumps(graph_to_dict(g), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_graph(path: str | os.PathLike) -> MigrationGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not JSON ({exc})") from exc
    return graph_from_dict(doc)


def graph_filename(library: LibraryId) -> str:
    return f"{library.group_id}__{library.artifact_id}.json"


# -- events CSV ------------------------------------------------------------------

def _event_row(e: MigrationEvent) -> list[str]:
    return [
        e.project_id, e.library.group_id, e.library.artifact_id,
        e.from_version, e.to_version, e.sha,
        format_rfc3339(e.timestamp), e.direction.value,
    ]


def events_to_csv(events: Iterable[MigrationEvent]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(EVENT_COLUMNS)
    for e in events:
        writer.writerow(_event_row(e))
    return buf.getvalue()


def export_events_csv(events: Iterable[MigrationEvent], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(events_to_csv(events))


def import_events_csv(path: str | os.PathLike) -> list[MigrationEvent]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EVENT_COLUMNS:
            raise CsvFormatError(1, f"expected header {','.join(EVENT_COLUMNS)}")
        events = []
        for row in reader:
            line = reader.line_num
            if len(row) != len(EVENT_COLUMNS):
                raise CsvFormatError(line, f"expected {len(EVENT_COLUMNS)} columns, got {len(row)}")
            pid, group, artifact, v1, v2, sha, ts, direction = row
            try:
                events.append(MigrationEvent(
                    project_id=pid,
                    library=LibraryId(group, artifact),
                    from_version=v1,
                    to_version=v2,
                    sha=sha,
                    timestamp=parse_rfc3339(ts),
                    direction=Direction(direction),
                ))
            except ValueError as exc:
                raise CsvFormatError(line, str(exc)) from exc
    return events
