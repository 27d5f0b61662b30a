import json
import random
from datetime import timedelta

import pytest
from hypothesis import given, settings, strategies as st

from migplan.demo import SLF4J, slf4j_events
from migplan.errors import CsvFormatError, DirectionRejected, SchemaError
from migplan.extract import Direction, LibraryId, MigrationEvent
from migplan.graph import (
    MigrationGraph, add_event, build_graphs, export_events_csv, graph_to_dict, import_events_csv,
    load_graph, save_graph,
)
from conftest import utc

SLF = LibraryId("org.slf4j", "slf4j-api")


def ev(project, v1, v2, day=1, direction=Direction.UPGRADE, lib=SLF, sha=None):
    return MigrationEvent(project, lib, v1, v2, sha or f"{day:040x}", utc(2020, 1, 1) + timedelta(days=day), direction)


class TestAddEvent:
    def test_two_projects(self):
        g = MigrationGraph(SLF)
        add_event(g, ev("p1", "1.6.1", "1.6.4"))
        add_event(g, ev("p2", "1.6.1", "1.6.4", day=5))
        assert g.weight("1.6.1", "1.6.4") == 2
        edge = g.edges[("1.6.1", "1.6.4")]
        assert (edge.first_seen, edge.last_seen) == (utc(2020, 1, 2), utc(2020, 1, 6))

    def test_same_project_twice(self):
        g = MigrationGraph(SLF)
        add_event(g, ev("p1", "1.6.1", "1.6.4", day=1))
        add_event(g, ev("p1", "1.6.1", "1.6.4", day=9))
        assert g.weight("1.6.1", "1.6.4") == 1

    def test_slf4j_corpus_edge_weight(self, slf4j_graph):
        assert slf4j_graph.weight("1.6.1", "1.6.4") == 14

    def test_downgrade_rejected(self):
        g = MigrationGraph(SLF)
        with pytest.raises(DirectionRejected):
            add_event(g, ev("p", "1.7.25", "1.6.1", direction=Direction.DOWNGRADE))
        with pytest.raises(DirectionRejected):
            add_event(g, ev("p", "1.7", "1.8-rc", direction=Direction.UNORDERED))
        add_event(g, ev("p", "1.7.25", "1.6.1", direction=Direction.DOWNGRADE), include_downgrades=True)
        assert g.weight("1.7.25", "1.6.1") == 1

    def test_wrong_library(self):
        with pytest.raises(ValueError):
            add_event(MigrationGraph(SLF), ev("p", "1", "2", lib=LibraryId("a", "b")))

    def test_build_graphs_side_ledger(self):
        events = [ev("p", "1.6.1", "1.6.4"), ev("q", "1.7.25", "1.6.1", direction=Direction.DOWNGRADE)]
        graphs, rejected = build_graphs(events)
        assert list(graphs) == [SLF]
        assert rejected == [events[1]]
        graphs, rejected = build_graphs(events, include_downgrades=True)
        assert rejected == [] and graphs[SLF].total_weight() == 2


events_strategy = st.lists(
    st.tuples(st.sampled_from(["p1", "p2", "p3", "p4"]), st.integers(0, 4), st.integers(1, 3), st.integers(0, 50)),
    max_size=40,
).map(lambda rows: [ev(p, f"1.{a}", f"1.{a + d}", day) for p, a, d, day in rows])


@given(events_strategy)
def test_weight_conservation(events):
    graphs, _ = build_graphs(events)
    total = sum(g.total_weight() for g in graphs.values())
    assert total == len({(e.project_id, e.from_version, e.to_version) for e in events})


@given(events_strategy, st.randoms(use_true_random=False))
def test_insertion_order_independent(events, rnd):
    shuffled = list(events)
    rnd.shuffle(shuffled)
    a, _ = build_graphs(events)
    b, _ = build_graphs(shuffled)
    assert {k: graph_to_dict(g) for k, g in a.items()} == {k: graph_to_dict(g) for k, g in b.items()}


@given(events_strategy)
def test_no_loops_or_duplicates(events):
    for g in build_graphs(events)[0].values():
        assert all(s != t for s, t in g.edges)
        assert all(s in g.nodes and t in g.nodes for s, t in g.edges)


class TestSnapshots:
    def test_empty_round_trip(self, tmp_path):
        g = MigrationGraph(SLF)
        save_graph(g, tmp_path / "g.json")
        assert load_graph(tmp_path / "g.json") == g

    def test_small_round_trip(self, tmp_path):
        g = MigrationGraph(SLF)
        add_event(g, ev("p1", "1.0", "1.1"))
        add_event(g, ev("p2", "1.1", "1.2", day=3))
        add_event(g, ev("p3", "1.1", "1.2", day=4))
        assert len(g.nodes) == 3 and len(g.edges) == 2
        save_graph(g, tmp_path / "g.json")
        assert load_graph(tmp_path / "g.json") == g

    def test_byte_stable(self, tmp_path, slf4j_graph):
        save_graph(slf4j_graph, tmp_path / "a.json")
        save_graph(load_graph(tmp_path / "a.json"), tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        doc = json.loads((tmp_path / "a.json").read_text())
        assert doc["nodes"] == sorted(doc["nodes"])
        assert [(e["from"], e["to"]) for e in doc["edges"]] == sorted((e["from"], e["to"]) for e in doc["edges"])

    def test_missing_node(self, tmp_path):
        doc = {"schema": 1, "library": {"group": "a", "artifact": "b"}, "nodes": ["1.0"],
               "edges": [{"from": "1.0", "to": "2.0", "weight": 1,
                          "first_seen": "2020-01-01T00:00:00Z", "last_seen": "2020-01-01T00:00:00Z"}]}
        (tmp_path / "g.json").write_text(json.dumps(doc))
        with pytest.raises(SchemaError):
            load_graph(tmp_path / "g.json")

    def test_wrong_schema_version(self, tmp_path):
        (tmp_path / "g.json").write_text(json.dumps({"schema": 2}))
        with pytest.raises(SchemaError):
            load_graph(tmp_path / "g.json")

    def test_without_client_lists(self, tmp_path):
        doc = {"schema": 1, "library": {"group": "a", "artifact": "b"}, "nodes": ["1.0", "2.0"],
               "edges": [{"from": "1.0", "to": "2.0", "weight": 7,
                          "first_seen": "2020-01-01T00:00:00Z", "last_seen": "2020-02-01T00:00:00Z"}]}
        (tmp_path / "g.json").write_text(json.dumps(doc))
        assert load_graph(tmp_path / "g.json").weight("1.0", "2.0") == 7


class TestEventsCsv:
    def test_one_event(self, tmp_path):
        events = [ev("owner/name", "1.2", "1.3", lib=LibraryId("log4j", "log4j"))]
        export_events_csv(events, tmp_path / "e.csv")
        assert import_events_csv(tmp_path / "e.csv") == events
        assert (tmp_path / "e.csv").read_text().splitlines()[0] == \
            "project_id,group_id,artifact_id,from_version,to_version,sha,timestamp,direction"

    def test_wrong_column_count(self, tmp_path):
        p = tmp_path / "e.csv"
        export_events_csv([ev("a", "1", "2"), ev("b", "1", "2")], p)
        lines = p.read_text().splitlines()
        lines[2] = lines[2] + ",extra"
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(CsvFormatError) as info:
            import_events_csv(p)
        assert info.value.line == 3

    def test_thousand_synthetic_events(self, tmp_path):
        rnd = random.Random(7)
        events = []
        for i in range(1000):
            a = rnd.randint(0, 20)
            direction = rnd.choice(list(Direction))
            events.append(MigrationEvent(
                project_id=rnd.choice(["o/x", 'quote"d', "comma,name", "plain"]),
                library=LibraryId(f"g{rnd.randint(0, 5)}", f"a{rnd.randint(0, 5)}"),
                from_version=f"1.{a}", to_version=f"1.{a + 1}-{rnd.choice(['', 'beta'])}".rstrip("-"),
                sha=f"{rnd.getrandbits(160):040x}",
                timestamp=utc(2010, 1, 1) + timedelta(seconds=rnd.randint(0, 10**9)),
                direction=direction,
            ))
        export_events_csv(events, tmp_path / "e.csv")
        assert import_events_csv(tmp_path / "e.csv") == events

    def test_slf4j_replay_through_csv(self, tmp_path):
        export_events_csv(slf4j_events(), tmp_path / "e.csv")
        graphs, _ = build_graphs(import_events_csv(tmp_path / "e.csv"))
        assert graphs[SLF4J].weight("1.6.1", "1.6.4") == 14
