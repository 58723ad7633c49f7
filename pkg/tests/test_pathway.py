"""Admission-transition graphs and modularity clustering.

The clustering oracle is an independent exact-rational modularity
implementation (full double sum over the adjacency matrix) plus an
exhaustive search over every partition of an eight-node fixture —
4140 of them — so the greedy result is checked against the true
optimum without tolerances."""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from datetime import datetime, timedelta
from fractions import Fraction

import pytest

from tafrisk.errors import BadLabel, BadSpec, EmptyGraph, UnlabeledPatient
from tafrisk.pathway import (
    AF_GROUP,
    NON_AF_GROUP,
    CommunityAssignment,
    EventRecord,
    PathwayGraph,
    build_graphs,
    cluster_modularity,
    export_graph,
    generate_synthetic_events,
    graph_report,
    modularity_exact,
    parse_events,
    parse_group_labels,
    symmetrized_weights,
    write_events,
)

T0 = datetime(2020, 1, 1)


def _ev(pid: str, day: int, code: str) -> EventRecord:
    return EventRecord(pid, T0 + timedelta(days=day), code)


# ---------------------------------------------------------------------------
# graph construction

def test_consecutive_edges_follow_time_order():
    events = [
        _ev("p1", 3, "C"),  # out of input order on purpose
        _ev("p1", 1, "A"),
        _ev("p1", 2, "B"),
        _ev("p2", 1, "A"),
        _ev("p2", 2, "A"),  # repeat -> self-loop
        _ev("p3", 5, "X"),  # single admission: no edges, still counted
    ]
    labels = {"p1": AF_GROUP, "p2": AF_GROUP, "p3": NON_AF_GROUP}
    af, non_af = build_graphs(events, labels)
    assert af.edges == {("A", "B"): 1, ("B", "C"): 1, ("A", "A"): 1}
    assert af.n_patients == 2
    assert non_af.edges == {}
    assert non_af.n_patients == 1


def test_timestamp_ties_keep_input_order():
    events = [_ev("p1", 1, "B"), _ev("p1", 1, "A")]
    af, _ = build_graphs(events, {"p1": AF_GROUP})
    assert af.edges == {("B", "A"): 1}


def test_all_pairs_links_every_later_admission():
    events = [_ev("p1", d, c) for d, c in [(1, "A"), (2, "B"), (3, "C"), (4, "A")]]
    af, _ = build_graphs(events, {"p1": AF_GROUP}, all_pairs=True)
    assert af.edges == {
        ("A", "B"): 1,
        ("A", "C"): 1,
        ("A", "A"): 1,
        ("B", "C"): 1,
        ("B", "A"): 1,
        ("C", "A"): 1,
    }
    assert af.total_weight == 4 * 3 // 2


def test_edge_totals_match_admission_counts():
    events, labels = generate_synthetic_events(9, 7, seed=42)
    per_patient: dict[str, int] = {}
    for e in events:
        per_patient[e.patient_id] = per_patient.get(e.patient_id, 0) + 1
    af, non_af = build_graphs(events, labels)
    assert af.n_patients == 9 and non_af.n_patients == 7
    assert af.total_weight + non_af.total_weight == sum(
        n - 1 for n in per_patient.values()
    )
    af2, non_af2 = build_graphs(events, labels, all_pairs=True)
    assert af2.total_weight + non_af2.total_weight == sum(
        n * (n - 1) // 2 for n in per_patient.values()
    )


def test_unlabeled_and_badly_labeled_patients_are_rejected():
    events = [_ev("p1", 1, "A"), _ev("p1", 2, "B")]
    with pytest.raises(UnlabeledPatient):
        build_graphs(events, {})
    with pytest.raises(BadLabel):
        build_graphs(events, {"p1": "maybe"})


def test_symmetrization_merges_directions_and_doubles_loops():
    g = PathwayGraph(group=AF_GROUP)
    g.edges = {("a", "b"): 2, ("b", "a"): 3, ("a", "a"): 2, ("b", "c"): 1}
    assert symmetrized_weights(g) == {("a", "b"): 5, ("a", "a"): 4, ("b", "c"): 1}


def test_degree_counts_distinct_edges():
    g = PathwayGraph(group=AF_GROUP)
    g.edges = {("a", "b"): 5, ("b", "a"): 1, ("a", "a"): 2}
    # a: out {b, a} + in {a, b}; the self-loop counts on both sides
    assert g.degree("a") == 4
    assert g.degree("b") == 2
    assert g.degrees() == {"a": 4, "b": 2}
    assert g.nodes == ["a", "b"]


# ---------------------------------------------------------------------------
# modularity: independent oracle + exhaustive search

def _oracle_modularity(sym, comm_of) -> Fraction:
    """Newman modularity via the full double sum, exact rationals."""
    nodes = sorted(set(comm_of))
    adj = {u: {v: 0 for v in nodes} for u in nodes}
    for (u, v), w in sym.items():
        if u == v:
            adj[u][u] += w
        else:
            adj[u][v] += w
            adj[v][u] += w
    strength = {u: sum(adj[u].values()) for u in nodes}
    two_m = sum(strength.values())
    if two_m == 0:
        return Fraction(0)
    q = Fraction(0)
    for u in nodes:
        for v in nodes:
            if comm_of[u] == comm_of[v]:
                q += Fraction(adj[u][v], two_m) - Fraction(
                    strength[u] * strength[v], two_m * two_m
                )
    return q


def _partitions(items):
    """Every set partition of ``items`` (Bell-number many)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1 :]
        yield [[first]] + part


def _two_cliques() -> PathwayGraph:
    """Two 4-cliques joined by one bridge edge; optimum is the clique split."""
    g = PathwayGraph(group=AF_GROUP)
    a = ["a1", "a2", "a3", "a4"]
    b = ["b1", "b2", "b3", "b4"]
    for block in (a, b):
        for i in range(4):
            for j in range(i + 1, 4):
                g.edges[(block[i], block[j])] = 1
    g.edges[("a4", "b1")] = 1
    return g


def test_partition_enumerator_hits_the_bell_number():
    assert sum(1 for _ in _partitions(list(range(8)))) == 4140
    assert sum(1 for _ in _partitions(list(range(4)))) == 15


def test_exact_modularity_against_oracle_on_hand_partitions():
    g = _two_cliques()
    sym = symmetrized_weights(g)
    nodes = g.nodes
    hand_partitions = [
        {n: 0 for n in nodes},                       # everything together
        {n: i for i, n in enumerate(nodes)},         # all singletons
        {n: (0 if n.startswith("a") else 1) for n in nodes},  # the clique split
        {n: (0 if n in ("a1", "b1") else 1) for n in nodes},  # deliberately bad
    ]
    for comm in hand_partitions:
        assert modularity_exact(sym, comm) == _oracle_modularity(sym, comm)
    # the clique split has the known value 24/26 - 2 * (13/26)^2 = 11/26
    clique_split = hand_partitions[2]
    assert modularity_exact(sym, clique_split) == Fraction(11, 26)


def test_clustering_finds_the_exhaustive_optimum():
    g = _two_cliques()
    sym = symmetrized_weights(g)
    nodes = g.nodes

    best_q = None
    for parts in _partitions(nodes):
        comm_of = {n: i for i, block in enumerate(parts) for n in block}
        q = _oracle_modularity(sym, comm_of)
        if best_q is None or q > best_q:
            best_q = q
    assert best_q == Fraction(11, 26)

    for seed in (0, 1, 7):
        found = cluster_modularity(g, seed=seed)
        assert found.modularity == float(best_q)
        blocks = {frozenset(members) for members in found.groups().values()}
        assert blocks == {
            frozenset({"a1", "a2", "a3", "a4"}),
            frozenset({"b1", "b2", "b3", "b4"}),
        }


def test_modularity_of_disconnected_dumbbells():
    g = PathwayGraph(group=AF_GROUP)
    g.edges = {("a", "b"): 1, ("c", "d"): 1}
    found = cluster_modularity(g, seed=0)
    assert found.modularity == 0.5  # 1 - 2 * (2/4)^2, exactly
    assert found.groups() == {0: ["a", "b"], 1: ["c", "d"]}


def test_reported_modularity_matches_oracle_on_random_graphs():
    for seed in range(6):
        events, labels = generate_synthetic_events(6, 5, seed=seed)
        af, non_af = build_graphs(events, labels)
        for g in (af, non_af):
            if not g.edges:
                continue
            found = cluster_modularity(g, seed=seed)
            sym = symmetrized_weights(g)
            assert found.modularity == float(_oracle_modularity(sym, found.communities))
            # never worse than leaving every node alone
            singletons = {n: i for i, n in enumerate(g.nodes)}
            assert found.modularity >= float(_oracle_modularity(sym, singletons))


def test_community_labels_count_up_by_first_appearance():
    g = _two_cliques()
    found = cluster_modularity(g, seed=3)
    names = g.nodes
    assert found.communities[names[0]] == 0
    seen: list[int] = []
    for n in names:
        c = found.communities[n]
        if c not in seen:
            assert c == len(seen)  # new labels appear in increasing order
            seen.append(c)
    assert sorted(seen) == sorted(set(found.communities.values()))


def test_clustering_refuses_an_edgeless_graph():
    with pytest.raises(EmptyGraph):
        cluster_modularity(PathwayGraph(group=AF_GROUP), seed=0)


# ---------------------------------------------------------------------------
# report and exports

@pytest.fixture(scope="module")
def demo():
    events, labels = generate_synthetic_events(10, 10, seed=5)
    af, _ = build_graphs(events, labels)
    return af, cluster_modularity(af, seed=5)


def test_graph_report_structure(demo):
    graph, assignment = demo
    report = graph_report(graph, assignment)
    assert report["group"] == AF_GROUP
    assert report["n_patients"] == 10
    assert report["n_nodes"] == len(graph.nodes)
    assert report["n_edges"] == len(graph.edges)
    assert report["total_weight"] == graph.total_weight
    assert report["modularity"] == assignment.modularity
    assert sum(block["size"] for block in report["communities"]) == len(graph.nodes)
    degrees = graph.degrees()
    for block in report["communities"]:
        assert block["codes"] == sorted(block["codes"])
        ranked = sorted(block["codes"], key=lambda n: (-degrees[n], n))
        assert block["top_codes"] == ranked[:5]


def test_graph_report_requires_full_assignment(demo):
    graph, _ = demo
    partial = CommunityAssignment(communities={}, modularity=0.0)
    with pytest.raises(BadSpec):
        graph_report(graph, partial)


def test_dot_export(demo):
    graph, assignment = demo
    dot = export_graph(graph, assignment, fmt="dot")
    assert dot.startswith(f'digraph "{AF_GROUP}" {{')
    assert dot.rstrip().endswith("}")
    for (u, v), w in graph.edges.items():
        assert f'"{u}" -> "{v}" [weight={w}, label={w}];' in dot
    for node in graph.nodes:
        assert f'"{node}"' in dot


def test_graphml_export_parses(demo):
    graph, assignment = demo
    xml = export_graph(graph, assignment, fmt="graphml")
    root = ET.fromstring(xml)
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    nodes = root.findall(".//g:node", ns)
    edges = root.findall(".//g:edge", ns)
    assert len(nodes) == len(graph.nodes)
    assert len(edges) == len(graph.edges)
    assert {n.get("id") for n in nodes} == set(graph.nodes)
    total = sum(
        int(e.find("g:data", ns).text)
        for e in edges
        if e.find("g:data", ns) is not None
    )
    assert total == graph.total_weight


def test_json_export_round_trips(demo):
    graph, assignment = demo
    doc = json.loads(export_graph(graph, assignment, fmt="json"))
    assert doc["group"] == AF_GROUP
    assert doc["n_patients"] == graph.n_patients
    assert {n["code"] for n in doc["nodes"]} == set(graph.nodes)
    assert {(e["from"], e["to"]): e["weight"] for e in doc["edges"]} == graph.edges
    for n in doc["nodes"]:
        assert n["community"] == assignment.communities[n["code"]]
    with pytest.raises(BadSpec):
        export_graph(graph, assignment, fmt="svg")


# ---------------------------------------------------------------------------
# synthetic demo data and file round-trips

def test_synthetic_events_are_deterministic():
    a_events, a_labels = generate_synthetic_events(8, 6, seed=11)
    b_events, b_labels = generate_synthetic_events(8, 6, seed=11)
    c_events, _ = generate_synthetic_events(8, 6, seed=12)
    assert a_events == b_events and a_labels == b_labels
    assert a_events != c_events
    assert sum(1 for g in a_labels.values() if g == AF_GROUP) == 8
    assert sum(1 for g in a_labels.values() if g == NON_AF_GROUP) == 6
    per_patient: dict[str, list[datetime]] = {}
    for e in a_events:
        per_patient.setdefault(e.patient_id, []).append(e.timestamp)
    assert set(per_patient) == set(a_labels)
    for stamps in per_patient.values():
        assert 2 <= len(stamps) <= 6
        assert stamps == sorted(stamps)
        assert len(set(stamps)) == len(stamps)  # strictly increasing
    with pytest.raises(BadSpec):
        generate_synthetic_events(0, 5, seed=1)


def test_event_files_round_trip(tmp_path):
    events, labels = generate_synthetic_events(5, 4, seed=2)
    events_path, labels_path = write_events(events, labels, tmp_path)
    assert parse_events(events_path) == events
    assert parse_group_labels(labels_path) == labels


def test_event_parsing_rejects_malformed_files(tmp_path):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("patient_id,when,code\np1,2020-01-01,A\n")
    with pytest.raises(BadSpec, match="columns"):
        parse_events(bad_header)

    bad_stamp = tmp_path / "t.csv"
    bad_stamp.write_text("patient_id,timestamp,code\np1,yesterday,A\n")
    with pytest.raises(BadSpec, match="line 2"):
        parse_events(bad_stamp)

    empty_code = tmp_path / "c.csv"
    empty_code.write_text("patient_id,timestamp,code\np1,2020-01-01, \n")
    with pytest.raises(BadSpec, match="empty"):
        parse_events(empty_code)

    bad_group = tmp_path / "g.csv"
    bad_group.write_text("patient_id,group\np1,af\n")
    with pytest.raises(BadLabel):
        parse_group_labels(bad_group)

    bad_label_header = tmp_path / "lh.csv"
    bad_label_header.write_text("patient,outcome\np1,AF\n")
    with pytest.raises(BadSpec):
        parse_group_labels(bad_label_header)
