"""Diagnosis-transition graphs per outcome group, with modularity clustering.

Each patient's admissions, ordered by timestamp, contribute one directed
edge per consecutive code pair (an ``all_pairs`` switch links every
earlier admission to every later one instead).  Repeated identical
consecutive codes stay as self-loops.  Clustering is greedy modularity
maximization — local moves then community aggregation, repeated to a
fixed point — on the symmetrized weights.  The modularity of the final
partition is evaluated in exact rational arithmetic before conversion
to float, so small cases can be checked against exhaustive search
without tolerance games.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import BadLabel, BadSpec, EmptyGraph, UnlabeledPatient
from .rng import Xoshiro256StarStar, derive_seed

AF_GROUP = "AF"
NON_AF_GROUP = "nonAF"
GROUPS = (AF_GROUP, NON_AF_GROUP)


@dataclass(frozen=True)
class EventRecord:
    patient_id: str
    timestamp: datetime
    code: str


def parse_events(path: str | Path) -> list[EventRecord]:
    """Read admission events from CSV (patient_id, timestamp, code)."""
    events: list[EventRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"patient_id", "timestamp", "code"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise BadSpec(f"events file needs columns {sorted(required)}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                when = datetime.fromisoformat(row["timestamp"])
            except ValueError as exc:
                raise BadSpec(f"line {lineno}: bad timestamp {row['timestamp']!r}") from exc
            code = row["code"].strip()
            if not code:
                raise BadSpec(f"line {lineno}: empty diagnosis code")
            events.append(EventRecord(row["patient_id"], when, code))
    return events


def parse_group_labels(path: str | Path) -> dict[str, str]:
    """patient_id -> AF / nonAF from a two-column CSV."""
    labels: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"patient_id", "group"} <= set(reader.fieldnames):
            raise BadSpec(f"label file needs patient_id and group columns, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            group = row["group"].strip()
            if group not in GROUPS:
                raise BadLabel(f"line {lineno}: group must be one of {GROUPS}, got {group!r}")
            labels[row["patient_id"]] = group
    return labels


@dataclass
class PathwayGraph:
    group: str
    edges: dict[tuple[str, str], int] = field(default_factory=dict)
    n_patients: int = 0

    @property
    def nodes(self) -> list[str]:
        seen = {u for u, _ in self.edges} | {v for _, v in self.edges}
        return sorted(seen)

    def degree(self, node: str) -> int:
        """Distinct in-edges plus distinct out-edges; a self-loop counts twice."""
        return sum(1 for u, _ in self.edges if u == node) + sum(
            1 for _, v in self.edges if v == node
        )

    def degrees(self) -> dict[str, int]:
        out: dict[str, int] = {n: 0 for n in self.nodes}
        for u, v in self.edges:
            out[u] += 1
            out[v] += 1
        return out

    @property
    def total_weight(self) -> int:
        return sum(self.edges.values())


def build_graphs(
    events: Iterable[EventRecord],
    labels: Mapping[str, str],
    all_pairs: bool = False,
) -> tuple[PathwayGraph, PathwayGraph]:
    """(AF graph, nonAF graph) from admission sequences.

    Events are ordered per patient by timestamp, ties keeping input
    order, and each consecutive pair adds weight 1 to its directed edge.
    """
    per_patient: dict[str, list[tuple[datetime, int, str]]] = {}
    for order, event in enumerate(events):
        if event.patient_id not in labels:
            raise UnlabeledPatient(f"patient {event.patient_id!r} has no group label")
        per_patient.setdefault(event.patient_id, []).append(
            (event.timestamp, order, event.code)
        )

    graphs = {g: PathwayGraph(group=g) for g in GROUPS}
    for patient_id in sorted(per_patient):
        group = labels[patient_id]
        if group not in GROUPS:
            raise BadLabel(f"patient {patient_id!r}: group must be one of {GROUPS}, got {group!r}")
        graph = graphs[group]
        graph.n_patients += 1
        codes = [code for _, _, code in sorted(per_patient[patient_id])]
        if all_pairs:
            pairs = [(codes[i], codes[j]) for i in range(len(codes)) for j in range(i + 1, len(codes))]
        else:
            pairs = list(zip(codes, codes[1:]))
        for pair in pairs:
            graph.edges[pair] = graph.edges.get(pair, 0) + 1
    return graphs[AF_GROUP], graphs[NON_AF_GROUP]


# ---------------------------------------------------------------------------
# modularity

def symmetrized_weights(graph: PathwayGraph) -> dict[tuple[str, str], int]:
    """Undirected weights W with W[u][v] stored once per unordered pair;
    self-loops carry twice their directed weight (standard adjacency form)."""
    sym: dict[tuple[str, str], int] = {}
    for (u, v), w in graph.edges.items():
        if u == v:
            key = (u, v)
            sym[key] = sym.get(key, 0) + 2 * w
        else:
            key = (u, v) if u <= v else (v, u)
            sym[key] = sym.get(key, 0) + w
    return sym


def modularity_exact(
    weights: Mapping[tuple[str, str], int], partition: Mapping[str, int]
) -> Fraction:
    """Newman modularity of a partition, in exact rationals.

    ``weights`` is the symmetrized form above: unordered pairs once,
    self-loops already doubled.
    """
    strength: dict[str, int] = {n: 0 for n in partition}
    two_m = 0
    for (u, v), w in weights.items():
        if u == v:
            strength[u] += w
            two_m += w
        else:
            strength[u] += w
            strength[v] += w
            two_m += 2 * w
    if two_m == 0:
        return Fraction(0)
    q = Fraction(0)
    for (u, v), w in weights.items():
        if partition[u] == partition[v]:
            q += Fraction(w if u == v else 2 * w, two_m)
    for node_a, k_a in strength.items():
        for node_b, k_b in strength.items():
            if partition[node_a] == partition[node_b]:
                q -= Fraction(k_a * k_b, two_m * two_m)
    return q


@dataclass(frozen=True)
class CommunityAssignment:
    communities: dict[str, int]
    modularity: float

    def groups(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for node in sorted(self.communities):
            out.setdefault(self.communities[node], []).append(node)
        return out


def _local_moves(
    nodes: list[int],
    adj: list[dict[int, float]],
    strength: list[float],
    two_m: float,
    order: list[int],
) -> list[int]:
    """One Louvain phase: repeated best-gain single-node moves."""
    community = list(range(len(nodes)))
    comm_strength = strength.copy()
    improved = True
    while improved:
        improved = False
        for node in order:
            home = community[node]
            k = strength[node]
            self_loop = adj[node].get(node, 0.0)
            # weight from node to each neighbouring community, itself removed
            to_comm: dict[int, float] = {}
            for other, w in adj[node].items():
                if other == node:
                    continue
                to_comm[community[other]] = to_comm.get(community[other], 0.0) + w
            comm_strength[home] -= k
            base_gain = to_comm.get(home, 0.0) - k * comm_strength[home] / two_m
            best_comm, best_gain = home, base_gain
            for cand in sorted(to_comm):
                if cand == home:
                    continue
                gain = to_comm[cand] - k * comm_strength[cand] / two_m
                if gain > best_gain + 1e-12:
                    best_comm, best_gain = cand, gain
            comm_strength[best_comm] += k
            if best_comm != home:
                community[node] = best_comm
                improved = True
            _ = self_loop  # self-loops cancel out of the move gain
    return community


def cluster_modularity(graph: PathwayGraph, seed: int = 0) -> CommunityAssignment:
    """Greedy agglomerative modularity maximization on symmetrized weights."""
    names = graph.nodes
    if not names:
        raise EmptyGraph(f"group {graph.group!r} produced no transition edges")
    index = {name: i for i, name in enumerate(names)}
    sym = symmetrized_weights(graph)

    # float working copy for move gains; exact arithmetic at the end
    adj: list[dict[int, float]] = [dict() for _ in names]
    for (u, v), w in sym.items():
        ui, vi = index[u], index[v]
        if ui == vi:
            adj[ui][ui] = adj[ui].get(ui, 0.0) + float(w)
        else:
            adj[ui][vi] = adj[ui].get(vi, 0.0) + float(w)
            adj[vi][ui] = adj[vi].get(ui, 0.0) + float(w)
    strength = [sum(neigh.values()) for neigh in adj]
    two_m = sum(strength)
    if two_m == 0:
        communities = {name: i for i, name in enumerate(names)}
        return CommunityAssignment(communities=communities, modularity=0.0)

    rng = Xoshiro256StarStar(derive_seed(seed, len(names)))
    membership = list(range(len(names)))  # original node -> current community label
    level_nodes = list(range(len(names)))
    level_adj = adj
    level_strength = strength
    while True:
        order = list(range(len(level_nodes)))
        rng.shuffle(order)
        community = _local_moves(level_nodes, level_adj, level_strength, two_m, order)
        labels = sorted(set(community))
        if len(labels) == len(level_nodes):
            break
        relabel = {old: new for new, old in enumerate(labels)}
        community = [relabel[c] for c in community]
        membership = [community[membership[i]] for i in range(len(names))]
        # aggregate communities into super-nodes
        n_next = len(labels)
        next_adj: list[dict[int, float]] = [dict() for _ in range(n_next)]
        for node, neigh in enumerate(level_adj):
            cu = community[node]
            for other, w in neigh.items():
                cv = community[other]
                if cu == cv:
                    if node <= other:
                        add = w if node == other else 2.0 * w
                        next_adj[cu][cu] = next_adj[cu].get(cu, 0.0) + add
                else:
                    next_adj[cu][cv] = next_adj[cu].get(cv, 0.0) + w
        level_nodes = list(range(n_next))
        level_adj = next_adj
        level_strength = [sum(neigh.values()) for neigh in next_adj]

    # stable labels: communities numbered by first appearance in code order
    final: dict[str, int] = {}
    relabel: dict[int, int] = {}
    for i, name in enumerate(names):
        raw = membership[i]
        if raw not in relabel:
            relabel[raw] = len(relabel)
        final[name] = relabel[raw]
    q = modularity_exact(sym, final)
    return CommunityAssignment(communities=final, modularity=float(q))


# ---------------------------------------------------------------------------
# reports and exports

def graph_report(graph: PathwayGraph, assignment: CommunityAssignment) -> dict:
    """Deterministic per-community summary (sizes, top-degree codes)."""
    degrees = graph.degrees()
    missing = [n for n in graph.nodes if n not in assignment.communities]
    if missing:
        raise BadSpec(f"assignment lacks nodes: {', '.join(missing[:5])}")
    blocks = []
    for community, members in sorted(assignment.groups().items()):
        ranked = sorted(members, key=lambda n: (-degrees[n], n))
        blocks.append(
            {
                "community": community,
                "size": len(members),
                "codes": members,
                "top_codes": ranked[: min(5, len(ranked))],
            }
        )
    return {
        "group": graph.group,
        "n_patients": graph.n_patients,
        "n_nodes": len(graph.nodes),
        "n_edges": len(graph.edges),
        "total_weight": graph.total_weight,
        "modularity": assignment.modularity,
        "communities": blocks,
    }


_PALETTE = (
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
    "#e6ab02", "#a6761d", "#666666",
)


def _node_sizes(graph: PathwayGraph) -> dict[str, float]:
    degrees = graph.degrees()
    top = max(degrees.values(), default=0)
    return {
        n: 0.3 + (0.7 * degrees[n] / top if top else 0.0)
        for n in graph.nodes
    }


def export_graph(
    graph: PathwayGraph, assignment: CommunityAssignment | None = None, fmt: str = "dot"
) -> str:
    communities = assignment.communities if assignment else {}
    sizes = _node_sizes(graph)
    degrees = graph.degrees()
    if fmt == "dot":
        lines = [f'digraph "{graph.group}" {{', "  node [shape=circle, style=filled];"]
        for node in graph.nodes:
            color = _PALETTE[communities.get(node, 0) % len(_PALETTE)]
            lines.append(
                f'  "{node}" [width={sizes[node]:.3f}, fillcolor="{color}",'
                f' community={communities.get(node, 0)}, degree={degrees[node]}];'
            )
        for (u, v), w in sorted(graph.edges.items()):
            lines.append(f'  "{u}" -> "{v}" [weight={w}, label={w}];')
        lines.append("}")
        return "\n".join(lines) + "\n"
    if fmt == "graphml":
        head = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
            '  <key id="d_size" for="node" attr.name="size" attr.type="double"/>',
            '  <key id="d_comm" for="node" attr.name="community" attr.type="int"/>',
            '  <key id="d_deg" for="node" attr.name="degree" attr.type="int"/>',
            '  <key id="d_w" for="edge" attr.name="weight" attr.type="int"/>',
            f'  <graph id="{graph.group}" edgedefault="directed">',
        ]
        for node in graph.nodes:
            head.append(
                f'    <node id="{node}"><data key="d_size">{sizes[node]:.3f}</data>'
                f'<data key="d_comm">{communities.get(node, 0)}</data>'
                f'<data key="d_deg">{degrees[node]}</data></node>'
            )
        for i, ((u, v), w) in enumerate(sorted(graph.edges.items())):
            head.append(
                f'    <edge id="e{i}" source="{u}" target="{v}">'
                f'<data key="d_w">{w}</data></edge>'
            )
        head.extend(["  </graph>", "</graphml>"])
        return "\n".join(head) + "\n"
    if fmt == "json":
        doc = {
            "group": graph.group,
            "n_patients": graph.n_patients,
            "nodes": [
                {
                    "code": n,
                    "degree": degrees[n],
                    "size": round(sizes[n], 3),
                    "community": communities.get(n, 0),
                }
                for n in graph.nodes
            ],
            "edges": [
                {"from": u, "to": v, "weight": w} for (u, v), w in sorted(graph.edges.items())
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    raise BadSpec(f"unknown graph format {fmt!r}")


# ---------------------------------------------------------------------------
# synthetic admission sequences for demos and tests

# a small universe of plausible course-of-disease codes per outcome group
_SHARED_CODES = ["E05.0", "E05.1", "E05.2", "E05.8", "I10", "I11.9", "E11", "Z03.8"]
_AF_CODES = ["I48.0", "I48.1", "I48.9", "I50.0"]
_NON_AF_CODES = ["E04.1", "E04.2", "Z09.8"]


def generate_synthetic_events(
    n_af: int, n_non_af: int, seed: int
) -> tuple[list[EventRecord], dict[str, str]]:
    """Deterministic admission sequences for two outcome groups."""
    if n_af < 1 or n_non_af < 1:
        raise BadSpec("both groups need at least one patient")
    rng = Xoshiro256StarStar(seed)
    events: list[EventRecord] = []
    labels: dict[str, str] = {}
    total = n_af + n_non_af
    width = max(4, len(str(total)))
    for i in range(total):
        group = AF_GROUP if i < n_af else NON_AF_GROUP
        patient = f"e{i + 1:0{width}d}"
        labels[patient] = group
        pool = _SHARED_CODES + (_AF_CODES if group == AF_GROUP else _NON_AF_CODES)
        n_admissions = 2 + rng.below(5)  # 2..6 admissions
        day = 0
        for _ in range(n_admissions):
            day += 1 + rng.below(180)
            code = pool[rng.below(len(pool))]
            events.append(
                EventRecord(patient, datetime(2015, 1, 1) + _days(day), code)
            )
    return events, labels


def _days(n: int):
    from datetime import timedelta

    return timedelta(days=n)


def write_events(events: Sequence[EventRecord], labels: Mapping[str, str], out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    events_path = out_dir / "events.csv"
    labels_path = out_dir / "groups.csv"
    with open(events_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["patient_id", "timestamp", "code"])
        for e in events:
            writer.writerow([e.patient_id, e.timestamp.isoformat(), e.code])
    with open(labels_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["patient_id", "group"])
        for patient in sorted(labels):
            writer.writerow([patient, labels[patient]])
    return events_path, labels_path
