"""Graph data model, benchmark-format ingestion, and brute-force oracles.

Datasets use the de facto multi-file benchmark layout: ``{name}_A.txt``
(comma-separated 1-based global node-id pairs, one directed arc per line,
undirected edges present as both arcs), ``{name}_graph_indicator.txt``
(1-based graph id per node line), ``{name}_graph_labels.txt``, and optional
``{name}_node_labels.txt`` / ``{name}_edge_labels.txt`` /
``{name}_edge_attributes.txt`` (scalar edge weights).

The isomorphism / enumeration routines here are exact backtracking oracles
meant for tiny instances and for cross-checking the miner; the mining fast
path never calls them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

from .errors import DatasetError, InvalidPatternError, OracleScaleError


@dataclass(frozen=True)
class EdgeRec:
    """Undirected edge with categorical label and positive weight."""

    u: int
    v: int
    label: int = 0
    weight: float = 1.0

    def key(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u <= self.v else (self.v, self.u)


class Graph:
    """Immutable undirected labeled graph with 0-based contiguous node ids."""

    __slots__ = ("graph_id", "node_labels", "edges", "class_label",
                 "_adj", "_edge_label_map")

    def __init__(self, graph_id, node_labels, edges, class_label=0,
                 allow_self_loops=False):
        n = len(node_labels)
        if n == 0:
            raise ValueError("graph must have at least one node")
        seen = set()
        recs = []
        for e in edges:
            rec = e if isinstance(e, EdgeRec) else EdgeRec(*e)
            if not (0 <= rec.u < n and 0 <= rec.v < n):
                raise ValueError(f"edge ({rec.u},{rec.v}) references missing node")
            if rec.u == rec.v and not allow_self_loops:
                raise ValueError(f"self-loop on node {rec.u} (self-loops disabled)")
            if rec.weight <= 0:
                raise ValueError(f"edge ({rec.u},{rec.v}) has non-positive weight")
            if rec.key() in seen:
                raise ValueError(f"duplicate undirected edge ({rec.u},{rec.v})")
            seen.add(rec.key())
            recs.append(rec)
        self.graph_id = graph_id
        self.node_labels = tuple(node_labels)
        self.edges = tuple(recs)
        self.class_label = class_label

        adj = [[] for _ in range(n)]
        label_map = {}
        for eid, rec in enumerate(self.edges):
            adj[rec.u].append((rec.v, rec.label, eid))
            if rec.u != rec.v:
                adj[rec.v].append((rec.u, rec.label, eid))
            label_map[rec.key()] = rec.label
        self._adj = tuple(tuple(sorted(a)) for a in adj)
        self._edge_label_map = label_map

    @property
    def n_nodes(self) -> int:
        return len(self.node_labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def node_label(self, v: int) -> int:
        return self.node_labels[v]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(t for t, _, _ in self._adj[v])

    def adjacency(self, v: int):
        """Tuples ``(neighbor, edge_label, edge_id)`` sorted by neighbor."""
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def edge_label(self, u: int, v: int):
        """Label of edge {u,v}, or None when absent."""
        key = (u, v) if u <= v else (v, u)
        return self._edge_label_map.get(key)

    def is_connected(self) -> bool:
        if self.n_nodes == 1:
            return True
        seen = {0}
        stack = [0]
        while stack:
            for t, _, _ in self._adj[stack.pop()]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return len(seen) == self.n_nodes

    def __eq__(self, other):
        return (isinstance(other, Graph)
                and self.graph_id == other.graph_id
                and self.node_labels == other.node_labels
                and sorted(self.edges, key=EdgeRec.key) == sorted(other.edges, key=EdgeRec.key)
                and self.class_label == other.class_label)

    def __hash__(self):
        return hash((self.graph_id, self.node_labels, frozenset(e.key() for e in self.edges)))

    def __repr__(self):
        return f"Graph(id={self.graph_id}, n={self.n_nodes}, m={self.n_edges}, y={self.class_label})"


@dataclass
class GraphDataset:
    """Ordered collection of graphs sharing one label universe."""

    name: str
    graphs: list
    has_node_labels: bool = False
    has_edge_labels: bool = False

    def __post_init__(self):
        if not self.graphs:
            raise ValueError("dataset must contain at least one graph")
        for i, g in enumerate(self.graphs):
            if g.graph_id != i:
                raise ValueError(f"graph ids must be 0..N-1, got {g.graph_id} at {i}")

    def __len__(self):
        return len(self.graphs)

    @property
    def class_labels(self) -> list:
        return [g.class_label for g in self.graphs]

    @property
    def class_count(self) -> int:
        return len(set(self.class_labels))

    def __eq__(self, other):
        return (isinstance(other, GraphDataset)
                and self.name == other.name
                and self.graphs == other.graphs
                and self.has_node_labels == other.has_node_labels
                and self.has_edge_labels == other.has_edge_labels)


def _read_int_lines(path: Path, what: str) -> list[int]:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(float(line)))
            except ValueError as exc:
                raise DatasetError(f"{what}: bad value {line!r} at line {lineno} of {path.name}") from exc
    return values


def resolve_dataset_dir(directory, name: str) -> Path:
    """Accept either the file directory itself or its parent (``dir/name/``)."""
    directory = Path(directory)
    if not (directory / f"{name}_A.txt").is_file() \
            and (directory / name / f"{name}_A.txt").is_file():
        return directory / name
    return directory


def load_tu_dataset(directory, name: str, allow_self_loops: bool = False) -> GraphDataset:
    """Load a benchmark dataset from its multi-file text directory.

    Node ids are remapped to 0-based per-graph local ids and each undirected
    edge is stored once.  Edge weights are read from the optional
    ``_edge_attributes.txt`` file when it holds a single scalar per arc; they
    are carried on the graphs but unused by the rest of the pipeline.
    """
    directory = resolve_dataset_dir(directory, name)
    paths = {key: directory / f"{name}_{key}.txt"
             for key in ("A", "graph_indicator", "graph_labels",
                         "node_labels", "edge_labels", "edge_attributes")}
    for key in ("A", "graph_indicator", "graph_labels"):
        if not paths[key].is_file():
            raise DatasetError(f"missing mandatory dataset file: {paths[key]}")

    indicator = _read_int_lines(paths["graph_indicator"], "graph_indicator")
    graph_labels = _read_int_lines(paths["graph_labels"], "graph_labels")
    n_graphs = len(graph_labels)
    n_nodes_total = len(indicator)

    # global node id (1-based) -> (graph index, local id)
    local_of = []
    node_counts = [0] * n_graphs
    for lineno, gid in enumerate(indicator, start=1):
        if not (1 <= gid <= n_graphs):
            raise DatasetError(
                f"graph_indicator: graph id {gid} out of range at line {lineno}")
        local_of.append((gid - 1, node_counts[gid - 1]))
        node_counts[gid - 1] += 1
    for gi, cnt in enumerate(node_counts):
        if cnt == 0:
            raise DatasetError(f"graph {gi + 1} has no nodes (empty graph)")

    has_node_labels = paths["node_labels"].is_file()
    node_labels = (_read_int_lines(paths["node_labels"], "node_labels")
                   if has_node_labels else [0] * n_nodes_total)
    if len(node_labels) != n_nodes_total:
        raise DatasetError(
            f"node_labels: expected {n_nodes_total} lines, got {len(node_labels)}")

    has_edge_labels = paths["edge_labels"].is_file()
    edge_labels = None
    weights = None
    if paths["edge_attributes"].is_file():
        try:
            weights = [float(l.strip()) for l in open(paths["edge_attributes"]) if l.strip()]
        except ValueError:
            weights = None  # vector-valued attributes: ignore

    arc_list = []
    with open(paths["A"]) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise DatasetError(f"A: expected two node ids at line {lineno} of {paths['A'].name}")
            u, v = int(parts[0]), int(parts[1])
            if not (1 <= u <= n_nodes_total and 1 <= v <= n_nodes_total):
                raise DatasetError(
                    f"A: dangling node reference ({u},{v}) at line {lineno}")
            arc_list.append((lineno, u, v))
    if has_edge_labels:
        edge_labels = _read_int_lines(paths["edge_labels"], "edge_labels")
        if len(edge_labels) != len(arc_list):
            raise DatasetError(
                f"edge_labels: expected {len(arc_list)} lines, got {len(edge_labels)}")
    if weights is not None and len(weights) != len(arc_list):
        weights = None

    per_graph_edges = [dict() for _ in range(n_graphs)]
    for arc_idx, (lineno, u, v) in enumerate(arc_list):
        gu, lu = local_of[u - 1]
        gv, lv = local_of[v - 1]
        if gu != gv:
            raise DatasetError(
                f"A: edge ({u},{v}) spans graphs {gu + 1} and {gv + 1} at line {lineno}")
        if lu == lv and not allow_self_loops:
            raise DatasetError(f"A: self-loop on node {u} at line {lineno} "
                               "(pass allow_self_loops=True to accept)")
        key = (min(lu, lv), max(lu, lv))
        if key in per_graph_edges[gu]:
            continue  # second arc of an undirected edge
        label = edge_labels[arc_idx] if edge_labels is not None else 0
        weight = weights[arc_idx] if weights is not None else 1.0
        per_graph_edges[gu][key] = EdgeRec(key[0], key[1], label, weight)

    label_iter = iter(node_labels)
    per_graph_labels = [[next(label_iter) for _ in range(cnt)] for cnt in node_counts]

    graphs = []
    for gi in range(n_graphs):
        graphs.append(Graph(gi, per_graph_labels[gi],
                            sorted(per_graph_edges[gi].values(), key=EdgeRec.key),
                            class_label=graph_labels[gi],
                            allow_self_loops=allow_self_loops))
    return GraphDataset(name, graphs, has_node_labels, has_edge_labels)


def save_tu_dataset(ds: GraphDataset, directory) -> None:
    """Write ``ds`` back to the multi-file text layout (both arcs per edge)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = ds.name
    offsets = []
    total = 0
    for g in ds.graphs:
        offsets.append(total)
        total += g.n_nodes

    with open(directory / f"{name}_graph_indicator.txt", "w") as fh:
        for gi, g in enumerate(ds.graphs):
            fh.writelines(f"{gi + 1}\n" for _ in range(g.n_nodes))
    with open(directory / f"{name}_graph_labels.txt", "w") as fh:
        fh.writelines(f"{g.class_label}\n" for g in ds.graphs)

    arcs = []
    for gi, g in enumerate(ds.graphs):
        base = offsets[gi] + 1
        for e in g.edges:
            arcs.append((base + e.u, base + e.v, e.label, e.weight))
            if e.u != e.v:
                arcs.append((base + e.v, base + e.u, e.label, e.weight))
    arcs.sort()
    with open(directory / f"{name}_A.txt", "w") as fh:
        fh.writelines(f"{u}, {v}\n" for u, v, _, _ in arcs)
    if ds.has_node_labels:
        with open(directory / f"{name}_node_labels.txt", "w") as fh:
            for g in ds.graphs:
                fh.writelines(f"{lab}\n" for lab in g.node_labels)
    if ds.has_edge_labels:
        with open(directory / f"{name}_edge_labels.txt", "w") as fh:
            fh.writelines(f"{lab}\n" for _, _, lab, _ in arcs)
    if any(e.weight != 1.0 for g in ds.graphs for e in g.edges):
        with open(directory / f"{name}_edge_attributes.txt", "w") as fh:
            fh.writelines(f"{w}\n" for _, _, _, w in arcs)


def subgraph_isomorphic(pattern: Graph, host: Graph) -> bool:
    """Exact backtracking test for a label-preserving embedding of ``pattern``.

    The mapping must be injective on nodes and carry every pattern edge to a
    host edge with the same edge label (edge-subset semantics: the host may
    have extra edges between mapped nodes).
    """
    if not pattern.is_connected():
        raise InvalidPatternError("pattern must be connected")
    if pattern.n_nodes > host.n_nodes or pattern.n_edges > host.n_edges:
        return False

    # DFS order over pattern nodes so each new node (after the first) attaches
    # to an already-mapped neighbor.
    order = []
    seen = set()
    stack = [max(range(pattern.n_nodes), key=pattern.degree)]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        order.append(v)
        for t in sorted(pattern.neighbors(v), reverse=True):
            if t not in seen:
                stack.append(t)

    mapping = {}
    used = set()

    def feasible(pv: int, hv: int) -> bool:
        if pattern.node_label(pv) != host.node_label(hv):
            return False
        if pattern.degree(pv) > host.degree(hv):
            return False
        for t, elab, _ in pattern.adjacency(pv):
            if t in mapping and host.edge_label(mapping[t], hv) != elab:
                return False
        return True

    def extend(pos: int) -> bool:
        if pos == len(order):
            return True
        pv = order[pos]
        anchors = [mapping[t] for t in pattern.neighbors(pv) if t in mapping]
        candidates = (host.neighbors(anchors[0]) if anchors
                      else range(host.n_nodes))
        for hv in candidates:
            if hv in used or not feasible(pv, hv):
                continue
            mapping[pv] = hv
            used.add(hv)
            if extend(pos + 1):
                return True
            del mapping[pv]
            used.discard(hv)
        return False

    return extend(0)


def graphs_isomorphic(a: Graph, b: Graph) -> bool:
    """Exact isomorphism for connected graphs via the subgraph oracle."""
    if (a.n_nodes != b.n_nodes or a.n_edges != b.n_edges
            or sorted(a.node_labels) != sorted(b.node_labels)
            or sorted(e.label for e in a.edges) != sorted(e.label for e in b.edges)):
        return False
    return subgraph_isomorphic(a, b)


def _edge_subset_graph(g: Graph, edge_ids) -> Graph:
    nodes = sorted({v for eid in edge_ids for v in (g.edges[eid].u, g.edges[eid].v)})
    remap = {v: i for i, v in enumerate(nodes)}
    edges = [EdgeRec(remap[g.edges[eid].u], remap[g.edges[eid].v],
                     g.edges[eid].label, g.edges[eid].weight)
             for eid in sorted(edge_ids)]
    return Graph(0, [g.node_label(v) for v in nodes], edges)


def enumerate_connected_subgraphs(g: Graph, max_edges: int) -> list[Graph]:
    """All isomorphism classes of connected edge-induced subgraphs, 1..max_edges edges.

    Brute force with pairwise isomorphism deduplication; guarded to tiny
    instances because the subset count grows exponentially.
    """
    if g.n_nodes > 10 or max_edges > 8:
        raise OracleScaleError(
            f"oracle limits exceeded (n={g.n_nodes} > 10 or max_edges={max_edges} > 8)")
    if max_edges < 1:
        return []

    incident = [set() for _ in range(g.n_nodes)]
    for eid, e in enumerate(g.edges):
        incident[e.u].add(eid)
        incident[e.v].add(eid)

    subsets = set()
    frontier = {frozenset((eid,)) for eid in range(g.n_edges)}
    for _ in range(max_edges):
        subsets |= frontier
        nxt = set()
        for sub in frontier:
            touched = {v for eid in sub for v in (g.edges[eid].u, g.edges[eid].v)}
            adjacent = set().union(*(incident[v] for v in touched)) - sub
            for eid in adjacent:
                nxt.add(sub | {eid})
        frontier = nxt

    classes: list[Graph] = []
    by_key: dict[tuple, list[int]] = {}
    for sub in sorted(subsets, key=lambda s: (len(s), sorted(s))):
        cand = _edge_subset_graph(g, sub)
        key = (cand.n_nodes, cand.n_edges,
               tuple(sorted(cand.node_labels)),
               tuple(sorted(e.label for e in cand.edges)),
               tuple(sorted(cand.degree(v) for v in range(cand.n_nodes))))
        bucket = by_key.setdefault(key, [])
        if not any(graphs_isomorphic(cand, classes[i]) for i in bucket):
            bucket.append(len(classes))
            classes.append(cand)
    return classes


def enumerate_injections(pattern: Graph, host: Graph):
    """Yield every label-preserving injective edge-carrying map (test oracle)."""
    for combo in itertools.permutations(range(host.n_nodes), pattern.n_nodes):
        ok = all(pattern.node_label(pv) == host.node_label(combo[pv])
                 for pv in range(pattern.n_nodes))
        if not ok:
            continue
        if all(host.edge_label(combo[e.u], combo[e.v]) == e.label
               for e in pattern.edges):
            yield dict(enumerate(combo))
