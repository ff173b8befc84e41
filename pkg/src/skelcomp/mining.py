"""Frequent-subgraph mining via minimum DFS codes with rightmost-path extension.

A pattern is an ordered tuple of ``DfsEdge`` records ``(i, j, label_i,
label_e, label_j)`` over DFS discovery indices.  Each isomorphism class of
patterns has exactly one lexicographically minimum code, which the search
uses as canonical label: candidates whose code is not minimal were already
generated elsewhere in the tree and are pruned, as are candidates whose
per-graph support drops below the threshold (anti-monotonicity).

Support is transaction-style: the fraction of dataset graphs containing at
least one embedding.  Embeddings are tracked as projection chains during
extension, so support counting never needs an isomorphism test.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from math import ceil

import numpy as np

from .errors import ConfigError, MalformedCodeError, ResourceLimitError
from .graphs import EdgeRec, Graph, GraphDataset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DfsEdge:
    """One code entry; forward iff ``j > i`` (``j`` is then a new vertex)."""

    i: int
    j: int
    label_i: int
    label_e: int
    label_j: int

    @property
    def is_forward(self) -> bool:
        return self.j > self.i

    def sort_key(self):
        # Total order: primary index is j for forward / i for backward edges;
        # on ties forward precedes backward, deeper forward sources come
        # first, nearer backward targets come first, then the label triple.
        if self.is_forward:
            return (self.j, 0, -self.i, self.label_i, self.label_e, self.label_j)
        return (self.i, 1, self.j, self.label_i, self.label_e, self.label_j)


def code_order(a: DfsEdge, b: DfsEdge) -> int:
    """-1/0/1 comparison of two code entries under the canonical edge order."""
    ka, kb = a.sort_key(), b.sort_key()
    return -1 if ka < kb else (0 if ka == kb else 1)


def code_sort_key(code) -> tuple:
    """Lexicographic key for whole codes (prefix < extension)."""
    return tuple(e.sort_key() for e in code)


def code_to_str(code) -> str:
    return "".join(f"({e.i},{e.j},{e.label_i},{e.label_e},{e.label_j})" for e in code)


def code_from_str(text: str):
    edges = []
    for chunk in text.replace(")(", ")|(").split("|"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if not (chunk.startswith("(") and chunk.endswith(")")):
            raise MalformedCodeError(f"bad code chunk {chunk!r}")
        edges.append(DfsEdge(*(int(x) for x in chunk[1:-1].split(","))))
    return tuple(edges)


def _rightmost_path(code):
    """Indices of the code edges forming the rightmost path, last edge first."""
    rmpath = []
    frontier = None
    for k in range(len(code) - 1, -1, -1):
        e = code[k]
        if e.is_forward and (frontier is None or e.j == frontier):
            rmpath.append(k)
            frontier = e.i
    return rmpath


def _code_vertex_labels(code):
    labels = [code[0].label_i, code[0].label_j]
    for e in code[1:]:
        if e.is_forward:
            labels.append(e.label_j)
    return labels


def validate_code(code) -> None:
    """Raise MalformedCodeError unless ``code`` is a structurally valid code."""
    if not code:
        raise MalformedCodeError("empty code")
    first = code[0]
    if (first.i, first.j) != (0, 1):
        raise MalformedCodeError(f"first edge must be (0,1,..), got {first}")
    labels = {0: first.label_i, 1: first.label_j}
    rightmost = 1
    rm_nodes = {0, 1}
    seen_pairs = {(0, 1)}
    for e in code[1:]:
        if e.is_forward:
            if e.j != max(labels) + 1:
                raise MalformedCodeError(f"forward edge {e} must discover vertex {max(labels) + 1}")
            if e.i not in rm_nodes:
                raise MalformedCodeError(f"forward edge {e} must grow from the rightmost path")
            if labels.get(e.i) != e.label_i:
                raise MalformedCodeError(f"edge {e} label_i disagrees with vertex {e.i}")
            labels[e.j] = e.label_j
            # new rightmost path: path to e.i, then e.j
            new_rm = set()
            for v in sorted(rm_nodes):
                new_rm.add(v)
                if v == e.i:
                    break
            new_rm.add(e.j)
            rm_nodes = new_rm
            rightmost = e.j
        else:
            if e.i != rightmost:
                raise MalformedCodeError(f"backward edge {e} must start at the rightmost vertex")
            if e.j >= e.i or e.j not in rm_nodes:
                raise MalformedCodeError(f"backward edge {e} must close onto the rightmost path")
            if labels.get(e.i) != e.label_i or labels.get(e.j) != e.label_j:
                raise MalformedCodeError(f"edge {e} labels disagree with discovered vertices")
        pair = (min(e.i, e.j), max(e.i, e.j))
        if pair in seen_pairs:
            raise MalformedCodeError(f"duplicate edge {pair} in code")
        seen_pairs.add(pair)


def pattern_to_graph(code) -> Graph:
    """Materialize a code as a Graph with nodes in discovery order."""
    validate_code(code)
    labels = _code_vertex_labels(code)
    edges = [EdgeRec(e.i, e.j, e.label_e) if e.i < e.j else EdgeRec(e.j, e.i, e.label_e)
             for e in code]
    return Graph(0, labels, sorted(edges, key=EdgeRec.key))


# --- host-side machinery ----------------------------------------------------
# Arcs are (eid, frm, to, elabel) tuples; every undirected edge contributes
# one arc in each direction.

class _HostGraph:
    __slots__ = ("gid", "vlabels", "adj")

    def __init__(self, gid, vlabels, adj):
        self.gid = gid
        self.vlabels = vlabels
        self.adj = adj

    @classmethod
    def from_graph(cls, g: Graph):
        adj = [[] for _ in range(g.n_nodes)]
        for eid, e in enumerate(g.edges):
            adj[e.u].append((eid, e.u, e.v, e.label))
            if e.u != e.v:
                adj[e.v].append((eid, e.v, e.u, e.label))
        return cls(g.graph_id, list(g.node_labels), adj)


class _Pdfs:
    """One embedding step: host arc plus a link to the previous step."""

    __slots__ = ("gid", "arc", "prev")

    def __init__(self, gid, arc, prev):
        self.gid = gid
        self.arc = arc
        self.prev = prev


class _History:
    """Host arcs of one embedding in code order, with used-id lookups."""

    __slots__ = ("edges", "used_edges", "used_vertices")

    def __init__(self, pdfs):
        edges = []
        used_e = set()
        used_v = set()
        while pdfs is not None:
            arc = pdfs.arc
            edges.append(arc)
            used_e.add(arc[0])
            used_v.add(arc[1])
            used_v.add(arc[2])
            pdfs = pdfs.prev
        edges.reverse()
        self.edges = edges
        self.used_edges = used_e
        self.used_vertices = used_v


def _forward_root_arcs(hg, v):
    vlb = hg.vlabels
    return [arc for arc in hg.adj[v] if vlb[v] <= vlb[arc[2]]]


def _backward_arc(hg, a1, a2, hist):
    """Valid backward arc from a2's head onto a1's tail, if any."""
    if a1[0] == a2[0]:
        return None
    vlb = hg.vlabels
    for arc in hg.adj[a2[2]]:
        if arc[0] in hist.used_edges or arc[2] != a1[1]:
            continue
        if a1[3] < arc[3] or (a1[3] == arc[3] and vlb[a1[2]] <= vlb[a2[2]]):
            return arc
    return None


def _forward_pure_arcs(hg, a_last, min_vlb, hist):
    """Forward arcs out of the rightmost vertex to fresh nodes."""
    vlb = hg.vlabels
    return [arc for arc in hg.adj[a_last[2]]
            if min_vlb <= vlb[arc[2]] and arc[2] not in hist.used_vertices]


def _forward_rmpath_arcs(hg, a_rm, min_vlb, hist):
    """Forward arcs out of a rightmost-path vertex to fresh nodes."""
    vlb = hg.vlabels
    to_vlb = vlb[a_rm[2]]
    out = []
    for arc in hg.adj[a_rm[1]]:
        if arc[2] == a_rm[2] or vlb[arc[2]] < min_vlb or arc[2] in hist.used_vertices:
            continue
        if a_rm[3] < arc[3] or (a_rm[3] == arc[3] and to_vlb <= vlb[arc[2]]):
            out.append(arc)
    return out


def _is_minimal_code(code) -> bool:
    """Regenerate the minimum code of ``code``'s pattern, pruning on mismatch."""
    if len(code) == 1:
        return code[0].label_i <= code[0].label_j
    hg = _HostGraph.from_graph(pattern_to_graph(code))
    root = defaultdict(list)
    for v in range(len(hg.vlabels)):
        for arc in _forward_root_arcs(hg, v):
            key = (hg.vlabels[v], arc[3], hg.vlabels[arc[2]])
            root[key].append(_Pdfs(0, arc, None))
    min_key = min(root)
    if (code[0].label_i, code[0].label_e, code[0].label_j) != min_key:
        return False
    mincode = [DfsEdge(0, 1, *min_key)]
    projected = root[min_key]

    while len(mincode) < len(code):
        rmpath = _rightmost_path(mincode)
        maxtoc = mincode[rmpath[0]].j
        min_vlb = mincode[0].label_i
        vlabels = _code_vertex_labels(mincode)

        # minimal backward extension: nearest-to-root target first
        appended = False
        for idx in range(len(rmpath) - 1, 0, -1):
            k = rmpath[idx]
            found = []
            for p in projected:
                hist = _History(p)
                arc = _backward_arc(hg, hist.edges[k], hist.edges[rmpath[0]], hist)
                if arc is not None:
                    found.append((arc[3], _Pdfs(0, arc, p)))
            if found:
                min_elb = min(e for e, _ in found)
                newto = mincode[k].i
                edge = DfsEdge(maxtoc, newto, vlabels[maxtoc], min_elb, vlabels[newto])
                if edge != code[len(mincode)]:
                    return False
                mincode.append(edge)
                projected = [p for e, p in found if e == min_elb]
                appended = True
                break
        if appended:
            continue

        # minimal forward extension: rightmost vertex first, then up the path
        grouped = defaultdict(list)
        newfrm = None
        for p in projected:
            hist = _History(p)
            for arc in _forward_pure_arcs(hg, hist.edges[rmpath[0]], min_vlb, hist):
                grouped[(arc[3], hg.vlabels[arc[2]])].append(_Pdfs(0, arc, p))
        if grouped:
            newfrm = maxtoc
        else:
            for k in rmpath:
                for p in projected:
                    hist = _History(p)
                    for arc in _forward_rmpath_arcs(hg, hist.edges[k], min_vlb, hist):
                        grouped[(arc[3], hg.vlabels[arc[2]])].append(_Pdfs(0, arc, p))
                if grouped:
                    newfrm = mincode[k].i
                    break
        if not grouped:
            return True
        min_key = min(grouped)
        edge = DfsEdge(newfrm, maxtoc + 1, vlabels[newfrm], min_key[0], min_key[1])
        if edge != code[len(mincode)]:
            return False
        mincode.append(edge)
        projected = grouped[min_key]
    return True


def is_minimal(code) -> bool:
    """True iff ``code`` is the minimum DFS code of the pattern it encodes."""
    validate_code(code)
    return _is_minimal_code(tuple(code))


# --- the miner ---------------------------------------------------------------

@dataclass(frozen=True)
class FrequentSubgraph:
    """A mined pattern: minimal code, support fraction, supporting graph ids."""

    code: tuple
    support: float
    supporting_graphs: frozenset

    def to_graph(self) -> Graph:
        return pattern_to_graph(self.code)


@dataclass
class ComponentTable:
    """Frequent-subgraph vocabulary plus binary incidence rows per graph."""

    vocabulary: tuple
    incidence: np.ndarray  # (N, nu) uint8

    @classmethod
    def empty(cls, n_graphs: int) -> "ComponentTable":
        return cls((), np.zeros((n_graphs, 0), dtype=np.uint8))

    @property
    def size(self) -> int:
        return len(self.vocabulary)

    def save(self, patterns_path, rows_path) -> None:
        with open(patterns_path, "w") as fh:
            for fs in self.vocabulary:
                fh.write(f"{code_to_str(fs.code)}  support={fs.support}\n")
        with open(rows_path, "w") as fh:
            for gid, row in enumerate(self.incidence):
                bits = " ".join(map(str, np.flatnonzero(row)))
                fh.write(f"{gid} {bits}".rstrip() + "\n")

    @classmethod
    def load(cls, patterns_path, rows_path) -> "ComponentTable":
        entries = []
        for line in open(patterns_path):
            line = line.strip()
            if not line:
                continue
            code_part, support_part = line.rsplit("support=", 1)
            entries.append((code_from_str(code_part.strip()), float(support_part)))
        rows = []
        for line in open(rows_path):
            parts = line.split()
            if not parts:
                continue
            row = np.zeros(len(entries), dtype=np.uint8)
            row[[int(x) for x in parts[1:]]] = 1
            rows.append(row)
        incidence = np.array(rows, dtype=np.uint8).reshape(len(rows), len(entries))
        vocabulary = tuple(
            FrequentSubgraph(code, support, frozenset(np.flatnonzero(incidence[:, t]).tolist()))
            for t, (code, support) in enumerate(entries))
        return cls(vocabulary, incidence)


class _Branch:
    """Mines the DFS-code subtree under one frequent 1-edge root."""

    def __init__(self, hosts, min_count, max_edges, node_budget, theta):
        self.hosts = hosts
        self.min_count = min_count
        self.max_edges = max_edges
        self.node_budget = node_budget
        self.theta = theta
        self.visited = 0
        self.results = []

    def mine(self, code, projected):
        self.visited += 1
        if self.visited > self.node_budget:
            raise ResourceLimitError(
                f"mining exceeded node budget {self.node_budget} at theta={self.theta}; "
                "raise the threshold or the budget")
        gids = frozenset(p.gid for p in projected)
        if len(gids) < self.min_count:
            return
        if not _is_minimal_code(code):
            return
        self.results.append((code, gids))
        if len(code) >= self.max_edges:
            return

        rmpath = _rightmost_path(code)
        maxtoc = code[rmpath[0]].j
        min_vlb = code[0].label_i
        vlabels = _code_vertex_labels(code)

        backward = defaultdict(list)
        forward = defaultdict(list)
        for p in projected:
            hg = self.hosts[p.gid]
            hist = _History(p)
            last = hist.edges[rmpath[0]]
            for k in reversed(rmpath):
                arc = _backward_arc(hg, hist.edges[k], last, hist)
                if arc is not None:
                    backward[(code[k].i, arc[3])].append(_Pdfs(p.gid, arc, p))
            for arc in _forward_pure_arcs(hg, last, min_vlb, hist):
                forward[(maxtoc, arc[3], hg.vlabels[arc[2]])].append(_Pdfs(p.gid, arc, p))
            for k in rmpath:
                for arc in _forward_rmpath_arcs(hg, hist.edges[k], min_vlb, hist):
                    forward[(code[k].i, arc[3], hg.vlabels[arc[2]])].append(
                        _Pdfs(p.gid, arc, p))

        for to, elb in sorted(backward):
            edge = DfsEdge(maxtoc, to, vlabels[maxtoc], elb, vlabels[to])
            self.mine(code + (edge,), backward[(to, elb)])
        for frm, elb, vlb in sorted(forward, key=lambda k: (-k[0], k[1], k[2])):
            edge = DfsEdge(frm, maxtoc + 1, vlabels[frm], elb, vlb)
            self.mine(code + (edge,), forward[(frm, elb, vlb)])


def mine_frequent(ds: GraphDataset, theta: float, max_edges: int = 5,
                  node_budget: int = 1_000_000, workers: int = 1) -> ComponentTable:
    """Mine all patterns with 1..max_edges edges and support >= theta.

    The vocabulary comes back in ascending minimum-code order, identically
    across runs and worker counts.  ``node_budget`` caps the search-tree
    nodes visited under each 1-edge root.
    """
    if not 0 < theta <= 1:
        raise ConfigError(f"support threshold must be in (0,1], got {theta}")
    if max_edges < 1:
        raise ConfigError(f"max_edges must be >= 1, got {max_edges}")
    n = len(ds.graphs)
    min_count = max(1, ceil(theta * n - 1e-9))
    hosts = [_HostGraph.from_graph(g) for g in ds.graphs]

    root = defaultdict(list)
    for hg in hosts:
        for v in range(len(hg.vlabels)):
            for arc in _forward_root_arcs(hg, v):
                key = (hg.vlabels[v], arc[3], hg.vlabels[arc[2]])
                root[key].append(_Pdfs(hg.gid, arc, None))
    frequent_roots = [key for key in sorted(root)
                      if len({p.gid for p in root[key]}) >= min_count]

    def mine_root(key):
        branch = _Branch(hosts, min_count, max_edges, node_budget, theta)
        branch.mine((DfsEdge(0, 1, *key),), root[key])
        return branch.results

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_root = list(pool.map(mine_root, frequent_roots))
    else:
        per_root = [mine_root(key) for key in frequent_roots]

    results = [item for chunk in per_root for item in chunk]
    results.sort(key=lambda item: code_sort_key(item[0]))

    vocabulary = tuple(FrequentSubgraph(code, len(gids) / n, gids)
                       for code, gids in results)
    incidence = np.zeros((n, len(vocabulary)), dtype=np.uint8)
    for t, fs in enumerate(vocabulary):
        incidence[sorted(fs.supporting_graphs), t] = 1
    log.info("mined %d patterns at theta=%.3g (min count %d of %d graphs)",
             len(vocabulary), theta, min_count, n)
    return ComponentTable(vocabulary, incidence)
