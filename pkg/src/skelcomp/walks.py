"""Random-walk sampling, walk anonymization, and per-graph skeleton vectors.

A walk of length ``l`` visits ``l + 1`` nodes, each step drawn uniformly
among the current node's neighbors.  Anonymization rewrites the walk as the
1-based index of each node's first occurrence, which erases node identity
while keeping the revisit structure; the resulting integer sequences form
the skeleton vocabulary and each graph gets a binary incidence row over it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DeadEndError, OracleScaleError
from .graphs import Graph, GraphDataset
from .util import subrandom

log = logging.getLogger(__name__)

BUDGET_MODES = ("per_node", "global_bound")


@dataclass(frozen=True)
class WalkConfig:
    """Sampling controls for skeleton construction.

    ``walks_per_node`` is the per-start-node budget in ``per_node`` mode and
    the pilot-pass size in ``global_bound`` mode, where the main pass draws
    ``sample_bound(lam, epsilon, delta)`` walks per graph from uniformly
    random start nodes, with ``lam`` estimated once from the pilot pass as
    the number of distinct anonymous walks seen so far.
    """

    length: int = 10
    walks_per_node: int = 10
    epsilon: float = 1.0
    delta: float = 0.05
    seed: int = 0
    budget_mode: str = "per_node"

    def __post_init__(self):
        if self.length < 1:
            raise ConfigError(f"walk length must be >= 1, got {self.length}")
        if self.walks_per_node < 1:
            raise ConfigError(f"walks_per_node must be >= 1, got {self.walks_per_node}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 <= self.delta <= 1:
            raise ConfigError(f"delta must be in [0,1], got {self.delta}")
        if self.budget_mode not in BUDGET_MODES:
            raise ConfigError(f"budget_mode must be one of {BUDGET_MODES}")


@dataclass
class SkeletonTable:
    """Anonymous-walk vocabulary plus binary incidence rows, one per graph."""

    vocabulary: tuple
    incidence: np.ndarray  # (N, mu) uint8

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.vocabulary)}

    @property
    def size(self) -> int:
        return len(self.vocabulary)

    def save(self, vocab_path, rows_path) -> None:
        """Write the vocabulary (dash-separated walks) and sparse rows."""
        with open(vocab_path, "w") as fh:
            fh.writelines("-".join(map(str, walk)) + "\n" for walk in self.vocabulary)
        with open(rows_path, "w") as fh:
            for gid, row in enumerate(self.incidence):
                bits = " ".join(map(str, np.flatnonzero(row)))
                fh.write(f"{gid} {bits}".rstrip() + "\n")

    @classmethod
    def load(cls, vocab_path, rows_path) -> "SkeletonTable":
        vocabulary = tuple(tuple(int(x) for x in line.strip().split("-"))
                           for line in open(vocab_path) if line.strip())
        rows = []
        for line in open(rows_path):
            parts = line.split()
            if not parts:
                continue
            row = np.zeros(len(vocabulary), dtype=np.uint8)
            row[[int(x) for x in parts[1:]]] = 1
            rows.append(row)
        return cls(vocabulary, np.array(rows, dtype=np.uint8))


def random_walk(g: Graph, start: int, length: int, rng) -> list[int]:
    """Uniform-neighbor walk of ``length`` steps starting at ``start``."""
    if g.degree(start) == 0:
        raise DeadEndError(f"node {start} of graph {g.graph_id} has no neighbors")
    walk = [start]
    v = start
    for _ in range(length):
        nbrs = g.neighbors(v)
        v = nbrs[rng.randrange(len(nbrs))]
        walk.append(v)
    return walk


def anonymize(walk) -> tuple[int, ...]:
    """Map a node walk to its first-occurrence index sequence (1-based)."""
    if not walk:
        raise ValueError("walk must be non-empty")
    first_seen: dict = {}
    out = []
    for v in walk:
        if v not in first_seen:
            first_seen[v] = len(first_seen) + 1
        out.append(first_seen[v])
    return tuple(out)


def is_restricted_growth(seq) -> bool:
    """True iff ``seq`` starts at 1 and never jumps past running-max + 1."""
    if not seq or seq[0] != 1:
        return False
    running = 1
    for x in seq[1:]:
        if x < 1 or x > running + 1:
            return False
        running = max(running, x)
    return True


def sample_bound(lam: int, epsilon: float, delta: float) -> int:
    """Walk-sample count sufficient to approximate a vocabulary of size ``lam``.

    ``ceil((2 / epsilon^2) * (ln(2^lam - 2) - ln(delta)))`` with natural
    logarithms.
    """
    if lam < 2:
        raise ConfigError(f"lam must be >= 2 (log of non-positive otherwise), got {lam}")
    if epsilon <= 0:
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    if not 0 < delta <= 1:
        raise ConfigError(f"delta must be in (0,1], got {delta}")
    import math
    value = (2.0 / epsilon ** 2) * (math.log(2 ** lam - 2) - math.log(delta))
    return math.ceil(value)


def _walkable_nodes(g: Graph) -> list[int]:
    nodes = [v for v in range(g.n_nodes) if g.degree(v) > 0]
    if not nodes:
        raise DeadEndError(f"graph {g.graph_id} has no node with a neighbor")
    return nodes


def _sample_graph_walks(g: Graph, cfg: WalkConfig, phase: int, count=None) -> set:
    """Distinct anonymous walks from one graph; deterministic per (seed, id)."""
    rng = subrandom(cfg.seed, "walks", g.graph_id, phase)
    nodes = _walkable_nodes(g)
    seen = set()
    if count is None:  # per-node budget
        for v in nodes:
            for _ in range(cfg.walks_per_node):
                seen.add(anonymize(random_walk(g, v, cfg.length, rng)))
    else:
        for _ in range(count):
            v = nodes[rng.randrange(len(nodes))]
            seen.add(anonymize(random_walk(g, v, cfg.length, rng)))
    return seen


def build_skeletons(ds: GraphDataset, cfg: WalkConfig, workers: int = 1) -> SkeletonTable:
    """Sample walks on every graph and assemble the skeleton table.

    Per-graph sampling is schedule-independent (one sub-stream per graph), so
    ``workers > 1`` changes wall time only, never output.
    """
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            if cfg.budget_mode == "per_node":
                per_graph = list(pool.map(
                    lambda g: _sample_graph_walks(g, cfg, 0), ds.graphs))
            else:
                pilot = list(pool.map(
                    lambda g: _sample_graph_walks(
                        g, cfg, 0, count=cfg.walks_per_node), ds.graphs))
                lam = max(2, len(set().union(*pilot)))
                zeta = sample_bound(lam, cfg.epsilon, cfg.delta)
                log.info("global_bound: lam=%d -> %d walks per graph", lam, zeta)
                main = list(pool.map(
                    lambda g: _sample_graph_walks(g, cfg, 1, count=zeta), ds.graphs))
                per_graph = [p | m for p, m in zip(pilot, main)]
    elif cfg.budget_mode == "per_node":
        per_graph = [_sample_graph_walks(g, cfg, 0) for g in ds.graphs]
    else:
        pilot = [_sample_graph_walks(g, cfg, 0, count=cfg.walks_per_node)
                 for g in ds.graphs]
        lam = max(2, len(set().union(*pilot)))
        zeta = sample_bound(lam, cfg.epsilon, cfg.delta)
        log.info("global_bound: lam=%d -> %d walks per graph", lam, zeta)
        per_graph = [p | _sample_graph_walks(g, cfg, 1, count=zeta)
                     for p, g in zip(pilot, ds.graphs)]

    vocabulary = tuple(sorted(set().union(*per_graph)))
    index = {w: i for i, w in enumerate(vocabulary)}
    incidence = np.zeros((len(ds.graphs), len(vocabulary)), dtype=np.uint8)
    for gid, walks in enumerate(per_graph):
        incidence[gid, [index[w] for w in walks]] = 1
    return SkeletonTable(vocabulary, incidence)


def enumerate_anonymous_walks(g: Graph, length: int) -> frozenset:
    """Exact set of achievable anonymous walks (test oracle, tiny graphs only)."""
    if length > 8 or g.n_nodes > 12:
        raise OracleScaleError(
            f"exhaustive walk enumeration limited to length <= 8 and n <= 12")
    out = set()

    def recurse(walk):
        if len(walk) == length + 1:
            out.add(anonymize(walk))
            return
        for t in g.neighbors(walk[-1]):
            walk.append(t)
            recurse(walk)
            walk.pop()

    for v in _walkable_nodes(g):
        recurse([v])
    return frozenset(out)
