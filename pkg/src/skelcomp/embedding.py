"""Joint graph embeddings over skeleton and component features.

Each graph is trained document-style against its present features: a
positive feature and its sampled absent negatives form one bundle, and a
single ascent step of the sigmoid objective updates the graph row together
with every touched feature row (feature updates can be frozen for
ablation).  Dot products are clamped to +/-30 before exponentiation, which
bounds every factor and keeps all matrices finite for any step count.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateGraphError
from .util import substream

log = logging.getLogger(__name__)

_CLAMP = 30.0


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 128
    epochs: int = 100
    learning_rate: float = 0.025
    min_learning_rate: float = 0.0001
    neg_walks: int = 5
    neg_subgraphs: int = 5
    seed: int = 0
    init_stddev: float = 0.001
    freeze_features: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.neg_walks < 0 or self.neg_subgraphs < 0:
            raise ConfigError("negative sample counts must be >= 0")
        if self.init_stddev <= 0:
            raise ConfigError(f"init_stddev must be > 0, got {self.init_stddev}")


@dataclass
class EmbeddingModel:
    """Graph rows ``X`` plus feature rows for walks (``M_A``) and subgraphs (``M_FSG``)."""

    X: np.ndarray
    M_A: np.ndarray
    M_FSG: np.ndarray
    config: TrainConfig
    objective_history: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def save(self, binary_path, csv_path=None) -> None:
        """Binary layout: one JSON header line, then X, M_A, M_FSG row-major float64 LE."""
        header = {
            "n_graphs": int(self.X.shape[0]),
            "n_walks": int(self.M_A.shape[0]),
            "n_subgraphs": int(self.M_FSG.shape[0]),
            "dim": int(self.dim),
            "config": asdict(self.config),
        }
        with open(binary_path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            for mat in (self.X, self.M_A, self.M_FSG):
                fh.write(np.ascontiguousarray(mat, dtype="<f8").tobytes())
        if csv_path is not None:
            with open(csv_path, "w") as fh:
                fh.write(",".join(f"x{k}" for k in range(self.dim)) + "\n")
                for row in self.X:
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load(cls, binary_path) -> "EmbeddingModel":
        with open(binary_path, "rb") as fh:
            header = json.loads(fh.readline().decode())
            data = fh.read()
        d = header["dim"]
        counts = (header["n_graphs"], header["n_walks"], header["n_subgraphs"])
        mats = []
        offset = 0
        for n_rows in counts:
            size = n_rows * d * 8
            mats.append(np.frombuffer(data[offset:offset + size], dtype="<f8")
                        .reshape(n_rows, d).copy())
            offset += size
        return cls(*mats, config=TrainConfig(**header["config"]))


def init_model(n_graphs: int, n_walks: int, n_subgraphs: int,
               cfg: TrainConfig) -> EmbeddingModel:
    """Gaussian init, one draw stream so shapes alone fix every entry."""
    rng = substream(cfg.seed, "init")
    x = rng.normal(0.0, cfg.init_stddev, size=(n_graphs, cfg.dim))
    m_a = rng.normal(0.0, cfg.init_stddev, size=(n_walks, cfg.dim))
    m_f = rng.normal(0.0, cfg.init_stddev, size=(n_subgraphs, cfg.dim))
    return EmbeddingModel(x, m_a, m_f, cfg)


def _log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


def pair_loss_and_grads(g_vec, feat_vec, is_positive: bool):
    """Objective contribution of one (graph, feature) pair and its exact partials.

    Positive pairs contribute ``log sigmoid(g.f)``, negative pairs
    ``log sigmoid(-g.f)``; the dot product is clamped to +/-30 first.
    """
    g_vec = np.asarray(g_vec, dtype=float)
    feat_vec = np.asarray(feat_vec, dtype=float)
    z = float(np.clip(g_vec @ feat_vec, -_CLAMP, _CLAMP))
    sig = 1.0 / (1.0 + np.exp(-z))
    if is_positive:
        loss = float(_log_sigmoid(z))
        coef = 1.0 - sig
    else:
        loss = float(_log_sigmoid(-z))
        coef = -sig
    return loss, coef * feat_vec, coef * g_vec


def _sample_absent(absent: np.ndarray, k: int, rng) -> np.ndarray:
    """Uniform draw without replacement from the absent-feature index pool."""
    n = len(absent)
    if n <= k:
        return absent
    if n < 4 * k:
        return absent[rng.permutation(n)[:k]]
    while True:
        picks = rng.integers(0, n, size=k)
        if len(set(picks.tolist())) == k:
            return absent[picks]


def _bundle_step(x_row, feats, idx, lr, freeze):
    """One ascent step for a positive feature and its negatives.

    ``idx[0]`` is the positive row, the rest are negatives; the graph row
    sees the summed gradient of the whole bundle evaluated at its current
    value, feature rows are updated per pair unless frozen.
    """
    rows = feats[idx]
    z = rows @ x_row
    np.clip(z, -_CLAMP, _CLAMP, out=z)
    coef = -1.0 / (1.0 + np.exp(-z))  # negative-pair coefficient
    coef[0] += 1.0                    # positive pair: 1 - sigmoid
    if not freeze:
        feats[idx] += np.outer(lr * coef, x_row)
    x_row += lr * (coef @ rows)


def train(skeletons, components, cfg: TrainConfig) -> EmbeddingModel:
    """Train graph and feature rows; deterministic for a fixed config+seed.

    Graphs are visited in a fresh shuffled order each epoch; for every
    present feature a bundle of that feature plus freshly sampled absent
    features is stepped.  The per-epoch mean bundle objective is recorded in
    ``model.objective_history`` (an exact pass when negatives cover the
    whole absent pool, an unbiased surrogate otherwise).
    """
    s_inc = skeletons.incidence
    c_inc = components.incidence
    n = s_inc.shape[0]
    if c_inc.shape[0] != n:
        raise ConfigError(
            f"skeleton table has {n} rows but component table has {c_inc.shape[0]}")
    mu, nu = s_inc.shape[1], c_inc.shape[1]
    if mu == 0 and nu == 0:
        raise ConfigError("both feature tables are empty; nothing to train on")

    sides = []
    for which, inc, k_neg in (("walk", s_inc, cfg.neg_walks),
                              ("subgraph", c_inc, cfg.neg_subgraphs)):
        if inc.shape[1] == 0:
            continue  # vocabulary disabled (e.g. skeleton-only ablation)
        bad = [gid for gid in range(n) if not inc[gid].any()]
        if bad:
            raise DegenerateGraphError(
                f"graphs without any positive {which} feature: {bad}")
        pos = [np.flatnonzero(inc[gid]).astype(np.int64) for gid in range(n)]
        absent = [np.flatnonzero(inc[gid] == 0).astype(np.int64) for gid in range(n)]
        if k_neg > 0 and any(len(a) < k_neg for a in absent):
            log.warning("fewer than %d absent %s features for some graphs; "
                        "using all available", k_neg, which)
        sides.append((which, pos, absent, k_neg))

    model = init_model(n, mu, nu, cfg)
    feats = {"walk": model.M_A, "subgraph": model.M_FSG}

    total_bundles = cfg.epochs * sum(
        sum(len(p) for p in pos) for _, pos, _, _ in sides)
    shuffle_rng = substream(cfg.seed, "shuffles")
    neg_rng = substream(cfg.seed, "negatives")

    step = 0
    for _ in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        for gid in order:
            x_row = model.X[gid]
            for which, pos, absent, k_neg in sides:
                rows = feats[which]
                pool = absent[gid]
                for s in pos[gid]:
                    frac = step / max(1, total_bundles - 1)
                    lr = cfg.learning_rate + frac * (cfg.min_learning_rate
                                                     - cfg.learning_rate)
                    if k_neg > 0 and len(pool):
                        negs = _sample_absent(pool, k_neg, neg_rng)
                        idx = np.concatenate(([s], negs))
                    else:
                        idx = np.array([s])
                    _bundle_step(x_row, rows, idx, lr, cfg.freeze_features)
                    step += 1
        model.objective_history.append(
            mean_bundle_objective(model, skeletons, components,
                                  cfg.neg_walks, cfg.neg_subgraphs))
    return model


def mean_bundle_objective(model, skeletons, components, k1: int, k2: int) -> float:
    """Mean per-positive bundle objective over the whole dataset.

    The negative part scores every absent feature and scales by
    ``min(k, n_absent) / n_absent``, which equals the sampled sum exactly
    when the sampler exhausts the pool and its expectation otherwise.
    """
    total = 0.0
    count = 0
    for inc, feats, k in ((skeletons.incidence, model.M_A, k1),
                          (components.incidence, model.M_FSG, k2)):
        if inc.shape[1] == 0:
            continue
        scores = np.clip(model.X @ feats.T, -_CLAMP, _CLAMP)
        pos_term = _log_sigmoid(scores)
        neg_term = _log_sigmoid(-scores)
        for gid in range(inc.shape[0]):
            mask = inc[gid].astype(bool)
            n_pos = int(mask.sum())
            n_abs = mask.size - n_pos
            if n_pos == 0:
                continue
            bundle = pos_term[gid, mask].sum()
            if n_abs and k > 0:
                k_eff = min(k, n_abs)
                bundle += n_pos * k_eff * neg_term[gid, ~mask].mean()
            total += bundle
            count += n_pos
    return total / count if count else 0.0


def full_softmax_logprob(model: EmbeddingModel, graph_id: int, feature_id: int,
                         which: str) -> float:
    """Exact log softmax probability over the full vocabulary (reference only)."""
    if which == "walk":
        feats = model.M_A
    elif which == "subgraph":
        feats = model.M_FSG
    else:
        raise ConfigError(f"which must be 'walk' or 'subgraph', got {which!r}")
    z = feats @ model.X[graph_id]
    m = z.max()
    return float(z[feature_id] - m - np.log(np.exp(z - m).sum()))
