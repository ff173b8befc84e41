"""Embedding evaluation: RBF-kernel SVM, stratified k-fold CV, kernel-width grid.

The kernel is ``K(x, y) = exp(-sigma * ||x - y||^2)`` with ``sigma`` taken
from the configured grid; note this is the inverse-width parameterization
(larger sigma = narrower kernel), not the bandwidth-in-the-denominator
convention some tools use.  The dual problem is solved from scratch by
sequential pairwise coordinate optimization with an error cache, to a KKT
tolerance of 1e-3.  Per outer fold, sigma is chosen by an inner 3-fold
validation on the training portion; C stays fixed.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateFoldError
from .util import substream

log = logging.getLogger(__name__)

KKT_TOL = 1e-3
DEFAULT_SIGMA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)


@dataclass(frozen=True)
class EvalConfig:
    folds: int = 10
    sigma_grid: tuple = DEFAULT_SIGMA_GRID
    svm_c: float = 1.0
    repeats: int = 10
    seed: int = 0
    inner_folds: int = 3

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if not self.sigma_grid:
            raise ConfigError("sigma_grid must be non-empty")
        if any(s <= 0 for s in self.sigma_grid):
            raise ConfigError("sigma_grid values must be > 0")
        if self.svm_c <= 0:
            raise ConfigError(f"svm_c must be > 0, got {self.svm_c}")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.inner_folds < 2:
            raise ConfigError(f"inner_folds must be >= 2, got {self.inner_folds}")


def rbf_kernel(x, y, sigma: float) -> float:
    """``exp(-sigma * ||x - y||^2)`` for a single vector pair."""
    if sigma <= 0:
        raise ConfigError(f"sigma must be > 0, got {sigma}")
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return float(np.exp(-sigma * (diff @ diff)))


def squared_distances(a: np.ndarray, b: np.ndarray = None) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at zero."""
    a = np.asarray(a, dtype=float)
    b = a if b is None else np.asarray(b, dtype=float)
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.maximum(sq, 0.0)


def _gram(sq_block: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-sigma * sq_block)


def _smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = KKT_TOL,
               max_sweeps: int = 5000):
    """Pairwise coordinate ascent on the soft-margin dual.

    Returns (alpha, b) such that every sample satisfies its KKT condition
    within ``tol``.  Decision values follow f(x) = sum_j alpha_j y_j K_j(x) + b.
    """
    n = len(y)
    alpha = np.zeros(n)
    b = 0.0
    E = -y.astype(float)  # f = 0 initially

    def take_step(i1: int, i2: int) -> bool:
        nonlocal b, E
        if i1 == i2:
            return False
        a1, a2 = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        e1, e2 = E[i1], E[i2]
        s = y1 * y2
        if s > 0:
            lo, hi = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        else:
            lo, hi = max(0.0, a2 - a1), min(C, C + a2 - a1)
        if hi - lo < 1e-12:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 1e-12:
            a2_new = a2 + y2 * (e1 - e2) / eta
            a2_new = min(hi, max(lo, a2_new))
        else:
            # flat direction (e.g. duplicated points): evaluate both clip ends
            raw1 = e1 + y1 - b
            raw2 = e2 + y2 - b
            f1 = y1 * raw1 - a1 * k11 - s * a2 * k12
            f2 = y2 * raw2 - s * a1 * k12 - a2 * k22
            l1 = a1 + s * (a2 - lo)
            h1 = a1 + s * (a2 - hi)
            obj_lo = (l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11
                      + 0.5 * lo * lo * k22 + s * lo * l1 * k12)
            obj_hi = (h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11
                      + 0.5 * hi * hi * k22 + s * hi * h1 * k12)
            if obj_lo < obj_hi - 1e-12:
                a2_new = lo
            elif obj_lo > obj_hi + 1e-12:
                a2_new = hi
            else:
                return False
        if abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        d1, d2 = a1_new - a1, a2_new - a2
        b1 = b - e1 - y1 * d1 * k11 - y2 * d2 * k12
        b2 = b - e2 - y1 * d1 * k12 - y2 * d2 * k22
        if 0.0 < a1_new < C:
            b_new = b1
        elif 0.0 < a2_new < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        alpha[i1], alpha[i2] = a1_new, a2_new
        E += y1 * d1 * K[:, i1] + y2 * d2 * K[:, i2] + (b_new - b)
        b = b_new
        return True

    def examine(i2: int) -> bool:
        r2 = E[i2] * y[i2]
        if not ((r2 < -tol and alpha[i2] < C) or (r2 > tol and alpha[i2] > 0)):
            return False
        non_bound = np.flatnonzero((alpha > 0) & (alpha < C))
        if len(non_bound) > 1:
            i1 = int(non_bound[np.argmax(np.abs(E[non_bound] - E[i2]))])
            if take_step(i1, i2):
                return True
        start = (i2 + 1) % n
        for j in range(len(non_bound)):
            i1 = int(non_bound[(j + start) % len(non_bound)])
            if take_step(i1, i2):
                return True
        for j in range(n):
            if take_step((j + start) % n, i2):
                return True
        return False

    examine_all = True
    changed = 0
    for _ in range(max_sweeps):
        changed = 0
        targets = range(n) if examine_all else np.flatnonzero((alpha > 0) & (alpha < C))
        for i2 in targets:
            changed += examine(int(i2))
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
    else:
        log.warning("dual optimizer hit the sweep cap (%d); tolerance may be unmet",
                    max_sweeps)
    return alpha, b


def kkt_violation(K: np.ndarray, y: np.ndarray, alpha: np.ndarray, b: float,
                  C: float) -> float:
    """Largest KKT violation over all samples (test support)."""
    f = K @ (alpha * y) + b
    margins = y * f
    worst = 0.0
    for i in range(len(y)):
        if alpha[i] < 1e-9:
            worst = max(worst, 1.0 - margins[i])
        elif alpha[i] > C - 1e-9:
            worst = max(worst, margins[i] - 1.0)
        else:
            worst = max(worst, abs(margins[i] - 1.0))
    return worst


class SvmModel:
    """Binary decision function from a solved dual: callable signed score."""

    def __init__(self, vectors, coeffs, bias, sigma, classes):
        keep = np.abs(coeffs) > 1e-12
        self.vectors = np.asarray(vectors, dtype=float)[keep]
        self.coeffs = np.asarray(coeffs, dtype=float)[keep]
        self.bias = float(bias)
        self.sigma = float(sigma)
        self.classes = classes  # (negative_class, positive_class)

    def decision(self, x) -> float:
        return float(self.decision_batch(np.asarray(x, dtype=float)[None, :])[0])

    def decision_batch(self, X) -> np.ndarray:
        if len(self.coeffs) == 0:
            return np.full(len(X), self.bias)
        sq = squared_distances(np.asarray(X, dtype=float), self.vectors)
        return _gram(sq, self.sigma) @ self.coeffs + self.bias

    def predict(self, X) -> np.ndarray:
        scores = self.decision_batch(X)
        neg, pos = self.classes
        return np.where(scores >= 0, pos, neg)

    __call__ = decision


def train_svm(train_vectors, train_labels, sigma: float, C: float = 1.0) -> SvmModel:
    """Fit the binary soft-margin SVM and return its decision function."""
    if sigma <= 0:
        raise ConfigError(f"sigma must be > 0, got {sigma}")
    X = np.asarray(train_vectors, dtype=float)
    labels = np.asarray(train_labels)
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise DegenerateFoldError("training fold has a single class")
    if len(classes) > 2:
        raise ConfigError("train_svm is binary; use OneVsRestClassifier")
    y = np.where(labels == classes[1], 1.0, -1.0)
    K = _gram(squared_distances(X), sigma)
    alpha, b = _smo_solve(K, y, C)
    return SvmModel(X, alpha * y, b, sigma, (classes[0], classes[1]))


class OneVsRestClassifier:
    """Multiclass wrapper: one binary SVM per class, argmax of signed scores.

    On a two-class problem it delegates to the single binary SVM unless
    ``force_ovr`` is set (the two mirrored machines then vote by argmax).
    """

    def __init__(self, sigma: float, C: float = 1.0, force_ovr: bool = False):
        self.sigma = sigma
        self.C = C
        self.force_ovr = force_ovr
        self.models = None
        self.binary = None
        self.classes = None

    def fit(self, X, labels):
        X = np.asarray(X, dtype=float)
        labels = np.asarray(labels)
        self.classes = sorted(set(labels.tolist()))
        if len(self.classes) < 2:
            raise DegenerateFoldError("training fold has a single class")
        if len(self.classes) == 2 and not self.force_ovr:
            self.binary = train_svm(X, labels, self.sigma, self.C)
            return self
        K = _gram(squared_distances(X), self.sigma)
        self.models = []
        for cls in self.classes:
            y = np.where(labels == cls, 1.0, -1.0)
            alpha, b = _smo_solve(K, y, self.C)
            self.models.append(SvmModel(X, alpha * y, b, self.sigma, (None, cls)))
        return self

    def predict(self, X) -> np.ndarray:
        if self.binary is not None:
            return self.binary.predict(X)
        scores = np.stack([m.decision_batch(X) for m in self.models], axis=1)
        picks = np.argmax(scores, axis=1)
        return np.array([self.classes[p] for p in picks])


def stratified_fold_assignment(labels, k: int, rng) -> np.ndarray:
    """Fold index per sample: stratified round-robin with a rotating cursor.

    The cursor keeps global fold sizes maximally equal while each class's
    counts stay within one sample across folds.  Falls back to a plain
    shuffled split when some class has fewer members than folds.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if n < k:
        raise ConfigError(f"need at least {k} samples for {k} folds, got {n}")
    assignment = np.empty(n, dtype=np.int64)
    classes, counts = np.unique(labels, return_counts=True)
    if counts.min() < k:
        log.warning("a class has fewer than %d members; using plain shuffled folds", k)
        perm = rng.permutation(n)
        assignment[perm] = np.arange(n) % k
        return assignment
    cursor = 0
    for cls in classes:
        idxs = np.flatnonzero(labels == cls)
        idxs = idxs[rng.permutation(len(idxs))]
        assignment[idxs] = (cursor + np.arange(len(idxs))) % k
        cursor = (cursor + len(idxs)) % k
    return assignment


@dataclass
class EvalReport:
    """Raw per-fold accuracies with their summary statistics."""

    fold_accuracies: np.ndarray   # (repeats, folds)
    chosen_sigmas: np.ndarray     # (repeats, folds)
    mean_accuracy: float
    std_accuracy: float
    wall_time_s: float

    @classmethod
    def from_folds(cls, accs, sigmas, wall_time_s):
        accs = np.asarray(accs, dtype=float)
        return cls(accs, np.asarray(sigmas, dtype=float),
                   float(accs.mean()), float(accs.std()), wall_time_s)

    def to_json(self) -> str:
        return json.dumps({
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "wall_time_s": self.wall_time_s,
            "fold_accuracies": self.fold_accuracies.tolist(),
            "chosen_sigmas": self.chosen_sigmas.tolist(),
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        obj = json.loads(text)
        return cls(np.array(obj["fold_accuracies"]), np.array(obj["chosen_sigmas"]),
                   obj["mean_accuracy"], obj["std_accuracy"], obj["wall_time_s"])

    def to_text(self) -> str:
        lines = [
            f"mean_accuracy\t{self.mean_accuracy:.6f}",
            f"std_accuracy\t{self.std_accuracy:.6f}",
            f"repeats\t{self.fold_accuracies.shape[0]}",
            f"folds\t{self.fold_accuracies.shape[1]}",
            f"wall_time_s\t{self.wall_time_s:.3f}",
        ]
        for r, row in enumerate(self.fold_accuracies):
            lines.append(f"repeat_{r}\t" + "\t".join(f"{a:.6f}" for a in row))
        return "\n".join(lines) + "\n"

    def save_fold_table(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("repeat\tfold\tsigma\taccuracy\n")
            for r in range(self.fold_accuracies.shape[0]):
                for f in range(self.fold_accuracies.shape[1]):
                    fh.write(f"{r}\t{f}\t{self.chosen_sigmas[r, f]:g}"
                             f"\t{self.fold_accuracies[r, f]:.6f}\n")


def _fit_predict_kernel(K_train, y_train, K_test_train, sigma, C, classes):
    """Train on a precomputed gram block; return predicted labels for the test block."""
    if len(set(y_train.tolist())) < 2:
        raise DegenerateFoldError("training fold has a single class")
    if len(classes) == 2:
        ybin = np.where(y_train == classes[1], 1.0, -1.0)
        alpha, b = _smo_solve(K_train, ybin, C)
        scores = K_test_train @ (alpha * ybin) + b
        return np.where(scores >= 0, classes[1], classes[0])
    all_scores = []
    for cls in classes:
        ybin = np.where(y_train == cls, 1.0, -1.0)
        alpha, b = _smo_solve(K_train, ybin, C)
        all_scores.append(K_test_train @ (alpha * ybin) + b)
    picks = np.argmax(np.stack(all_scores, axis=1), axis=1)
    return np.array([classes[p] for p in picks])


def _select_sigma(sq, labels, train_idx, cfg: EvalConfig, rng, classes) -> float:
    """Inner-fold validation accuracy per sigma on the training portion."""
    inner = stratified_fold_assignment(labels[train_idx], cfg.inner_folds, rng)
    best_sigma, best_acc = cfg.sigma_grid[0], -1.0
    for sigma in cfg.sigma_grid:
        correct = 0
        for f in range(cfg.inner_folds):
            tr = train_idx[inner != f]
            va = train_idx[inner == f]
            if len(va) == 0:
                continue
            K_tr = _gram(sq[np.ix_(tr, tr)], sigma)
            K_va = _gram(sq[np.ix_(va, tr)], sigma)
            pred = _fit_predict_kernel(K_tr, labels[tr], K_va, sigma, cfg.svm_c, classes)
            correct += int((pred == labels[va]).sum())
        acc = correct / len(train_idx)
        if acc > best_acc:
            best_sigma, best_acc = sigma, acc
    return best_sigma


def cross_validate(X, labels, cfg: EvalConfig, workers: int = 1) -> EvalReport:
    """Repeated stratified k-fold CV with per-fold kernel-width selection."""
    t0 = time.perf_counter()
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    if len(X) < cfg.folds:
        raise ConfigError(f"need at least {cfg.folds} samples, got {len(X)}")
    classes = sorted(set(labels.tolist()))
    sq = squared_distances(X)

    def run_fold(r: int, f: int, assignment):
        test_idx = np.flatnonzero(assignment == f)
        train_idx = np.flatnonzero(assignment != f)
        inner_rng = substream(cfg.seed, "folds", r, f, "inner")
        sigma = _select_sigma(sq, labels, train_idx, cfg, inner_rng, classes)
        K_tr = _gram(sq[np.ix_(train_idx, train_idx)], sigma)
        K_te = _gram(sq[np.ix_(test_idx, train_idx)], sigma)
        pred = _fit_predict_kernel(K_tr, labels[train_idx], K_te, sigma,
                                   cfg.svm_c, classes)
        return float((pred == labels[test_idx]).mean()), sigma

    jobs = []
    for r in range(cfg.repeats):
        assignment = stratified_fold_assignment(
            labels, cfg.folds, substream(cfg.seed, "folds", r))
        jobs.extend((r, f, assignment) for f in range(cfg.folds))

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda j: run_fold(*j), jobs))
    else:
        outcomes = [run_fold(*j) for j in jobs]

    accs = np.array([o[0] for o in outcomes]).reshape(cfg.repeats, cfg.folds)
    sigmas = np.array([o[1] for o in outcomes]).reshape(cfg.repeats, cfg.folds)
    return EvalReport.from_folds(accs, sigmas, time.perf_counter() - t0)
