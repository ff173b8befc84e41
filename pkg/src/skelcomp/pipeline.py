"""End-to-end orchestration with per-stage caching and manifests.

Each stage's output directory is keyed by a hash over everything that can
affect its bytes (dataset file contents, upstream stage hashes, stage
parameters, seed), so re-running with an unchanged config reuses cached
artifacts and any config change forces a recompute.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .classify import EvalConfig, EvalReport, cross_validate
from .embedding import EmbeddingModel, TrainConfig, train
from .errors import ConfigError, SkelcompError
from .graphs import GraphDataset, load_tu_dataset
from .mining import ComponentTable, mine_frequent
from .util import config_hash, file_fingerprint
from .walks import SkeletonTable, WalkConfig, build_skeletons

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    dataset_dir: str = "data"
    dataset: str = "MUTAG"
    walk: WalkConfig = field(default_factory=WalkConfig)
    theta: float = 0.15
    max_edges: int = 5
    node_budget: int = 1_000_000
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    out_dir: str = "out"
    cache_dir: str = None  # defaults to <out_dir>/cache
    use_cache: bool = True
    skeleton_only: bool = False
    allow_self_loops: bool = False
    threads: int = 1
    figures: bool = True

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise ConfigError(f"support threshold must be in (0,1], got {self.theta}")
        if self.max_edges < 1:
            raise ConfigError(f"max_edges must be >= 1, got {self.max_edges}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def with_seed(self, seed: int) -> "PipelineConfig":
        return dataclasses.replace(
            self,
            walk=dataclasses.replace(self.walk, seed=seed),
            train=dataclasses.replace(self.train, seed=seed),
            eval=dataclasses.replace(self.eval, seed=seed))


def _write_manifest(directory: Path, stage: str, cfg_hash: str, seed: int,
                    wall_time_s: float) -> None:
    manifest = {
        "tool": "skelcomp",
        "version": __version__,
        "stage": stage,
        "config_hash": cfg_hash,
        "seed": seed,
        "wall_time_s": round(wall_time_s, 3),
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _cache_dir(cfg: PipelineConfig, stage: str, cfg_hash: str) -> Path:
    root = Path(cfg.cache_dir) if cfg.cache_dir else Path(cfg.out_dir) / "cache"
    d = root / f"{stage}-{cfg_hash}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def dataset_hash(cfg: PipelineConfig) -> str:
    from .graphs import resolve_dataset_dir
    directory = resolve_dataset_dir(cfg.dataset_dir, cfg.dataset)
    paths = sorted(directory.glob(f"{cfg.dataset}_*.txt"))
    if not paths:
        from .errors import DatasetError
        raise DatasetError(f"no dataset files matching {cfg.dataset}_*.txt in {directory}")
    return file_fingerprint(paths)


def load_dataset(cfg: PipelineConfig) -> GraphDataset:
    return load_tu_dataset(cfg.dataset_dir, cfg.dataset,
                           allow_self_loops=cfg.allow_self_loops)


def skeleton_stage(ds: GraphDataset, cfg: PipelineConfig, ds_hash: str):
    """Returns (SkeletonTable, stage hash, stage dir)."""
    h = config_hash({"stage": "skeleton", "dataset": ds_hash,
                     "walk": dataclasses.asdict(cfg.walk),
                     "self_loops": cfg.allow_self_loops})
    d = _cache_dir(cfg, "skeleton", h)
    vocab, rows = d / "skeleton_vocab.txt", d / "skeletons.txt"
    if cfg.use_cache and (d / "manifest.json").exists():
        log.info("skeleton stage: cache hit (%s)", h)
        return SkeletonTable.load(vocab, rows), h, d
    t0 = time.perf_counter()
    table = build_skeletons(ds, cfg.walk, workers=cfg.threads)
    table.save(vocab, rows)
    _write_manifest(d, "skeleton", h, cfg.walk.seed, time.perf_counter() - t0)
    log.info("skeleton stage: %d walks in vocabulary", table.size)
    return table, h, d


def mine_stage(ds: GraphDataset, cfg: PipelineConfig, ds_hash: str):
    """Returns (ComponentTable, stage hash, stage dir)."""
    h = config_hash({"stage": "mine", "dataset": ds_hash, "theta": cfg.theta,
                     "max_edges": cfg.max_edges, "node_budget": cfg.node_budget,
                     "self_loops": cfg.allow_self_loops})
    d = _cache_dir(cfg, "mine", h)
    patterns, rows = d / "patterns.txt", d / "components.txt"
    if cfg.use_cache and (d / "manifest.json").exists():
        log.info("mine stage: cache hit (%s)", h)
        return ComponentTable.load(patterns, rows), h, d
    t0 = time.perf_counter()
    table = mine_frequent(ds, cfg.theta, cfg.max_edges,
                          node_budget=cfg.node_budget, workers=cfg.threads)
    table.save(patterns, rows)
    _write_manifest(d, "mine", h, cfg.walk.seed, time.perf_counter() - t0)
    return table, h, d


def train_stage(skeletons: SkeletonTable, components: ComponentTable,
                cfg: PipelineConfig, upstream_hash: str):
    """Returns (EmbeddingModel, stage hash, stage dir)."""
    h = config_hash({"stage": "train", "upstream": upstream_hash,
                     "train": dataclasses.asdict(cfg.train),
                     "skeleton_only": cfg.skeleton_only})
    d = _cache_dir(cfg, "train", h)
    model_path, csv_path = d / "model.bin", d / "embeddings.csv"
    if cfg.use_cache and (d / "manifest.json").exists():
        log.info("train stage: cache hit (%s)", h)
        return EmbeddingModel.load(model_path), h, d
    t0 = time.perf_counter()
    model = train(skeletons, components, cfg.train)
    model.save(model_path, csv_path)
    _write_manifest(d, "train", h, cfg.train.seed, time.perf_counter() - t0)
    return model, h, d


def eval_stage(model: EmbeddingModel, ds: GraphDataset, cfg: PipelineConfig,
               upstream_hash: str):
    """Returns (EvalReport, stage hash, stage dir)."""
    h = config_hash({"stage": "eval", "upstream": upstream_hash,
                     "eval": dataclasses.asdict(cfg.eval)})
    d = _cache_dir(cfg, "eval", h)
    report_path = d / "report.json"
    if cfg.use_cache and (d / "manifest.json").exists():
        log.info("eval stage: cache hit (%s)", h)
        return EvalReport.from_json(report_path.read_text()), h, d
    t0 = time.perf_counter()
    report = cross_validate(model.X, ds.class_labels, cfg.eval, workers=cfg.threads)
    report_path.write_text(report.to_json())
    _write_manifest(d, "eval", h, cfg.eval.seed, time.perf_counter() - t0)
    return report, h, d


def run_pipeline(cfg: PipelineConfig) -> EvalReport:
    """skeleton -> mine -> train -> evaluate, with final artifacts in ``out_dir``."""
    t0 = time.perf_counter()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds_hash = dataset_hash(cfg)
    ds = load_dataset(cfg)

    skeletons, s_hash, s_dir = skeleton_stage(ds, cfg, ds_hash)
    if cfg.skeleton_only:
        components, m_hash = ComponentTable.empty(len(ds.graphs)), "disabled"
    else:
        components, m_hash, m_dir = mine_stage(ds, cfg, ds_hash)
    model, t_hash, t_dir = train_stage(skeletons, components, cfg,
                                       f"{s_hash}+{m_hash}")
    report, e_hash, e_dir = eval_stage(model, ds, cfg, t_hash)

    # user-facing copies next to the cache
    (out / "report.json").write_text(report.to_json())
    (out / "report.txt").write_text(report.to_text())
    report.save_fold_table(out / "fold_accuracies.tsv")
    model.save(out / "model.bin", out / "embeddings.csv")
    _write_manifest(out, "run", e_hash, cfg.walk.seed, time.perf_counter() - t0)
    if cfg.figures:
        from .plots import save_report_figure
        save_report_figure(report, out / "report_accuracy.png",
                           title=f"{cfg.dataset}: accuracy over "
                                 f"{cfg.eval.repeats}x{cfg.eval.folds}-fold CV")
    log.info("pipeline done: mean accuracy %.4f (std %.4f)",
             report.mean_accuracy, report.std_accuracy)
    return report


def parse_sweep(spec: str):
    """Parse ``param=start:stop:step`` or ``param=v1,v2,...`` sweep specs."""
    if "=" not in spec:
        raise ConfigError(f"bad sweep spec {spec!r}; expected param=values")
    param, _, values = spec.partition("=")
    param = param.strip().lower()
    if param not in ("theta", "dim"):
        raise ConfigError(f"sweep parameter must be theta or dim, got {param!r}")
    values = values.strip()
    out = []
    if ":" in values:
        parts = values.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad sweep range {values!r}; expected start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("sweep step must be > 0")
        v = start
        while v <= stop + 1e-9:
            out.append(round(v, 10))
            v += step
    else:
        out = [float(v) for v in values.split(",") if v.strip()]
    if not out:
        raise ConfigError(f"empty sweep {spec!r}")
    if param == "dim":
        out = [int(v) for v in out]
    return param, out


def run_sweep(cfg: PipelineConfig, param: str, values) -> list:
    """One pipeline run per value; failures are recorded, not fatal.

    Returns rows of ``(value, mean, std, status)`` and writes the summary
    table plus its figure to the sweep directory.  All runs share the parent
    cache, so stages unaffected by the swept parameter are reused.
    """
    sweep_dir = Path(cfg.out_dir) / f"sweep_{param}"
    sweep_dir.mkdir(parents=True, exist_ok=True)
    cache_root = cfg.cache_dir or str(Path(cfg.out_dir) / "cache")
    rows = []
    for v in values:
        label = f"{v:g}" if param == "theta" else str(v)
        sub = dataclasses.replace(cfg, out_dir=str(sweep_dir / f"{param}={label}"),
                                  cache_dir=cache_root)
        if param == "theta":
            sub = dataclasses.replace(sub, theta=float(v))
        else:
            sub = dataclasses.replace(
                sub, train=dataclasses.replace(cfg.train, dim=int(v)))
        try:
            report = run_pipeline(sub)
            rows.append((v, report.mean_accuracy, report.std_accuracy, "ok"))
        except SkelcompError as exc:
            log.warning("sweep point %s=%s failed: %s", param, label, exc)
            rows.append((v, float("nan"), float("nan"), f"failed: {exc}"))
    with open(sweep_dir / "sweep_summary.tsv", "w") as fh:
        fh.write(f"{param}\tmean_accuracy\tstd_accuracy\tstatus\n")
        for v, mean, std, status in rows:
            fh.write(f"{v:g}\t{mean:.6f}\t{std:.6f}\t{status}\n")
    if cfg.figures:
        from .plots import save_sweep_figure
        ok = [(v, m, s) for v, m, s, st in rows if st == "ok"]
        if ok:
            save_sweep_figure([r[0] for r in ok], [r[1] for r in ok],
                              [r[2] for r in ok], param,
                              sweep_dir / f"sweep_{param}.png",
                              title=f"{cfg.dataset}: accuracy vs {param}")
    return rows
