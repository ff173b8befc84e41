"""Command-line pipeline driver.

Subcommands run individual stages (``skeleton``, ``mine``) or the full
pipeline (``run``), all against a dataset directory in the multi-file
benchmark text format.  One ``--seed`` feeds every random choice through
named sub-streams, so any stage can be reproduced in isolation.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

from .classify import DEFAULT_SIGMA_GRID, EvalConfig
from .embedding import TrainConfig
from .errors import (ConfigError, DatasetError, ResourceLimitError, SkelcompError)
from .pipeline import (PipelineConfig, dataset_hash, load_dataset, mine_stage,
                       parse_sweep, run_pipeline, run_sweep, skeleton_stage)
from .walks import WalkConfig

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATASET = 3
EXIT_RESOURCE = 4
EXIT_INTERNAL = 5


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset-dir", default="data", help="directory holding the dataset files")
    p.add_argument("--dataset", default="MUTAG", help="dataset name prefix")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="master seed for all stages")
    p.add_argument("--threads", type=int, default=1, help="worker cap for parallel stages")
    p.add_argument("--no-cache", action="store_true", help="ignore cached stage outputs")
    p.add_argument("--allow-self-loops", action="store_true",
                   help="accept self-loop edges in the dataset")


def _add_walk_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--walk-length", type=int, default=10, help="steps per walk")
    p.add_argument("--walks-per-node", type=int, default=10,
                   help="walks from each node (pilot size in global_bound mode)")
    p.add_argument("--budget-mode", choices=("per_node", "global_bound"),
                   default="per_node")
    p.add_argument("--epsilon", type=float, default=1.0, help="sample-bound epsilon")
    p.add_argument("--delta", type=float, default=0.05, help="sample-bound delta")


def _add_mine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min-sup", type=float, default=0.15,
                   help="support threshold in (0,1]")
    p.add_argument("--max-edges", type=int, default=5, help="pattern size cap")
    p.add_argument("--node-budget", type=int, default=1_000_000,
                   help="search nodes allowed under each 1-edge root")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=128, help="embedding dimension")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.025, help="initial learning rate")
    p.add_argument("--min-lr", type=float, default=0.0001, help="final learning rate")
    p.add_argument("--neg-walks", type=int, default=5, help="negative walks per positive")
    p.add_argument("--neg-subgraphs", type=int, default=5,
                   help="negative subgraphs per positive")
    p.add_argument("--init-stddev", type=float, default=0.001)
    p.add_argument("--freeze-features", action="store_true",
                   help="update only graph rows, leaving feature rows at init")


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--sigma-grid", default=",".join(str(s) for s in DEFAULT_SIGMA_GRID),
                   help="comma-separated RBF widths")
    p.add_argument("--svm-c", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skelcomp",
        description="Whole-graph embeddings from walk skeletons and "
                    "frequent-subgraph components, evaluated with a kernel SVM.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_skel = sub.add_parser("skeleton", help="sample walks and write the skeleton table")
    _add_common(p_skel)
    _add_walk_flags(p_skel)

    p_mine = sub.add_parser("mine", help="mine frequent subgraphs and write the component table")
    _add_common(p_mine)
    _add_mine_flags(p_mine)

    p_run = sub.add_parser("run", help="full pipeline: skeleton, mine, train, evaluate")
    _add_common(p_run)
    _add_walk_flags(p_run)
    _add_mine_flags(p_run)
    _add_train_flags(p_run)
    _add_eval_flags(p_run)
    p_run.add_argument("--sweep", default=None,
                       help="sweep spec, e.g. theta=0.05:0.95:0.05 or dim=8,16,32")
    p_run.add_argument("--skeleton-only", action="store_true",
                       help="disable the component vocabulary (walks only)")
    p_run.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
    return parser


def _pipeline_config(args) -> PipelineConfig:
    walk = WalkConfig(length=getattr(args, "walk_length", 10),
                      walks_per_node=getattr(args, "walks_per_node", 10),
                      epsilon=getattr(args, "epsilon", 1.0),
                      delta=getattr(args, "delta", 0.05),
                      seed=args.seed,
                      budget_mode=getattr(args, "budget_mode", "per_node"))
    train = TrainConfig(dim=getattr(args, "dim", 128),
                        epochs=getattr(args, "epochs", 100),
                        learning_rate=getattr(args, "lr", 0.025),
                        min_learning_rate=getattr(args, "min_lr", 0.0001),
                        neg_walks=getattr(args, "neg_walks", 5),
                        neg_subgraphs=getattr(args, "neg_subgraphs", 5),
                        seed=args.seed,
                        init_stddev=getattr(args, "init_stddev", 0.001),
                        freeze_features=getattr(args, "freeze_features", False))
    if hasattr(args, "sigma_grid"):
        grid = tuple(float(s) for s in str(args.sigma_grid).split(",") if s.strip())
    else:
        grid = DEFAULT_SIGMA_GRID
    ev = EvalConfig(folds=getattr(args, "folds", 10),
                    sigma_grid=grid,
                    svm_c=getattr(args, "svm_c", 1.0),
                    repeats=getattr(args, "repeats", 10),
                    seed=args.seed)
    return PipelineConfig(dataset_dir=args.dataset_dir,
                          dataset=args.dataset,
                          walk=walk,
                          theta=getattr(args, "min_sup", 0.15),
                          max_edges=getattr(args, "max_edges", 5),
                          node_budget=getattr(args, "node_budget", 1_000_000),
                          train=train,
                          eval=ev,
                          out_dir=args.out,
                          use_cache=not args.no_cache,
                          skeleton_only=getattr(args, "skeleton_only", False),
                          allow_self_loops=args.allow_self_loops,
                          threads=args.threads,
                          figures=not getattr(args, "no_figures", False))


def cmd_skeleton(args) -> int:
    cfg = _pipeline_config(args)
    ds = load_dataset(cfg)
    table, h, d = skeleton_stage(ds, cfg, dataset_hash(cfg))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table.save(out / "skeleton_vocab.txt", out / "skeletons.txt")
    import shutil
    shutil.copy(d / "manifest.json", out / "skeleton_manifest.json")
    print(f"skeleton table: {table.size} anonymous walks over "
          f"{table.incidence.shape[0]} graphs -> {out}")
    return EXIT_OK


def cmd_mine(args) -> int:
    cfg = _pipeline_config(args)
    ds = load_dataset(cfg)
    table, h, d = mine_stage(ds, cfg, dataset_hash(cfg))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table.save(out / "patterns.txt", out / "components.txt")
    import shutil
    shutil.copy(d / "manifest.json", out / "mine_manifest.json")
    print(f"component table: {table.size} frequent patterns at "
          f"min-sup {cfg.theta} -> {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _pipeline_config(args)
    if args.sweep:
        param, values = parse_sweep(args.sweep)
        rows = run_sweep(cfg, param, values)
        print(f"{param}\tmean_accuracy\tstd_accuracy\tstatus")
        for v, mean, std, status in rows:
            print(f"{v:g}\t{mean:.4f}\t{std:.4f}\t{status}")
        return EXIT_OK
    report = run_pipeline(cfg)
    print(f"{cfg.dataset}: mean accuracy {report.mean_accuracy:.4f} "
          f"(std {report.std_accuracy:.4f}) over "
          f"{cfg.eval.repeats}x{cfg.eval.folds}-fold CV -> {cfg.out_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        if args.command == "skeleton":
            code = cmd_skeleton(args)
        elif args.command == "mine":
            code = cmd_mine(args)
        else:
            code = cmd_run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except SkelcompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    log.debug("total wall time %.2fs", time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
