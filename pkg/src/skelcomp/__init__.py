"""skelcomp: whole-graph embeddings from walk skeletons and subgraph components."""

__version__ = "0.1.0"

from .graphs import (Graph, GraphDataset, enumerate_connected_subgraphs,
                     graphs_isomorphic, load_tu_dataset, save_tu_dataset,
                     subgraph_isomorphic)
from .walks import (SkeletonTable, WalkConfig, anonymize, build_skeletons,
                    random_walk, sample_bound)
from .mining import (ComponentTable, DfsEdge, FrequentSubgraph, code_order,
                     is_minimal, mine_frequent, pattern_to_graph)
from .embedding import (EmbeddingModel, TrainConfig, full_softmax_logprob,
                        init_model, pair_loss_and_grads, train)
from .classify import (EvalConfig, EvalReport, cross_validate, rbf_kernel,
                       train_svm)
from .pipeline import PipelineConfig, run_pipeline, run_sweep

__all__ = [
    "Graph", "GraphDataset", "load_tu_dataset", "save_tu_dataset",
    "subgraph_isomorphic", "graphs_isomorphic", "enumerate_connected_subgraphs",
    "WalkConfig", "SkeletonTable", "random_walk", "anonymize", "sample_bound",
    "build_skeletons",
    "DfsEdge", "FrequentSubgraph", "ComponentTable", "code_order", "is_minimal",
    "mine_frequent", "pattern_to_graph",
    "TrainConfig", "EmbeddingModel", "init_model", "pair_loss_and_grads",
    "train", "full_softmax_logprob",
    "EvalConfig", "EvalReport", "rbf_kernel", "train_svm", "cross_validate",
    "PipelineConfig", "run_pipeline", "run_sweep",
]
