"""Graph similarity learning with multi-scale interaction matrices and CNNs,
plus exact and approximate graph edit distance baselines."""
from .assignment import assignment_ged, build_cost_matrix, hungarian, jonker_volgenant, solve_lsap
from .dataset import Corpus, LabelCache, Split, generate_synthetic, load_corpus, save_corpus, split_corpus
from .ged import astar_ged, beam_ged, brute_force_ged, ged_to_similarity, normalized_ged, similarity_to_ged
from .graph import Graph, bfs_order, validate_graph
from .metrics import kendall_tau, mse_metric, precision_at_k
from .model import EmbAvg, GSimCNN, ModelConfig, TrainConfig, train

__all__ = [
    "Corpus",
    "EmbAvg",
    "GSimCNN",
    "Graph",
    "LabelCache",
    "ModelConfig",
    "Split",
    "TrainConfig",
    "assignment_ged",
    "astar_ged",
    "beam_ged",
    "bfs_order",
    "brute_force_ged",
    "build_cost_matrix",
    "generate_synthetic",
    "ged_to_similarity",
    "hungarian",
    "jonker_volgenant",
    "kendall_tau",
    "load_corpus",
    "mse_metric",
    "normalized_ged",
    "precision_at_k",
    "save_corpus",
    "similarity_to_ged",
    "solve_lsap",
    "split_corpus",
    "train",
    "validate_graph",
]
