"""Semantic packet aggregation and repeated transmission over erasure channels."""

from .message import (
    ChannelParams,
    Dictionary,
    Grouping,
    LatencyBudget,
    Message,
    WordGroup,
    feasible_packet_sizes,
    packet_bits,
    reconstruct_text,
    tokenize,
)
from .sempa import (
    baseline_b,
    exact_expected_score,
    exhaustive_partition_oracle,
    greedy_group_biased,
    greedy_group_synergy,
    group_marginal_score,
    loss_pattern_prob,
    psi,
    select_M,
)
from .semrt import (
    RepetitionVector,
    TransmissionPlan,
    enumerate_compositions,
    exhaustive_rep_search,
    rep_expected_score,
    rep_pattern_prob,
    select_groups_overcomplete,
)
from .similarity import (
    CachedEmbedder,
    DeterministicEmbedder,
    RemoteEmbedder,
    SubsetScoreTable,
    cosine,
    deterministic_embedder,
)
from .surrogate import SurrogateModel, adjust_counts, build_features, generate_dataset, infer, train

__all__ = [
    "CachedEmbedder",
    "ChannelParams",
    "DeterministicEmbedder",
    "Dictionary",
    "Grouping",
    "LatencyBudget",
    "Message",
    "RemoteEmbedder",
    "RepetitionVector",
    "SubsetScoreTable",
    "SurrogateModel",
    "TransmissionPlan",
    "WordGroup",
    "adjust_counts",
    "baseline_b",
    "build_features",
    "cosine",
    "deterministic_embedder",
    "enumerate_compositions",
    "exact_expected_score",
    "exhaustive_partition_oracle",
    "exhaustive_rep_search",
    "feasible_packet_sizes",
    "generate_dataset",
    "greedy_group_biased",
    "greedy_group_synergy",
    "group_marginal_score",
    "infer",
    "loss_pattern_prob",
    "packet_bits",
    "psi",
    "reconstruct_text",
    "rep_expected_score",
    "rep_pattern_prob",
    "select_M",
    "select_groups_overcomplete",
    "tokenize",
    "train",
]
