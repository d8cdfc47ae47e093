"""Multi-view constrained clustering via consensus-derived instance-level
view priors and closed-form constraint propagation."""

from .clustering import (
    ClusterAssignment,
    cluster_scores,
    sigmoid_affinity,
    spectral_clustering,
)
from .consensus import consensus_matrix, consistency, dense_neighborhood_size, prune_affinity
from .data import SyntheticData, generate_synthetic
from .errors import CpcpError, DegenerateGraphError, NumericalError, ValidationError
from .evaluation import SweepPoint, multilabel_nmi, nmi, sweep
from .graph import Affinity, build_knn_affinity, instance_probability, transition_matrix
from .pipeline import (
    Dataset,
    PipelineConfig,
    PipelineResult,
    run_pipeline,
    sweep_pipeline,
    view_selection,
)
from .prior import (
    PseudoConditionals,
    Rank1Factors,
    UnifiedGraph,
    pseudo_graph_prior,
    quotient_matrix,
    rank1_approximate,
    reconcile,
    unified_graph,
)
from .propagation import (
    ConstraintSet,
    SideInformation,
    balance_weight,
    propagate_balanced,
    propagate_mmcp,
    sample_constraints,
    side_information,
)

__version__ = "0.1.0"

__all__ = [
    "Affinity",
    "ClusterAssignment",
    "ConstraintSet",
    "CpcpError",
    "Dataset",
    "DegenerateGraphError",
    "NumericalError",
    "PipelineConfig",
    "PipelineResult",
    "PseudoConditionals",
    "Rank1Factors",
    "SideInformation",
    "SweepPoint",
    "SyntheticData",
    "UnifiedGraph",
    "ValidationError",
    "balance_weight",
    "build_knn_affinity",
    "cluster_scores",
    "consensus_matrix",
    "consistency",
    "dense_neighborhood_size",
    "generate_synthetic",
    "instance_probability",
    "multilabel_nmi",
    "nmi",
    "propagate_balanced",
    "propagate_mmcp",
    "prune_affinity",
    "pseudo_graph_prior",
    "quotient_matrix",
    "rank1_approximate",
    "reconcile",
    "run_pipeline",
    "sample_constraints",
    "side_information",
    "sigmoid_affinity",
    "spectral_clustering",
    "sweep",
    "sweep_pipeline",
    "transition_matrix",
    "unified_graph",
]
