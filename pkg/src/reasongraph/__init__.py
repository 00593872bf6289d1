"""Turn chain-of-thought traces into reasoning graphs and analyse their structure."""

__version__ = "0.1.0"

from .clustering import (  # noqa: E402
    CandidateClustering,
    ReasoningStep,
    ScoringWeights,
    align_steps_to_units,
    composite_score,
    compute_mu_ref,
    phi_intra_coherence,
    phi_length_regularity,
    phi_separation,
    run_ensemble,
)
from .edges import (  # noqa: E402
    EdgeEstimate,
    EdgeTable,
    EstimatorConfig,
    ReasoningGraph,
    apply_sample,
    consensus,
    estimate_edges,
    should_stop,
)
from .embedding import HashingEmbedder, cosine  # noqa: E402
from .graph import GraphMetrics, degrees, metrics  # noqa: E402
from .traces import ReasoningTrace, ReasoningUnit, load_corpus, segment_units  # noqa: E402

__all__ = [
    "CandidateClustering",
    "ReasoningStep",
    "ScoringWeights",
    "align_steps_to_units",
    "composite_score",
    "compute_mu_ref",
    "phi_intra_coherence",
    "phi_length_regularity",
    "phi_separation",
    "run_ensemble",
    "EdgeEstimate",
    "EdgeTable",
    "EstimatorConfig",
    "ReasoningGraph",
    "apply_sample",
    "consensus",
    "estimate_edges",
    "should_stop",
    "HashingEmbedder",
    "cosine",
    "GraphMetrics",
    "degrees",
    "metrics",
    "ReasoningTrace",
    "ReasoningUnit",
    "load_corpus",
    "segment_units",
]
