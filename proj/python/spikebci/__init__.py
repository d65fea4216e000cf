"""Spike-encoded spatio-temporal classification of multichannel neural signals."""

from ._spikebci import (
    ContractError,
    ParseError,
    TopologyError,
    __version__,
    elbow_select,
    encode,
    encode_signal,
    evaluate_repeated,
    extract_features,
    feature_length,
    generate_synthetic,
    initial_weights,
    kmeans,
    knn_predict,
    normalize,
    plasticity_magnitude,
    run_pipeline,
)

__all__ = [
    "ContractError",
    "ParseError",
    "TopologyError",
    "__version__",
    "elbow_select",
    "encode",
    "encode_signal",
    "evaluate_repeated",
    "extract_features",
    "feature_length",
    "generate_synthetic",
    "initial_weights",
    "kmeans",
    "knn_predict",
    "normalize",
    "plasticity_magnitude",
    "run_pipeline",
]
