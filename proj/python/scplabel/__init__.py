"""Scene-clustering pseudo-labeling: feature enhancement, k-means++ scene
clustering and ensemble cluster labels."""

from ._scplabel import (  # noqa: F401
    CorruptionError,
    Error,
    FormatError,
    GenerationError,
    IoError,
    MetricError,
    ParameterError,
    ValidationError,
    adjusted_rand_index,
    assign_pseudo_labels,
    calinski_harabasz,
    cluster,
    dba,
    filter_clusters,
    knn,
    l2_normalize,
    num_threads,
    one_by_one,
    set_num_threads,
    silhouette,
    simulate_predictions,
    softmax,
    synth,
    top1_accuracy,
)

__version__ = "0.1.0"
