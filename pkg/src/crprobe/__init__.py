"""crprobe: collaborative-relation analytics for session recommendation data.

The pipeline builds the global item co-occurrence graph from training
sequences, classifies item pairs by hop-level relation, reproduces the
classic Item-KNN / SKNN / BPR-MF baselines under a full-ranking protocol,
and evaluates any model (built-in or external prediction files) overall and
per relation slice.
"""

from .analysis import (
    LabelCrRecord,
    PredictionSet,
    SlicePartition,
    direct_indirect_partition,
    label_cr_records,
    parse_prediction_file,
    prediction_cr_proportions,
    pure_partition,
    write_prediction_file,
)
from .crgraph import (
    CLASS_NONE,
    CLASS_OTHERS,
    CoocHistogram,
    CrHistogram,
    GlobalGraph,
    HopClassifier,
    bfs_frontiers,
    build_global_graph,
    cooc_frequency_histogram,
    cr_between,
    hop_class,
    pair_class_histogram,
)
from .errors import ConfigError, CrprobeError, DataError, ModelError
from .evaluation import (
    MetricsReport,
    compare_reports,
    evaluate_slices,
    mrr_at_k,
    precision_at_k,
)
from .ingest import (
    ColumnMap,
    DatasetSplit,
    Event,
    Sample,
    SampleSet,
    Sequence,
    SequenceSet,
    StatsReport,
    Vocab,
    build_sequences,
    dataset_stats,
    parse_events,
    preprocess,
    split_chronological,
)
from .recommenders import (
    BprHyperParams,
    BprMfModel,
    ItemKnnModel,
    RecommendationList,
    SknnModel,
    predict_all,
    recommend_topk,
    train_bpr_mf,
    train_item_knn,
    train_sknn,
)

__version__ = "0.1.0"

__all__ = [
    "BprHyperParams",
    "BprMfModel",
    "CLASS_NONE",
    "CLASS_OTHERS",
    "ColumnMap",
    "ConfigError",
    "CoocHistogram",
    "CrHistogram",
    "CrprobeError",
    "DataError",
    "DatasetSplit",
    "Event",
    "GlobalGraph",
    "HopClassifier",
    "ItemKnnModel",
    "LabelCrRecord",
    "MetricsReport",
    "ModelError",
    "PredictionSet",
    "RecommendationList",
    "Sample",
    "SampleSet",
    "Sequence",
    "SequenceSet",
    "SknnModel",
    "SlicePartition",
    "StatsReport",
    "Vocab",
    "bfs_frontiers",
    "build_global_graph",
    "build_sequences",
    "compare_reports",
    "cooc_frequency_histogram",
    "cr_between",
    "dataset_stats",
    "direct_indirect_partition",
    "evaluate_slices",
    "hop_class",
    "label_cr_records",
    "mrr_at_k",
    "pair_class_histogram",
    "parse_events",
    "parse_prediction_file",
    "precision_at_k",
    "predict_all",
    "prediction_cr_proportions",
    "preprocess",
    "pure_partition",
    "recommend_topk",
    "split_chronological",
    "train_bpr_mf",
    "train_item_knn",
    "train_sknn",
    "write_prediction_file",
]
