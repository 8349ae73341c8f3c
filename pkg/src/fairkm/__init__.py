"""Fair k-means clustering over multiple sensitive attributes."""

from .core import (
    Clustering,
    ClusterState,
    ColumnSpec,
    Dataset,
    FairKMConfig,
    FairKMError,
    ObjectiveBreakdown,
    Schema,
    SchemaError,
    validate_state,
)
from .engine import (
    BadMove,
    KTooLarge,
    MoveDelta,
    apply_move,
    best_cluster,
    fairness_move_delta,
    fit,
    initialize,
    km_move_delta,
    objective,
    resolve_lambda,
)
from .baseline import kmeans_fit
from .ingest import (
    EncodingReport,
    IngestOptions,
    load_csv,
    undersample,
)
from .metrics import (
    FairnessStats,
    MetricsReport,
    clustering_objective,
    compute_report,
    dev_c,
    dev_c_dot,
    dev_o,
    fairness_metrics,
    silhouette,
)
from .bench import BenchSpec, run_bench, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BadMove",
    "BenchSpec",
    "Clustering",
    "ClusterState",
    "ColumnSpec",
    "Dataset",
    "EncodingReport",
    "FairKMConfig",
    "FairKMError",
    "FairnessStats",
    "IngestOptions",
    "KTooLarge",
    "MetricsReport",
    "MoveDelta",
    "ObjectiveBreakdown",
    "Schema",
    "SchemaError",
    "apply_move",
    "best_cluster",
    "clustering_objective",
    "compute_report",
    "dev_c",
    "dev_c_dot",
    "dev_o",
    "fairness_metrics",
    "fairness_move_delta",
    "fit",
    "initialize",
    "km_move_delta",
    "kmeans_fit",
    "load_csv",
    "objective",
    "resolve_lambda",
    "run_bench",
    "run_sweep",
    "silhouette",
    "undersample",
    "validate_state",
]
