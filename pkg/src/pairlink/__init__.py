"""pairlink: data-parallel record linkage on comparison patterns."""

__version__ = "0.1.0"

from .errors import PairlinkError
from .evaluate import ConfusionMatrix, MetricsReport, fit_diagnosis, metrics
from .ingest import ComparisonVector, CorpusManifest, load_corpus
from .models import TrainConfig, TrainedModel, predict, train
from .pipeline import PipelineConfig, RunManifest, run_pipeline
from .table import PartitionedTable, partition

__all__ = [
    "PairlinkError",
    "ComparisonVector",
    "CorpusManifest",
    "load_corpus",
    "PartitionedTable",
    "partition",
    "ConfusionMatrix",
    "MetricsReport",
    "metrics",
    "fit_diagnosis",
    "TrainConfig",
    "TrainedModel",
    "train",
    "predict",
    "PipelineConfig",
    "RunManifest",
    "run_pipeline",
    "__version__",
]
