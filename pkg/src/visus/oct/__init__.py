"""Two-stage OCT biomarker classification and documentation completion."""

from .aggregate import AGGREGATE_DIM, ScanAggregator, aggregate_scan
from .classifiers import (
    SLICE_CLASSIFIER_KINDS,
    LogisticSliceClassifier,
    MlpSliceClassifier,
    SliceClassifier,
    inverse_frequency_weights,
)
from .complete import (
    BiomarkerModel,
    CompletionReport,
    binary_f1,
    complete_documentation,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    train_slice_classifier,
    train_two_stage,
)
from .slices import (
    DEFAULT_RESOLUTION,
    SLICE_HI,
    SLICE_LO,
    bilinear_resize,
    extract_slices,
)

__all__ = [
    "AGGREGATE_DIM",
    "BiomarkerModel",
    "CompletionReport",
    "DEFAULT_RESOLUTION",
    "LogisticSliceClassifier",
    "MlpSliceClassifier",
    "SLICE_CLASSIFIER_KINDS",
    "SLICE_HI",
    "SLICE_LO",
    "ScanAggregator",
    "SliceClassifier",
    "aggregate_scan",
    "bilinear_resize",
    "binary_f1",
    "complete_documentation",
    "extract_slices",
    "inverse_frequency_weights",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "train_slice_classifier",
    "train_two_stage",
]
