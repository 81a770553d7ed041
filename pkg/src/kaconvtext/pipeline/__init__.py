"""Datasets, training loop, metrics and spline-coefficient export."""
from .data import Dataset, Record, load_dataset, make_separable_dataset, stratified_split
from .export import export_splines
from .metrics import MetricsReport, classification_report
from .training import RunConfig, RunManifest, evaluate, train

__all__ = [
    "Dataset",
    "MetricsReport",
    "Record",
    "RunConfig",
    "RunManifest",
    "classification_report",
    "evaluate",
    "export_splines",
    "load_dataset",
    "make_separable_dataset",
    "stratified_split",
    "train",
]
