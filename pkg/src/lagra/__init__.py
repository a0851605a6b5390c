"""Sparse linear graph classifiers over attributed graphlets."""

from .graph import AttributedGraph, Dataset, SplitSpec, load_tudataset, split_dataset
from .model import TrainedModel, predict
from .optimizer import OptimizerConfig, regularization_path

__all__ = [
    "AttributedGraph",
    "Dataset",
    "OptimizerConfig",
    "SplitSpec",
    "TrainedModel",
    "load_tudataset",
    "predict",
    "regularization_path",
    "split_dataset",
]
__version__ = "0.1.0"
