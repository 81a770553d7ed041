"""Kolmogorov-Arnold convolution for token sequences, with CNN and KAN-head baselines.

Subpackages and modules:

- ``spline``: uniform B-spline grids, basis evaluation, least-squares fits
- ``autodiff``: reverse-mode tensors, functional ops, Adam, gradient checks
- ``layers``: Conv1d, KAConv1d, KANLayer, MLPHead and KAN stacks
- ``embeddings``: vocabulary, vector files, random/static/fine-tuned tables
- ``models``: the four classifiers and parameter accounting
- ``pipeline``: datasets, training, metrics, spline export
"""
from .embeddings import EmbeddingTable, Vocabulary, build_vocab, init_random, load_pretrained
from .errors import (
    InvalidArgument, InvalidState, KAConvError, NumericFailure, ParseError, UnsupportedModel)
from .layers import Conv1d, KAConv1d, KANLayer, KANStack, MLPHead, kart_stack
from .models import VARIANTS, ModelSpec, TextClassifier, build, count_params
from .serialization import load_checkpoint, save_checkpoint
from .spline import SplineGrid, bspline_basis, fit_spline_coeffs, make_uniform_grid

__version__ = "0.1.0"

__all__ = [
    "Conv1d",
    "EmbeddingTable",
    "InvalidArgument",
    "InvalidState",
    "KAConv1d",
    "KAConvError",
    "KANLayer",
    "KANStack",
    "MLPHead",
    "ModelSpec",
    "NumericFailure",
    "ParseError",
    "SplineGrid",
    "TextClassifier",
    "UnsupportedModel",
    "VARIANTS",
    "Vocabulary",
    "build",
    "build_vocab",
    "bspline_basis",
    "count_params",
    "fit_spline_coeffs",
    "init_random",
    "kart_stack",
    "load_checkpoint",
    "load_pretrained",
    "make_uniform_grid",
    "save_checkpoint",
]
