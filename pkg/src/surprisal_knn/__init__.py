"""Surprisal-weighted k-nearest-neighbor learning.

A mixed-type distance built from expected Laplace-noise differences, with
per-feature scales and weights fitted from leave-one-out residuals, drives
inverse-distance-weighted prediction and conviction scores (similarity,
familiarity, residual) used for explanation and anomaly detection.
"""

from .anomaly import DEFAULT_THRESHOLD, AnomalyVerdict, Mode, detect, detect_batch
from .conviction import (ConvictionReport, familiarity_conviction, familiarity_of_query,
                         residual_conviction, similarity_conviction)
from .data_model import (Case, Dataset, FeatureKind, FeatureSpec, NeighborSet, knn_query,
                         load_dataset, load_queries, load_schema)
from .distance import DistanceConfig, combined_distance, lk_laplace, pairwise_distances
from .evaluation import EvalReport, Task, evaluate, evaluate_anomaly
from .exceptions import (ConfigError, DataError, DomainError, ParseError, SchemaError,
                         SurprisalError)
from .learners import Prediction, classify, default_k, predict, regress
from .metrics import classification_metrics, f1_binary, regression_metrics
from .model import SurprisalModel
from .residuals import ResidualFit, compute_feature_residuals, fit_residuals_iterative, irw_weights

__all__ = [
    "DEFAULT_THRESHOLD", "AnomalyVerdict", "Mode", "detect", "detect_batch",
    "ConvictionReport", "familiarity_conviction", "familiarity_of_query", "residual_conviction",
    "similarity_conviction", "Case", "Dataset", "FeatureKind", "FeatureSpec", "NeighborSet",
    "knn_query", "load_dataset", "load_queries", "load_schema", "DistanceConfig",
    "combined_distance", "lk_laplace", "pairwise_distances", "EvalReport", "Task", "evaluate",
    "evaluate_anomaly", "ConfigError", "DataError", "DomainError", "ParseError", "SchemaError",
    "SurprisalError", "Prediction", "classify", "default_k", "predict", "regress",
    "classification_metrics", "f1_binary", "regression_metrics", "SurprisalModel", "ResidualFit",
    "compute_feature_residuals", "fit_residuals_iterative", "irw_weights",
]
__version__ = "0.1.0"
