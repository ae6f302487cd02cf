"""Conviction-thresholded anomaly detection."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .conviction import (NeighborCache, familiarity_of_query, in_model_neighbors,
                         similarity_conviction)
from .data_model import Dataset
from .distance import DistanceConfig

DEFAULT_THRESHOLD = 0.7


class Mode(str, Enum):
    SIMILARITY = "similarity"
    FAMILIARITY = "familiarity"


@dataclass(frozen=True)
class AnomalyVerdict:
    score: float
    mode: Mode
    is_anomaly: bool
    threshold: float


def detect(dataset: Dataset, query, mode=Mode.SIMILARITY, threshold: float = DEFAULT_THRESHOLD,
           k: int = 5, cfg: DistanceConfig | None = None,
           cache: NeighborCache | None = None) -> AnomalyVerdict:
    """Flag ``query`` when its conviction falls below ``threshold``.

    Similarity mode expects a model built from inliers only. Familiarity
    mode works on mixed data: the query is scored as a temporary extra
    case of the model.
    """
    mode = Mode(mode)
    if cfg is None:
        raise ValueError("detect needs a DistanceConfig")
    if mode is Mode.SIMILARITY:
        score = similarity_conviction(dataset, query, k, cfg, cache=cache).pi_s
    else:
        score = familiarity_of_query(dataset, query, k, cfg, cache=cache)
    return AnomalyVerdict(score, mode, score < threshold, threshold)


def detect_batch(dataset: Dataset, queries: Sequence, mode=Mode.SIMILARITY,
                 threshold: float = DEFAULT_THRESHOLD, k: int = 5,
                 cfg: DistanceConfig | None = None) -> list[AnomalyVerdict]:
    cache = in_model_neighbors(dataset, k, cfg)
    return [detect(dataset, q, mode, threshold, k, cfg, cache) for q in queries]
