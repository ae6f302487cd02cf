"""Inverse-distance-weighted classification and regression with case influences."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conviction import residual_conviction
from .data_model import Dataset, FeatureKind
from .distance import DistanceConfig, distances_to
from .exceptions import ConfigError, DataError


@dataclass(frozen=True)
class Prediction:
    """A predicted value and the cases behind it.

    ``influences`` pairs each neighbor's case id with its share of the
    total inverse-distance weight; the shares sum to one.
    """

    value: object
    influences: tuple[tuple[int, float], ...]
    residual_conviction: float | None = None
    estimated_error: float | None = None

    @property
    def influence_weights(self) -> np.ndarray:
        return np.array([w for _, w in self.influences])


def default_k(n_cases: int) -> int:
    """ceil(sqrt(N)) clamped to [1, 30]."""
    return int(min(30, max(1, math.ceil(math.sqrt(n_cases)))))


def _target(dataset: Dataset, kind: FeatureKind) -> int:
    t = dataset.target
    if t is None:
        raise ConfigError("dataset has no target feature")
    if dataset.specs[t].kind is not kind:
        raise ConfigError(f"target {dataset.specs[t].name!r} is {dataset.specs[t].kind.value}, "
                          f"this task needs a {kind.value} target")
    return t


def _neighbors(dataset, query, k, cfg, target, exclude):
    if dataset.n_cases == 0:
        raise DataError("empty dataset")
    if k < 1:
        raise ConfigError("k must be >= 1")
    if isinstance(query, (int, np.integer)):
        exclude = int(query) if exclude is None else exclude
        q = dataset.X[int(query)]
    else:
        q = dataset.encode_query(list(query))
    sub = cfg.without(target)
    d = distances_to(dataset.X, q, sub)
    order = np.argsort(d, kind="stable")
    if exclude is not None:
        order = order[order != exclude]
    order = order[:k]
    inv = 1.0 / d[order]
    return order, inv


def _influences(ids, inv):
    share = inv / inv.sum()
    return tuple((int(i), float(s)) for i, s in zip(ids, share))


def classify(dataset: Dataset, query, k: int, cfg: DistanceConfig,
             exclude: int | None = None) -> Prediction:
    """Label with the largest summed inverse distance among the k nearest cases.

    Ties go to the lexicographically smallest label.
    """
    t = _target(dataset, FeatureKind.NOMINAL)
    ids, inv = _neighbors(dataset, query, k, cfg, t, exclude)
    labels = [dataset.cases[i].values[t] for i in ids]
    scores: dict[str, float] = {}
    for lab, w in zip(labels, inv):
        scores[lab] = scores.get(lab, 0.0) + w
    top = max(scores.values())
    label = min(lab for lab, s in scores.items() if s == top)
    return Prediction(label, _influences(ids, inv))


def regress(dataset: Dataset, query, k: int, cfg: DistanceConfig,
            exclude: int | None = None) -> Prediction:
    """Inverse-distance-weighted mean of the k nearest targets."""
    t = _target(dataset, FeatureKind.CONTINUOUS)
    ids, inv = _neighbors(dataset, query, k, cfg, t, exclude)
    y = dataset.X[ids, t]
    return Prediction(float(np.dot(inv, y) / inv.sum()), _influences(ids, inv))


def predict(dataset: Dataset, query, k: int, cfg: DistanceConfig, exclude=None) -> Prediction:
    if dataset.target is None:
        raise ConfigError("dataset has no target feature")
    if dataset.specs[dataset.target].is_continuous:
        return regress(dataset, query, k, cfg, exclude)
    return classify(dataset, query, k, cfg, exclude)


def predict_with_explanation(dataset: Dataset, query, k: int, cfg: DistanceConfig, errors,
                             exclude: int | None = None) -> Prediction:
    """Predict, then attach residual conviction for the target.

    When the query carries no target value, the prediction error is taken
    as the influence-weighted disagreement of the neighbors with the
    prediction (mismatch share for labels, mean absolute deviation for
    reals).
    """
    pred = predict(dataset, query, k, cfg, exclude)
    t = dataset.target
    spec = dataset.specs[t]
    if isinstance(query, (int, np.integer)):
        exclude = int(query) if exclude is None else exclude
        query = dataset.cases[int(query)].values
    observed_error = None
    if query[t] is None:
        ids = [i for i, _ in pred.influences]
        share = pred.influence_weights
        y = dataset.X[ids, t]
        p_code = spec.encode(pred.value)
        dev = (y != p_code).astype(float) if spec.is_nominal else np.abs(y - p_code)
        observed_error = float(np.dot(share, dev))
    pi_r = residual_conviction(dataset, query, t, pred.value, k, cfg, errors,
                               observed_error=observed_error, exclude=exclude)
    return Prediction(pred.value, pred.influences, pi_r, observed_error)
