"""Leave-one-out feature residuals and inverse residual weighting (IRW).

A feature's residual is the mean absolute error of predicting it, for each
held-out case, from the case's nearest neighbors over the *other*
features. Residuals feed back into the metric both as the Laplace scale of
the LK terms and, inverted, as feature weights; iterating the two settles
quickly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data_model import Dataset, FeatureKind
from .distance import DEFAULT_FLOOR, DistanceConfig, pairwise_distances
from .exceptions import ConfigError, DataError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ResidualFit:
    """Outcome of :func:`fit_residuals_iterative`.

    ``loo_errors`` holds the per-case absolute LOO errors of the last
    iteration (NaN for cases left out of a sample); residual conviction
    reads its local residuals from here.
    """

    residuals: np.ndarray
    weights: np.ndarray
    iterations_run: int
    history: list[float]
    converged: bool
    residual_floor: np.ndarray
    p: float
    loo_errors: np.ndarray = field(repr=False)

    def config(self, dataset: Dataset, active=None) -> DistanceConfig:
        return DistanceConfig(p=self.p, weights=self.weights, residuals=self.residuals,
                              residual_floor=self.residual_floor, active=active,
                              specs=dataset.specs)


def weighted_vote(codes: np.ndarray, weights: np.ndarray, spec) -> float:
    """Code with the largest summed weight.

    Ties go to the lexicographically smallest token (nominal) or the lowest
    rank (ordinal).
    """
    uniq = np.unique(codes)
    scores = np.array([weights[codes == c].sum() for c in uniq])
    best = uniq[scores == scores.max()]
    if spec.kind is FeatureKind.NOMINAL and len(best) > 1:
        return float(min(best, key=lambda c: spec.categories[int(c)]))
    return float(best[0])


def _predict_from(dataset: Dataset, feature: int, nbr_ids: np.ndarray, nbr_d: np.ndarray) -> float:
    spec = dataset.specs[feature]
    vals = dataset.X[nbr_ids, feature]
    w = 1.0 / nbr_d
    if spec.is_continuous:
        # centred on the first neighbor so a constant neighborhood predicts exactly
        return float(vals[0] + np.dot(w, vals - vals[0]) / w.sum())
    return weighted_vote(vals, w, spec)


def _abs_error(spec, observed: float, predicted: float) -> float:
    if spec.is_nominal:
        return 0.0 if observed == predicted else 1.0
    return abs(observed - predicted)


def _check_pool(dataset: Dataset):
    if dataset.n_cases < 2:
        raise DataError("leave-one-out needs at least 2 cases")


def loo_predict_feature(dataset: Dataset, case_id: int, feature: int, k: int, cfg: DistanceConfig):
    """Predict one case's feature value from its k nearest other cases, over the other features."""
    _check_pool(dataset)
    sub = cfg.without(feature)
    row = pairwise_distances(dataset.X[case_id:case_id + 1], dataset.X, sub)[0]
    order = np.argsort(row, kind="stable")
    order = order[order != case_id][:k]
    return dataset.specs[feature].decode(_predict_from(dataset, feature, order, row[order]))


def loo_errors(dataset: Dataset, k: int, cfg: DistanceConfig, ids=None) -> np.ndarray:
    """Absolute LOO errors, shape (n_cases, n_features); rows not in ``ids`` are NaN."""
    _check_pool(dataset)
    n, m = dataset.n_cases, dataset.n_features
    ids = np.arange(n) if ids is None else np.asarray(ids)
    k = min(k, n - 1)
    out = np.full((n, m), np.nan)
    for j, spec in enumerate(dataset.specs):
        D = pairwise_distances(dataset.X[ids], dataset.X, cfg.without(j))
        D[np.arange(len(ids)), ids] = np.inf
        order = np.argsort(D, axis=1, kind="stable")[:, :k]
        if spec.is_continuous:
            w = 1.0 / np.take_along_axis(D, order, axis=1)
            vals = dataset.X[order, j]
            pred = vals[:, 0] + (w * (vals - vals[:, :1])).sum(axis=1) / w.sum(axis=1)
            out[ids, j] = np.abs(dataset.X[ids, j] - pred)
            continue
        for row, cid in enumerate(ids):
            nb = order[row]
            pred = _predict_from(dataset, j, nb, D[row, nb])
            out[cid, j] = _abs_error(spec, dataset.X[cid, j], pred)
    return out


def _sample_ids(n: int, sample, seed: int):
    if sample is None or sample >= n:
        return None
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=sample, replace=False))


def _column_means(errors: np.ndarray) -> np.ndarray:
    # fsum keeps the mean independent of case order
    out = []
    for col in errors.T:
        col = col[~np.isnan(col)]
        out.append(math.fsum(col) / len(col))
    return np.array(out)


def compute_feature_residuals(dataset: Dataset, k: int, cfg: DistanceConfig, sample=None,
                              seed: int = 0) -> np.ndarray:
    """Mean absolute LOO error per feature, over all cases or a seeded sample of them.

    Nominal features count a mismatch as an error of 1. Values are not
    floored here.
    """
    errors = loo_errors(dataset, k, cfg, _sample_ids(dataset.n_cases, sample, seed))
    return _column_means(errors)


def irw_weights(residuals, p: float, mask=None) -> np.ndarray:
    """Inverse residual weights ``1 / r ** p``.

    At p = 0 the exponent 1 is used instead, and the weights are normalized
    to sum to one. Features where ``mask`` is False get weight 0.
    """
    r = np.asarray(residuals, dtype=float)
    if np.any(r <= 0):
        raise ConfigError("irw_weights needs floored, positive residuals")
    w = 1.0 / r ** (p if p > 0 else 1.0)
    if mask is not None and np.any(mask):
        w = np.where(mask, w, 0.0)
    if p == 0:
        w = w / w.sum()
    return w


def varying_features(dataset: Dataset) -> np.ndarray:
    """False for features holding a single value across all cases."""
    X = dataset.X
    return np.any(X != X[:1], axis=0)


def initial_scales(dataset: Dataset) -> np.ndarray:
    """Per-feature spread used before any residual is known.

    Median absolute deviation from the median for continuous and ordinal
    features (the mean absolute deviation if that is 0 on a non-constant
    column), and the fraction of cases differing from the mode for nominal
    ones.
    """
    X = dataset.X
    out = np.empty(dataset.n_features)
    for j, spec in enumerate(dataset.specs):
        col = X[:, j]
        if spec.is_nominal:
            _, counts = np.unique(col, return_counts=True)
            out[j] = 1.0 - counts.max() / len(col)
        else:
            dev = np.abs(col - np.median(col))
            out[j] = np.median(dev) or dev.mean()
    return out


def residual_floor_for(dataset: Dataset) -> np.ndarray:
    return np.maximum(DEFAULT_FLOOR, 1e-6 * initial_scales(dataset))


def fit_residuals_iterative(dataset: Dataset, k: int, max_iter: int = 10, tol: float = 0.01,
                            seed: int = 0, p: float = 0.0, sample=None) -> ResidualFit:
    """Alternate LOO residual estimation and IRW until residuals settle.

    Starts from the per-feature spread of :func:`initial_scales` with
    uniform weights. Each iteration recomputes every residual under the
    current metric, then the weights. Stops once the largest relative
    residual change drops below ``tol`` or after ``max_iter`` iterations;
    running out of iterations is reported through ``converged`` rather
    than raised. Constant features keep weight 0 throughout (unless every
    feature is constant): their LK term is the same for every pair, and an
    inverse of a floored residual would otherwise swamp the other weights.
    """
    if max_iter < 1:
        raise ConfigError("max_iter must be >= 1")
    if not tol > 0:
        raise ConfigError("tol must be > 0")
    _check_pool(dataset)
    floor = residual_floor_for(dataset)
    r = np.maximum(initial_scales(dataset), floor)
    varying = varying_features(dataset)
    w = irw_weights(np.ones(dataset.n_features), p, varying)
    ids = _sample_ids(dataset.n_cases, sample, seed)
    history, converged, errors = [], False, None
    for it in range(1, max_iter + 1):
        cfg = DistanceConfig(p=p, weights=w, residuals=r, residual_floor=floor, specs=dataset.specs)
        errors = loo_errors(dataset, k, cfg, ids)
        r_new = np.maximum(_column_means(errors), floor)
        change = float(np.max(np.abs(r_new - r) / np.maximum(r, floor)))
        history.append(change)
        r, w = r_new, irw_weights(r_new, p, varying)
        log.debug("residual iteration %d: max relative change %.3g", it, change)
        if change < tol:
            converged = True
            break
    return ResidualFit(residuals=r, weights=w, iterations_run=len(history), history=history,
                       converged=converged, residual_floor=floor, p=p, loo_errors=errors)
