"""Distance contribution, surprisal and conviction ratios.

Conviction is expected surprisal over observed surprisal: values near 1
are unremarkable, values well below 1 flag a point (or a prediction) as
surprising. Three flavours are provided:

* familiarity - how much idealizing a point distorts the distribution of
  distance contributions over the whole model (KL divergence);
* similarity - a point's neighbors' mean distance contribution over its own;
* residual - local mean LOO error of a feature over a prediction's error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import Dataset, NeighborSet
from .distance import DistanceConfig, distances_to, pairwise_distances
from .exceptions import ConfigError, DataError, DomainError

CONVICTION_CAP = 1e6


@dataclass(frozen=True)
class ConvictionReport:
    phi: float
    surprisal: float
    pi_s: float
    expected_phi: float
    pi_f: float | None = None


@dataclass(frozen=True, eq=False)
class SurprisalContext:
    r_norm: float
    k: int
    cfg: DistanceConfig

    def __post_init__(self):
        if not self.r_norm > 0:
            raise DomainError("r_norm must be positive")

    @classmethod
    def from_config(cls, cfg: DistanceConfig, k: int) -> "SurprisalContext":
        # a 0-"norm" would count features, so p = 0 falls back to the 1-norm
        q = cfg.p if cfg.p > 0 else 1.0
        r = cfg.effective_residuals[cfg.active]
        return cls(float(np.sum(r ** q) ** (1.0 / q)), k, cfg)


@dataclass(frozen=True, eq=False)
class NeighborCache:
    """Each in-model case's k nearest other cases, plus its distance contribution."""

    ids: np.ndarray
    distances: np.ndarray
    phis: np.ndarray
    k: int


def _harmonic_mean(d: np.ndarray, axis=-1):
    return d.shape[axis] / np.sum(1.0 / d, axis=axis)


def distance_contribution(neighbors) -> float:
    """Harmonic mean of the distances to a point's nearest neighbors."""
    d = neighbors.distances if isinstance(neighbors, NeighborSet) else np.asarray(neighbors, float)
    if d.size == 0:
        raise DataError("distance contribution needs at least one neighbor")
    if np.any(d <= 0):
        raise DomainError("neighbor distances must be positive")
    return float(_harmonic_mean(d))


def self_information(phi: float, ctx: SurprisalContext) -> float:
    return phi / ctx.r_norm


def point_probabilities(phis) -> np.ndarray:
    phis = np.asarray(phis, dtype=float)
    if phis.size == 0:
        raise DataError("no distance contributions given")
    total = phis.sum()
    if not total > 0:
        raise DomainError("distance contributions sum to zero")
    return phis / total


def _log1p_minus_x(x: np.ndarray) -> np.ndarray:
    """``log1p(x) - x`` without cancellation near 0 (alternating series for |x| < 0.05)."""
    x = np.asarray(x, dtype=float)
    out = np.log1p(x) - x
    small = np.abs(x) < 0.05
    if small.any():
        xs = x[small]
        acc = np.zeros_like(xs)
        for m in range(15, 1, -1):
            acc = (-1) ** (m + 1) * xs ** m / m + acc
        out[small] = acc
    return out


def idealized_divergences(L: np.ndarray) -> np.ndarray:
    """KL(L || L_j) for every j, where L_j sets entry j to 1/n and renormalizes.

    With ``Z_j = 1 - l_j + 1/n`` every other entry of L_j is ``l_i / Z_j``,
    so the divergence collapses to ``ln Z_j + l_j ln(n l_j)``. Writing
    ``d = l_j - 1/n``, the first-order terms of the two logarithms cancel
    exactly and the remainder ``n d^2 + f(-d) + l_j f(n d)`` with
    ``f(x) = ln(1 + x) - x`` keeps full relative precision for nearly
    uniform L.
    """
    L = np.asarray(L, dtype=float)
    n = L.size
    d = L - 1.0 / n
    return n * d * d + _log1p_minus_x(-d) + L * _log1p_minus_x(n * d)


def familiarity_from_phis(phis) -> np.ndarray:
    """Familiarity conviction of every point, given all distance contributions."""
    D = np.maximum(idealized_divergences(point_probabilities(phis)), 0.0)
    if D.max() < 1e-20:
        return np.ones_like(D)
    mean = D.mean()
    with np.errstate(divide="ignore"):
        out = np.where(D > 0, mean / D, np.inf)
    return np.minimum(out, CONVICTION_CAP)


def _require(dataset: Dataset, k: int):
    if k < 1:
        raise ConfigError("k must be >= 1")
    if dataset.n_cases < k + 1:
        raise DataError(f"need at least k + 1 = {k + 1} cases, dataset has {dataset.n_cases}")


def in_model_neighbors(dataset: Dataset, k: int, cfg: DistanceConfig) -> NeighborCache:
    _require(dataset, k)
    D = pairwise_distances(dataset.X, dataset.X, cfg)
    np.fill_diagonal(D, np.inf)
    ids = np.argsort(D, axis=1, kind="stable")[:, :k]
    dist = np.take_along_axis(D, ids, axis=1)
    return NeighborCache(ids, dist, _harmonic_mean(dist), k)


def familiarity_conviction(dataset: Dataset, cfg: DistanceConfig, k: int,
                           cache: NeighborCache | None = None) -> np.ndarray:
    cache = cache or in_model_neighbors(dataset, k, cfg)
    return familiarity_from_phis(cache.phis)


def _encode(dataset: Dataset, query) -> np.ndarray:
    if isinstance(query, (int, np.integer)):
        return dataset.X[int(query)]
    return dataset.encode_query(query)


def _query_neighbors(dataset, q, k, cfg, exclude):
    d = distances_to(dataset.X, q, cfg)
    order = np.argsort(d, kind="stable")
    if exclude is not None:
        order = order[order != exclude]
    order = order[:k]
    return order, d[order], d


def similarity_conviction(dataset: Dataset, query, k: int, cfg: DistanceConfig,
                          exclude: int | None = None,
                          cache: NeighborCache | None = None) -> ConvictionReport:
    """Similarity conviction of a query row (or an in-model case id with ``exclude``).

    Each neighbor's distance contribution is its in-model one, self excluded.
    """
    _require(dataset, k)
    if isinstance(query, (int, np.integer)) and exclude is None:
        exclude = int(query)
    cache = cache or in_model_neighbors(dataset, k, cfg)
    ids, dist, _ = _query_neighbors(dataset, _encode(dataset, query), k, cfg, exclude)
    phi = float(_harmonic_mean(dist))
    expected = float(np.mean(cache.phis[ids]))
    ctx = SurprisalContext.from_config(cfg, k)
    return ConvictionReport(phi=phi, surprisal=self_information(phi, ctx),
                            pi_s=expected / phi, expected_phi=expected)


def familiarity_of_query(dataset: Dataset, query, k: int, cfg: DistanceConfig,
                         cache: NeighborCache | None = None) -> float:
    """Familiarity conviction of an out-of-model query, scored as a temporary extra case.

    Only cases whose neighbor sets the query would enter get their distance
    contribution recomputed; the shared cache is not modified.
    """
    _require(dataset, k)
    cache = cache or in_model_neighbors(dataset, k, cfg)
    _, own, d = _query_neighbors(dataset, _encode(dataset, query), k, cfg, None)
    phis = cache.phis.copy()
    # the query gets id n, so it only displaces strictly farther neighbors
    hit = d < cache.distances[:, -1]
    if hit.any():
        merged = np.sort(np.concatenate([cache.distances[hit, :-1], d[hit, None]], axis=1), axis=1)
        phis[hit] = _harmonic_mean(merged)
    phis = np.append(phis, _harmonic_mean(own))
    return float(familiarity_from_phis(phis)[-1])


def residual_conviction(dataset: Dataset, query, feature: int, prediction, k: int,
                        cfg: DistanceConfig, errors, observed_error: float | None = None,
                        exclude: int | None = None) -> float:
    """Local expected LOO error of ``feature`` over the query's prediction error.

    ``errors`` is the per-case LOO error cache from residual fitting. The
    prediction error is ``|observed - prediction|`` when the query carries
    the feature value (0/1 for nominal features); otherwise it must be
    supplied as ``observed_error``. Both the local mean error and the
    prediction error are floored at the feature's residual floor, so a
    perfect prediction among perfectly predicted neighbors scores 1. The
    result is capped at ``CONVICTION_CAP``.
    """
    if errors is None:
        raise ConfigError("no LOO residual cache; run residual fitting (`fit`) first")
    spec = dataset.specs[feature]
    if isinstance(query, (int, np.integer)):
        exclude = int(query) if exclude is None else exclude
        query = dataset.cases[int(query)].values
    observed = query[feature]
    if observed is not None:
        o, pr = spec.encode(observed), spec.encode(prediction)
        observed_error = float(o != pr) if spec.is_nominal else abs(o - pr)
    elif observed_error is None:
        raise ConfigError(f"query has no value for {spec.name!r}; pass observed_error")
    sub = cfg.without(feature)
    q = dataset.encode_query(list(query))
    ids, _, _ = _query_neighbors(dataset, q, k, sub, exclude)
    local = np.asarray(errors)[ids, feature]
    local = local[~np.isnan(local)]
    if local.size == 0:
        raise ConfigError("no cached LOO errors among the query's neighbors")
    floor = float(cfg.residual_floor[feature])
    expected = max(float(np.mean(local)), floor)
    return min(expected / max(observed_error, floor), CONVICTION_CAP)
