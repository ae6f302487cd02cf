"""LK-Laplace distance terms and the combined Minkowski-family metric.

Each feature difference ``mu`` is replaced by the expected absolute
difference of two Laplace variables centred ``mu`` apart with scale ``b``
(the feature residual)::

    d_LK(mu, b) = mu + exp(-mu / b) * (3 b + mu) / 2

which is never zero, so the geometric-mean (p = 0) metric stays strictly
positive even for identical cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .data_model import FeatureKind, FeatureSpec
from .exceptions import ConfigError, DomainError

DEFAULT_FLOOR = 1e-12


def lk_laplace(mu, b):
    """Closed-form LK distance between two equal-scale Laplace distributions.

    Accepts scalars or broadcastable arrays; returns a float for scalar input.
    """
    mu_a = np.asarray(mu, dtype=float)
    b_a = np.asarray(b, dtype=float)
    if np.any(b_a <= 0) or np.any(np.isnan(b_a)):
        raise DomainError("lk_laplace needs b > 0; apply the residual floor first")
    if np.any(mu_a < 0):
        raise DomainError("lk_laplace needs mu >= 0")
    out = mu_a + 0.5 * np.exp(-mu_a / b_a) * (3.0 * b_a + mu_a)
    return float(out) if out.ndim == 0 else out


def _gauss_legendre_panels(edges, nodes_per_panel):
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (x + 1.0)), half * w  # (n_panels, nodes)


def lk_numeric_oracle(mu: float, b: float, half_width: float = 40.0, panel_width: float = 0.25,
                      nodes_per_panel: int = 10) -> float:
    """Evaluate the LK double integral for Laplace(0, b) and Laplace(mu, b) by quadrature.

    Tensor-product Gauss-Legendre over square panels whose edges include
    both means, so each density is smooth inside a panel. Off-diagonal
    panel pairs have a fixed sign of ``x - y`` and their node sums factor
    into per-panel moments. Diagonal panels are split along ``x = y`` into
    two triangles, each mapped onto a square, so the kink is never
    integrated across. ``half_width`` and ``panel_width`` are in units of
    ``b``; the defaults give well over 2000 nodes per axis.
    """
    if b <= 0:
        raise DomainError("lk_numeric_oracle needs b > 0")
    lo, hi = min(0.0, mu) - half_width * b, max(0.0, mu) + half_width * b
    cuts = sorted({lo, 0.0, float(mu), hi})
    edges = [cuts[0]]
    for a, c in zip(cuts[:-1], cuts[1:]):
        n = max(1, math.ceil((c - a) / (panel_width * b)))
        edges.extend(np.linspace(a, c, n + 1)[1:])
    edges = np.asarray(edges)
    nodes, weights = _gauss_legendre_panels(edges, nodes_per_panel)

    def f(x):
        return np.exp(-np.abs(x) / b) / (2 * b)

    def g(y):
        return np.exp(-np.abs(y - mu) / b) / (2 * b)

    fw, gw = f(nodes) * weights, g(nodes) * weights
    F0, F1 = fw.sum(axis=1), (nodes * fw).sum(axis=1)
    G0, G1 = gw.sum(axis=1), (nodes * gw).sum(axis=1)

    def before(v):
        return np.concatenate(([0.0], np.cumsum(v)[:-1]))

    # x-panel left of y-panel: |x - y| = y - x, and the mirror case
    total = np.sum(G1 * before(F0) - G0 * before(F1))
    total += np.sum(F1 * before(G0) - F0 * before(G1))

    # diagonal panels, x = a + (y - a) t on the lower triangle and mirrored
    t, tw = np.polynomial.legendre.leggauss(nodes_per_panel)
    t, tw = 0.5 * (t + 1.0), 0.5 * tw
    a = edges[:-1, None, None]
    outer = nodes[:, :, None]
    span = outer - a
    inner = a + span * t
    jac = span * tw * weights[:, :, None]
    total += np.sum((outer - inner) * f(inner) * g(outer) * jac)
    total += np.sum((outer - inner) * g(inner) * f(outer) * jac)
    return float(total)


def feature_difference(spec: FeatureSpec, a, b) -> float:
    """Per-feature difference: absolute for continuous, 0/1 for nominal, rank steps for ordinal."""
    if spec.kind is FeatureKind.CONTINUOUS:
        return abs(float(a) - float(b))
    ca, cb = spec.encode(a), spec.encode(b)
    if spec.kind is FeatureKind.NOMINAL:
        return 0.0 if ca == cb else 1.0
    return abs(ca - cb)


@dataclass(frozen=True, eq=False)
class DistanceConfig:
    """Parameters of the combined metric.

    ``residuals`` play the role of the Laplace scale ``b`` and are floored
    by ``residual_floor`` before use. ``active`` masks features in or out
    of the feature set (e.g. the target during prediction); inactive
    features are ignored entirely and do not count towards ``|Xi|``.
    ``specs`` is only needed when comparing raw (un-encoded) values.
    """

    p: float = 0.0
    weights: np.ndarray | None = None
    residuals: np.ndarray | None = None
    residual_floor: np.ndarray | float = DEFAULT_FLOOR
    active: np.ndarray | None = None
    nominal: np.ndarray | None = None
    specs: tuple | None = None

    def __post_init__(self):
        if not self.p >= 0:
            raise ConfigError(f"p must be >= 0, got {self.p}")
        if self.residuals is None:
            raise ConfigError("DistanceConfig needs residuals")
        r = np.array(self.residuals, dtype=float)
        n = r.size
        w = np.ones(n) if self.weights is None else np.array(self.weights, dtype=float)
        floor = np.broadcast_to(np.asarray(self.residual_floor, dtype=float), (n,)).copy()
        active = np.ones(n, bool) if self.active is None else np.array(self.active, dtype=bool)
        if self.nominal is not None:
            nominal = np.array(self.nominal, dtype=bool)
        elif self.specs is not None:
            nominal = np.array([s.is_nominal for s in self.specs], dtype=bool)
        else:
            nominal = np.zeros(n, bool)
        if not (w.shape == floor.shape == active.shape == nominal.shape == (n,)):
            raise ConfigError("weights, residuals, floor and masks must all have one entry per feature")
        if np.any(w < 0) or np.any(r < 0):
            raise ConfigError("weights and residuals must be >= 0")
        if np.any(floor <= 0):
            raise ConfigError("residual_floor must be > 0")
        for name, arr in (("weights", w), ("residuals", r), ("residual_floor", floor),
                          ("active", active), ("nominal", nominal)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def for_specs(cls, specs: Sequence[FeatureSpec], p=0.0, residuals=None, weights=None,
                  residual_floor=DEFAULT_FLOOR, active=None):
        residuals = np.ones(len(specs)) if residuals is None else residuals
        return cls(p=p, weights=weights, residuals=residuals, residual_floor=residual_floor,
                   active=active, specs=tuple(specs))

    @property
    def n_features(self) -> int:
        return self.residuals.size

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    @property
    def effective_residuals(self) -> np.ndarray:
        return np.maximum(self.residuals, self.residual_floor)

    @property
    def effective_weights(self) -> np.ndarray:
        """Weights with inactive features zeroed; normalized to sum 1 when p = 0."""
        w = np.where(self.active, self.weights, 0.0)
        if self.p == 0 and self.n_active:
            total = w.sum()
            if total <= 0:
                raise ConfigError("p = 0 needs at least one positive weight among active features")
            w = w / total
        return w

    def without(self, *features: int) -> "DistanceConfig":
        active = self.active.copy()
        active[list(features)] = False
        return replace(self, active=active)

    def with_fit(self, residuals, weights) -> "DistanceConfig":
        return replace(self, residuals=residuals, weights=weights)


def _differences(A: np.ndarray, b: np.ndarray, nominal: np.ndarray) -> np.ndarray:
    diff = np.abs(A - b)
    if nominal.any():
        diff[..., nominal] = (diff[..., nominal] != 0).astype(float)
    return diff


def _weighted_sum(values: np.ndarray, w: np.ndarray) -> np.ndarray:
    # feature-by-feature accumulation: unlike a BLAS product, every row is
    # reduced in the same order, so equal rows give bitwise equal distances
    # and exact ties stay ties
    acc = values[..., 0] * w[0]
    for j in range(1, w.size):
        acc = acc + values[..., j] * w[j]
    return acc


def _combine(terms: np.ndarray, cfg: DistanceConfig) -> np.ndarray:
    """Collapse LK terms over the last (active-feature) axis."""
    w = cfg.effective_weights[cfg.active]
    if cfg.p == 0:
        return np.exp(_weighted_sum(np.log(terms), w) / cfg.n_active)
    return _weighted_sum(terms ** cfg.p, w) ** (1.0 / cfg.p)


def distances_to(X: np.ndarray, q: np.ndarray, cfg: DistanceConfig) -> np.ndarray:
    """Distances from encoded query ``q`` to every row of encoded ``X``.

    With no active feature every case is equally near (distance 1).
    """
    if X.shape[-1] != cfg.n_features or q.shape[-1] != cfg.n_features:
        raise DomainError("feature arity does not match the distance configuration")
    if cfg.n_active == 0:
        return np.ones(X.shape[0])
    act = cfg.active
    qa = q[act]
    if np.isnan(qa).any():
        raise DomainError("query is missing a value for an active feature")
    diff = _differences(X[:, act], qa, cfg.nominal[act])
    return _combine(lk_laplace(diff, cfg.effective_residuals[act]), cfg)


def pairwise_distances(A: np.ndarray, B: np.ndarray, cfg: DistanceConfig,
                       block_cells: int = 4_000_000) -> np.ndarray:
    """Distance matrix between encoded row sets, computed in row blocks."""
    out = np.empty((A.shape[0], B.shape[0]))
    if cfg.n_active == 0:
        out.fill(1.0)
        return out
    act = cfg.active
    Aa, Ba = A[:, act], B[:, act]
    if np.isnan(Aa).any() or np.isnan(Ba).any():
        raise DomainError("missing value in an active feature")
    b = cfg.effective_residuals[act]
    nominal = cfg.nominal[act]
    step = max(1, block_cells // max(1, B.shape[0] * Aa.shape[1]))
    for start in range(0, A.shape[0], step):
        blk = Aa[start:start + step, None, :]
        diff = _differences(blk, Ba[None, :, :], nominal)
        out[start:start + step] = _combine(lk_laplace(diff, b), cfg)
    return out


def combined_distance(x: Sequence, y: Sequence, cfg: DistanceConfig) -> float:
    """Distance between two raw value rows.

    p = 0: ``(prod_i d_LK(delta_i, r_i) ** w_i) ** (1 / |Xi|)`` with weights
    summing to one; p > 0: ``(sum_i w_i d_LK(delta_i, r_i) ** p) ** (1 / p)``.
    """
    if len(x) != cfg.n_features or len(y) != cfg.n_features:
        raise DomainError("value rows do not match the distance configuration arity")
    if cfg.n_active == 0:
        return 1.0
    specs = cfg.specs or tuple(FeatureSpec(f"f{i}") for i in range(cfg.n_features))
    idx = np.flatnonzero(cfg.active)
    deltas = np.array([feature_difference(specs[i], x[i], y[i]) for i in idx])
    terms = lk_laplace(deltas, cfg.effective_residuals[idx])
    return float(_combine(np.atleast_1d(terms), cfg))
