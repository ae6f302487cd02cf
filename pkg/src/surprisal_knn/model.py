"""A fitted dataset bundled with its residual fit: the one model behind every task."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .anomaly import DEFAULT_THRESHOLD, AnomalyVerdict, Mode, detect
from .conviction import (ConvictionReport, NeighborCache, familiarity_conviction,
                         familiarity_of_query, in_model_neighbors, similarity_conviction)
from .data_model import Dataset
from .distance import DistanceConfig
from .learners import Prediction, default_k, predict_with_explanation
from .residuals import ResidualFit, fit_residuals_iterative


@dataclass(eq=False)
class SurprisalModel:
    dataset: Dataset
    fit: ResidualFit
    k: int

    @classmethod
    def train(cls, dataset: Dataset, k: int | None = None, p: float = 0.0, max_iter: int = 10,
              tol: float = 0.01, seed: int = 0, sample: int | None = None,
              fit_k: int | None = None) -> "SurprisalModel":
        k = k or default_k(dataset.n_cases)
        fit = fit_residuals_iterative(dataset, fit_k or k, max_iter=max_iter, tol=tol,
                                      seed=seed, p=p, sample=sample)
        return cls(dataset, fit, k)

    def metric(self) -> DistanceConfig:
        """The fitted metric over the non-target features."""
        active = np.ones(self.dataset.n_features, bool)
        if self.dataset.target is not None:
            active[self.dataset.target] = False
        return self.fit.config(self.dataset, active)

    def _cache(self) -> NeighborCache:
        if getattr(self, "_nbr_cache", None) is None:
            self._nbr_cache = in_model_neighbors(self.dataset, self.k, self.metric())
        return self._nbr_cache

    def predict(self, query) -> Prediction:
        return predict_with_explanation(self.dataset, query, self.k, self.metric(),
                                        self.fit.loo_errors)

    def explain(self, query) -> ConvictionReport:
        cfg, cache = self.metric(), self._cache()
        rep = similarity_conviction(self.dataset, query, self.k, cfg, cache=cache)
        pi_f = familiarity_of_query(self.dataset, query, self.k, cfg, cache=cache)
        return ConvictionReport(rep.phi, rep.surprisal, rep.pi_s, rep.expected_phi, pi_f)

    def detect(self, queries: Sequence, mode=Mode.SIMILARITY,
               threshold: float = DEFAULT_THRESHOLD) -> list[AnomalyVerdict]:
        cfg, cache = self.metric(), self._cache()
        return [detect(self.dataset, q, mode, threshold, self.k, cfg, cache) for q in queries]

    def familiarity(self) -> np.ndarray:
        """Familiarity conviction of every in-model case."""
        return familiarity_conviction(self.dataset, self.metric(), self.k, cache=self._cache())

    def summary(self) -> dict:
        specs = self.dataset.specs
        return {
            "k": self.k,
            "p": self.fit.p,
            "iterations_run": self.fit.iterations_run,
            "converged": self.fit.converged,
            "history": list(self.fit.history),
            "features": [
                {"name": s.name, "kind": s.kind.value, "residual": float(r), "weight": float(w),
                 "target": i == self.dataset.target}
                for i, (s, r, w) in enumerate(zip(specs, self.fit.residuals, self.fit.weights))
            ],
        }
