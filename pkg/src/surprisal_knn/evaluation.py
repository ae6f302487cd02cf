"""Seeded train/test evaluation.

Splits use numpy's PCG64 generator, ``numpy.random.default_rng(seed)``,
and nothing else, so a seed fully determines a split. Classification
splits are stratified: labels are visited in sorted order, each label's
case ids (ascending) are shuffled with ``rng.permutation`` and the first
``round(split * n_label)`` go to training (at least one case on each side
when the label has two or more cases). Regression splits shuffle all ids
with one ``rng.permutation`` call and take the first ``round(split * N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .anomaly import DEFAULT_THRESHOLD, Mode
from .data_model import Dataset
from .exceptions import ConfigError
from .learners import default_k, predict
from .metrics import classification_metrics, f1_binary, regression_metrics
from .model import SurprisalModel


class Task(str, Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"
    ANOMALY = "anomaly"


METRIC_NAMES = {
    Task.CLASSIFICATION: ("accuracy", "precision", "recall", "mcc"),
    Task.REGRESSION: ("r2", "mae", "mse", "spearman"),
    Task.ANOMALY: ("f1", "precision", "recall"),
}


@dataclass
class EvalReport:
    task: Task
    seeds: list[int]
    rows: list[dict] = field(default_factory=list)

    @property
    def means(self) -> dict[str, float]:
        return {m: math.fsum(r[m] for r in self.rows) / len(self.rows)
                for m in METRIC_NAMES[self.task]}

    def to_dict(self) -> dict:
        return {"task": self.task.value, "seeds": list(self.seeds), "means": self.means,
                "rows": self.rows}


def _round_split(n: int, split: float) -> int:
    if n < 2:
        return n
    return min(n - 1, max(1, int(round(split * n))))


def stratified_split(labels: Sequence, split: float, rng: np.random.Generator):
    labels = np.asarray(labels, dtype=object)
    train, test = [], []
    for lab in sorted(set(labels.tolist())):
        ids = np.flatnonzero(labels == lab)
        ids = ids[rng.permutation(len(ids))]
        cut = _round_split(len(ids), split)
        train.extend(ids[:cut].tolist())
        test.extend(ids[cut:].tolist())
    return sorted(train), sorted(test)


def random_split(n: int, split: float, rng: np.random.Generator):
    ids = rng.permutation(n)
    cut = _round_split(n, split)
    return sorted(ids[:cut].tolist()), sorted(ids[cut:].tolist())


def task_for(dataset: Dataset) -> Task:
    if dataset.target is None:
        raise ConfigError("evaluation needs a target column")
    spec = dataset.specs[dataset.target]
    if spec.is_continuous:
        return Task.REGRESSION
    if spec.is_nominal:
        return Task.CLASSIFICATION
    raise ConfigError(f"ordinal target {spec.name!r} is not supported for evaluation")


def _check_split(split: float):
    if not 0 < split < 1:
        raise ConfigError(f"split fraction must be in (0, 1), got {split}")


def evaluate(dataset: Dataset, seeds: Sequence[int], split: float = 0.75, k: int | None = None,
             p: float = 0.0, max_iter: int = 10, tol: float = 0.01) -> EvalReport:
    """Per seed: split, fit residuals on the training part, score the held-out part."""
    _check_split(split)
    if not seeds:
        raise ConfigError("at least one seed is required")
    task = task_for(dataset)
    t = dataset.target
    report = EvalReport(task, list(seeds))
    for seed in seeds:
        rng = np.random.default_rng(seed)
        if task is Task.CLASSIFICATION:
            train_ids, test_ids = stratified_split(dataset.column(t), split, rng)
        else:
            train_ids, test_ids = random_split(dataset.n_cases, split, rng)
        if not test_ids:
            raise ConfigError("split leaves no test cases")
        train = dataset.subset(train_ids)
        model = SurprisalModel.train(train, k=k, p=p, max_iter=max_iter, tol=tol, seed=seed)
        truth, pred = [], []
        cfg = model.metric()
        for i in test_ids:
            values = list(dataset.cases[i].values)
            truth.append(values[t])
            values[t] = None
            pred.append(predict(train, values, model.k, cfg).value)
        scores = (classification_metrics if task is Task.CLASSIFICATION else regression_metrics)(
            truth, pred)
        row = {"seed": seed, "n_train": len(train_ids), "n_test": len(test_ids), "k": model.k,
               "iterations": model.fit.iterations_run}
        row.update(scores._asdict())
        report.rows.append(row)
    return report


def anomaly_split(is_outlier: Sequence[bool], split: float, rng: np.random.Generator):
    """Train on a share of the inliers only; test on the remaining inliers plus every outlier."""
    flags = np.asarray(is_outlier, bool)
    inliers = np.flatnonzero(~flags)
    inliers = inliers[rng.permutation(len(inliers))]
    cut = _round_split(len(inliers), split)
    train = sorted(inliers[:cut].tolist())
    test = sorted(inliers[cut:].tolist() + np.flatnonzero(flags).tolist())
    return train, test


def evaluate_anomaly(dataset: Dataset, is_outlier: Sequence[bool], seeds: Sequence[int],
                     split: float = 0.75, mode=Mode.SIMILARITY,
                     threshold: float = DEFAULT_THRESHOLD, k: int | None = None, p: float = 0.0,
                     max_iter: int = 10, tol: float = 0.01) -> EvalReport:
    """Inlier-trained detection protocol, scored by F1 on the outlier class.

    ``dataset`` must not contain the truth column as a feature.
    """
    _check_split(split)
    report = EvalReport(Task.ANOMALY, list(seeds))
    flags = np.asarray(is_outlier, bool)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        train_ids, test_ids = anomaly_split(flags, split, rng)
        model = SurprisalModel.train(dataset.subset(train_ids), k=k, p=p, max_iter=max_iter,
                                     tol=tol, seed=seed)
        verdicts = model.detect([dataset.cases[i].values for i in test_ids], mode, threshold)
        truth = flags[test_ids]
        flagged = np.array([v.is_anomaly for v in verdicts])
        tp = int(np.sum(truth & flagged))
        row = {"seed": seed, "n_train": len(train_ids), "n_test": len(test_ids), "k": model.k,
               "iterations": model.fit.iterations_run,
               "f1": f1_binary(truth, flagged),
               "precision": tp / int(flagged.sum()) if flagged.any() else 0.0,
               "recall": tp / int(truth.sum()) if truth.any() else 0.0}
        report.rows.append(row)
    return report


__all__ = ["EvalReport", "Task", "evaluate", "evaluate_anomaly", "stratified_split",
           "random_split", "anomaly_split", "default_k"]
