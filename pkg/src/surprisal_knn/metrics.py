"""Evaluation metrics for classification, regression and anomaly flags."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np


class ClassificationScores(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    mcc: float


class RegressionScores(NamedTuple):
    r2: float
    mae: float
    mse: float
    spearman: float


def _paired(truth, predicted):
    truth, predicted = list(truth), list(predicted)
    if len(truth) != len(predicted):
        raise ValueError(f"length mismatch: {len(truth)} truths vs {len(predicted)} predictions")
    return truth, predicted


def confusion_matrix(truth, predicted, labels=None):
    truth, predicted = _paired(truth, predicted)
    labels = sorted(set(truth) | set(predicted)) if labels is None else list(labels)
    index = {lab: i for i, lab in enumerate(labels)}
    C = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        C[index[t], index[p]] += 1
    return C, labels


def classification_metrics(truth: Sequence, predicted: Sequence) -> ClassificationScores:
    """Accuracy, macro precision, macro recall and multiclass MCC.

    Macro averages run over the classes present in ``truth``; a class that
    is never predicted has precision 0. MCC uses the K-class correlation
    form and is 0 when undefined.
    """
    truth, predicted = _paired(truth, predicted)
    if not truth:
        raise ValueError("need at least one observation")
    C, labels = confusion_matrix(truth, predicted)
    n = C.sum()
    correct = np.trace(C)
    t_sum, p_sum = C.sum(axis=1), C.sum(axis=0)
    present = t_sum > 0
    tp = np.diag(C)
    with np.errstate(divide="ignore", invalid="ignore"):
        prec = np.where(p_sum > 0, tp / p_sum, 0.0)
    rec = tp[present] / t_sum[present]
    cov_tp = float(correct) * n - float(np.dot(t_sum, p_sum))
    cov_pp = float(n) ** 2 - float(np.dot(p_sum, p_sum))
    cov_tt = float(n) ** 2 - float(np.dot(t_sum, t_sum))
    mcc = 0.0 if cov_pp * cov_tt == 0 else cov_tp / math.sqrt(cov_pp * cov_tt)
    return ClassificationScores(float(correct / n), float(prec[present].mean()),
                                float(rec.mean()), mcc)


def average_ranks(x) -> np.ndarray:
    """1-based ranks with ties sharing their mean rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    xs = x[order]
    start = 0
    for end in range(1, len(x) + 1):
        if end == len(x) or xs[end] != xs[start]:
            ranks[order[start:end]] = 0.5 * (start + end - 1) + 1.0
            start = end
    return ranks


def _pearson(a, b) -> float:
    a, b = a - a.mean(), b - b.mean()
    denom = math.sqrt(np.dot(a, a) * np.dot(b, b))
    return float(np.dot(a, b) / denom) if denom > 0 else math.nan


def regression_metrics(truth: Sequence[float], predicted: Sequence[float]) -> RegressionScores:
    """R^2, MAE, MSE and Spearman rank correlation.

    R^2 is NaN for a constant truth vector, Spearman is NaN when either
    side is constant.
    """
    truth, predicted = _paired(truth, predicted)
    if len(truth) < 2:
        raise ValueError("need at least two observations")
    y, yh = np.asarray(truth, float), np.asarray(predicted, float)
    res = y - yh
    ss_res = float(np.dot(res, res))
    dev = y - y.mean()
    ss_tot = float(np.dot(dev, dev))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else math.nan
    return RegressionScores(r2, float(np.mean(np.abs(res))), ss_res / len(y),
                            _pearson(average_ranks(y), average_ranks(yh)))


def f1_binary(truth: Sequence[bool], predicted: Sequence[bool]) -> float:
    """F1 of the positive (anomalous) class; 0 when precision + recall is 0."""
    truth, predicted = _paired(truth, predicted)
    t, p = np.asarray(truth, bool), np.asarray(predicted, bool)
    tp = int(np.sum(t & p))
    fp = int(np.sum(~t & p))
    fn = int(np.sum(t & ~p))
    if tp == 0:
        return 0.0
    precision, recall = tp / (tp + fp), tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)
