"""Figures written next to CLI reports."""

from __future__ import annotations

import warnings

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def myrc():
    matplotlib.rc("axes", grid=True, labelsize=11)
    matplotlib.rc("xtick", labelsize=9)
    matplotlib.rc("ytick", labelsize=9)
    matplotlib.rc("legend", fontsize=9, frameon=False)
    matplotlib.rc("figure", figsize=(6.4, 4.0), dpi=100)
    matplotlib.rc("savefig", bbox="tight")


def _save(fig, path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def residual_history(history, path):
    """Max relative residual change per fitting iteration (log scale)."""
    myrc()
    fig, ax = plt.subplots()
    it = np.arange(1, len(history) + 1)
    ax.semilogy(it, np.maximum(history, 1e-16), "o-")
    ax.set_xlabel("iteration")
    ax.set_ylabel("max relative residual change")
    ax.set_xticks(it)
    return _save(fig, path)


def feature_weights(names, residuals, weights, path):
    myrc()
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.6))
    pos = np.arange(len(names))
    a1.bar(pos, residuals, color="tab:gray")
    a1.set_ylabel("residual")
    a2.bar(pos, weights, color="tab:blue")
    a2.set_ylabel("IRW weight")
    for ax in (a1, a2):
        ax.set_xticks(pos)
        ax.set_xticklabels(names, rotation=30, ha="right")
    return _save(fig, path)


def per_seed_metrics(rows, metrics, path):
    myrc()
    fig, ax = plt.subplots()
    seeds = [r["seed"] for r in rows]
    for m in metrics:
        vals = np.array([np.nan if r[m] is None else r[m] for r in rows], dtype=float)
        ax.plot(seeds, vals, "o-", ms=3, label=f"{m} (mean {np.nanmean(vals):.3f})")
    ax.set_xlabel("seed")
    ax.set_ylabel("score")
    ax.legend(loc="best")
    return _save(fig, path)


def conviction_histogram(scores, threshold, path, truth=None, label="conviction"):
    """Score histogram with the decision threshold; split by truth when given."""
    myrc()
    fig, ax = plt.subplots()
    scores = np.clip(np.asarray(scores, float), 0, 3)
    bins = np.linspace(0, 3, 61)
    if truth is None:
        ax.hist(scores, bins=bins, color="tab:blue")
    else:
        truth = np.asarray(truth, bool)
        ax.hist(scores[~truth], bins=bins, alpha=0.7, label="inlier")
        ax.hist(scores[truth], bins=bins, alpha=0.7, label="anomaly")
        ax.legend(loc="best")
    ax.axvline(threshold, color="k", ls="--", lw=1)
    ax.set_xlabel(f"{label} (clipped at 3)")
    ax.set_ylabel("count")
    return _save(fig, path)


def contribution_scatter(phi, pi_s, path):
    myrc()
    fig, ax = plt.subplots()
    ax.scatter(phi, pi_s, s=10)
    ax.axhline(1.0, color="k", lw=0.8)
    ax.set_xlabel("distance contribution")
    ax.set_ylabel("similarity conviction")
    return _save(fig, path)
