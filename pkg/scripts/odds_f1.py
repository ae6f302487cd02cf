"""Reproduce the similarity-conviction F1 column on locally supplied ODDS files.

The ODDS ``.mat`` files (keys ``X`` and ``y``) are not bundled. Place them
in a directory and run::

    python3 scripts/odds_f1.py --odds-dir ~/odds --seeds 5

Each dataset is trained on 75% of its inliers and tested on the remaining
inliers plus every outlier, with detection at conviction 0.7. The mean F1
over seeds is compared with the published value within ``--tol``.
Requires scipy (``pip install -e .[odds]``).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from surprisal_knn import Dataset, FeatureSpec
from surprisal_knn.evaluation import evaluate_anomaly

PUBLISHED_SC = {
    "wine": 0.18, "wbc": 0.65, "vowels": 0.75, "vertebral": 0.19, "thyroid": 0.64,
    "speech": 0.10, "shuttle": 0.60, "satimage-2": 0.94, "satellite": 0.75, "pima": 0.01,
    "optdigits": 0.00, "musk": 0.78, "mnist": 0.24, "lympho": 0.73, "letter": 0.43,
    "ionosphere": 0.85, "glass": 0.14, "cardio": 0.51, "breastw": 0.86, "arrhythmia": 0.51,
}


def load_mat(path: Path):
    from scipy.io import loadmat

    mat = loadmat(path)
    X = np.asarray(mat["X"], float)
    y = np.asarray(mat["y"]).ravel().astype(bool)
    specs = [FeatureSpec(f"x{i}") for i in range(X.shape[1])]
    return Dataset(specs, X.tolist()), y


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--odds-dir", required=True, type=Path)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--tol", type=float, default=0.15)
    ap.add_argument("--datasets", nargs="*", default=sorted(PUBLISHED_SC))
    args = ap.parse_args(argv)
    failures = 0
    found = 0
    for name in args.datasets:
        path = args.odds_dir / f"{name}.mat"
        if not path.exists():
            print(f"skip  {name:<12} (no {path.name})")
            continue
        found += 1
        dataset, flags = load_mat(path)
        report = evaluate_anomaly(dataset, flags, range(args.seeds))
        f1 = report.means["f1"]
        ok = abs(f1 - PUBLISHED_SC[name]) <= args.tol
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:<12} F1 {f1:.3f}  published {PUBLISHED_SC[name]:.2f}")
    if not found:
        print("no ODDS files found", file=sys.stderr)
        return 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
