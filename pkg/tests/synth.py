"""Seeded synthetic datasets shared by the test modules."""

from __future__ import annotations

import numpy as np

from surprisal_knn import Dataset, DistanceConfig, FeatureKind, FeatureSpec

KINDS = ("continuous", "nominal", "ordinal")


def informative_noise(seed: int, n: int = 200) -> Dataset:
    """Two noisy copies of a latent variable plus one pure-noise column."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n)
    x1 = z + 0.1 * rng.normal(size=n)
    x2 = z + 0.1 * rng.normal(size=n)
    x3 = rng.normal(size=n)
    return Dataset([FeatureSpec("x1"), FeatureSpec("x2"), FeatureSpec("noise")],
                   np.column_stack([x1, x2, x3]).tolist())


def gaussian_mixture(seed: int, dim: int = 2, n_in: int = 300, n_out: int = 30,
                     shell=(8.0, 9.0)):
    """Unit-Gaussian inliers plus outliers with uniform direction and radius in ``shell``."""
    rng = np.random.default_rng(seed)
    inliers = rng.normal(size=(n_in, dim))
    u = rng.normal(size=(n_out, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    outliers = u * rng.uniform(*shell, size=(n_out, 1))
    X = np.vstack([inliers, outliers])
    flags = np.r_[np.zeros(n_in, bool), np.ones(n_out, bool)]
    return Dataset([FeatureSpec(f"x{i}") for i in range(dim)], X.tolist()), flags


def grid(n: int, spacing: float = 1.0) -> Dataset:
    xs = np.arange(n) * spacing
    pts = [(float(x), float(y)) for x in xs for y in xs]
    return Dataset([FeatureSpec("x"), FeatureSpec("y")], pts)


def random_instance(rng: np.random.Generator, max_n: int = 40, max_f: int = 5, mixed=True):
    """Random dataset with matching raw rows, metric and kind metadata for the oracles."""
    n = int(rng.integers(3, max_n + 1))
    m = int(rng.integers(1, max_f + 1))
    kinds = ["continuous"] + [str(rng.choice(KINDS)) if mixed else "continuous"
                              for _ in range(m - 1)]
    rng.shuffle(kinds)
    specs, cols, cats = [], [], []
    for j, kind in enumerate(kinds):
        if kind == "continuous":
            cols.append(rng.normal(size=n) * rng.uniform(0.2, 5.0))
            specs.append(FeatureSpec(f"f{j}"))
            cats.append(())
        else:
            c = tuple(f"c{t}" for t in range(int(rng.integers(2, 5))))
            cols.append(rng.choice(c, size=n))
            specs.append(FeatureSpec(f"f{j}", FeatureKind(kind), c))
            cats.append(c)
    rows = [tuple(float(col[i]) if kinds[j] == "continuous" else str(col[i])
                  for j, col in enumerate(cols)) for i in range(n)]
    p = float(rng.choice([0.0, 0.5, 1.0, 2.0]))
    residuals = rng.uniform(0.1, 3.0, size=m)
    weights = rng.uniform(0.1, 2.0, size=m)
    cfg = DistanceConfig.for_specs(specs, p=p, residuals=residuals, weights=weights)
    return Dataset(specs, rows), rows, kinds, cats, cfg
