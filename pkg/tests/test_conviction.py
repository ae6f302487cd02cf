import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from synth import grid, random_instance
from surprisal_knn import Dataset, DistanceConfig, FeatureSpec, SurprisalModel
from surprisal_knn.conviction import (CONVICTION_CAP, SurprisalContext, distance_contribution,
                                      familiarity_conviction, familiarity_from_phis,
                                      familiarity_of_query, idealized_divergences,
                                      in_model_neighbors, point_probabilities,
                                      residual_conviction, self_information,
                                      similarity_conviction)
from surprisal_knn.data_model import NeighborSet
from surprisal_knn.exceptions import ConfigError, DataError, DomainError


def xy(points):
    return Dataset([FeatureSpec("x"), FeatureSpec("y")], [tuple(map(float, p)) for p in points])


def ctx(r_norm):
    cfg = DistanceConfig.for_specs([FeatureSpec("x")])
    return SurprisalContext(r_norm, 3, cfg)


@pytest.mark.parametrize("d, phi", [((1, 1), 1.0), ((1, 3), 1.5), ((2,), 2.0)])
def test_distance_contribution(d, phi):
    assert distance_contribution(d) == pytest.approx(phi, rel=1e-15)


def test_distance_contribution_of_neighbor_set():
    nb = NeighborSet(None, ((4, 1.0), (2, 3.0)), 2)
    assert distance_contribution(nb) == pytest.approx(1.5)
    with pytest.raises(DataError):
        distance_contribution(NeighborSet(None, (), 2))
    with pytest.raises(DomainError):
        distance_contribution([0.0, 1.0])


def test_self_information():
    assert self_information(0.7, ctx(0.7)) == 1.0
    assert self_information(2.0, ctx(0.5)) == 4.0
    assert self_information(1e-300, ctx(1.0)) == pytest.approx(0.0)
    with pytest.raises(DomainError):
        ctx(0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1e3), st.floats(1e-6, 1e3))
def test_self_information_is_negative_log_probability(phi, r):
    p = math.exp(-phi / r)
    if p > 0:
        assert self_information(phi, ctx(r)) == pytest.approx(-math.log(p), rel=1e-12, abs=1e-12)


def test_context_norm():
    specs = [FeatureSpec("a"), FeatureSpec("b")]
    cfg = DistanceConfig.for_specs(specs, p=2.0, residuals=[3.0, 4.0])
    assert SurprisalContext.from_config(cfg, 3).r_norm == pytest.approx(5.0)
    cfg0 = DistanceConfig.for_specs(specs, p=0.0, residuals=[3.0, 4.0])
    assert SurprisalContext.from_config(cfg0, 3).r_norm == pytest.approx(7.0)


@pytest.mark.parametrize("phis, L", [((1, 1, 1, 1), (0.25,) * 4), ((3, 1), (0.75, 0.25)), ((2,), (1.0,))])
def test_point_probabilities(phis, L):
    assert np.allclose(point_probabilities(phis), L, rtol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=50))
def test_probabilities_and_divergences(phis):
    L = point_probabilities(phis)
    assert abs(L.sum() - 1) <= 1e-9 and np.all(L >= 0)
    D = idealized_divergences(L)
    assert np.all(D >= -1e-12)
    ref = familiarity_from_phis(phis)
    assert np.allclose(ref, oracles.familiarity(phis), rtol=1e-7)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-2, 1e2), min_size=2, max_size=30))
def test_most_distorting_case_has_lowest_familiarity(phis):
    D = idealized_divergences(point_probabilities(phis))
    pi = familiarity_from_phis(phis)
    if D.max() >= 1e-20:
        assert pi[np.argmax(D)] == pi.min()


def test_divergence_closed_form_matches_explicit_sum():
    rng = np.random.default_rng(0)
    for _ in range(100):
        phis = rng.uniform(0.1, 5, size=int(rng.integers(2, 50)))
        L = point_probabilities(phis)
        n = len(L)
        for j in range(n):
            Lj = L.copy()
            Lj[j] = 1 / n
            Lj /= Lj.sum()
            assert idealized_divergences(L)[j] == pytest.approx(oracles.kl(L, Lj), rel=1e-9, abs=1e-15)


def test_symmetric_configuration_gives_unit_familiarity():
    # cube corners: every case sees the same neighbor distances under the per-axis metric
    corners = [(x, y, z) for x in (0.0, 2.0) for y in (0.0, 2.0) for z in (0.0, 2.0)]
    ds = Dataset([FeatureSpec("x"), FeatureSpec("y"), FeatureSpec("z")], corners)
    cfg = DistanceConfig.for_specs(ds.specs, residuals=[0.3, 0.3, 0.3])
    assert np.array_equal(familiarity_conviction(ds, cfg, 3), np.ones(8))


def test_near_duplicate_in_grid_is_unfamiliar():
    pts = [(x, y) for x in range(5) for y in range(5)] + [(0.01, 0.0)]
    ds = xy(pts)
    cfg = DistanceConfig.for_specs(ds.specs, residuals=[0.5, 0.5])
    pi = familiarity_conviction(ds, cfg, 3)
    dist = oracles.metric_from(cfg)
    ref = oracles.familiarity(oracles.in_model_phis([c.values for c in ds.cases], 3, dist))
    assert np.allclose(pi, ref, rtol=1e-7)
    assert pi[-1] < 1


def test_far_outlier_is_unfamiliar():
    rng = np.random.default_rng(11)
    pts = np.vstack([rng.normal(size=(99, 2)), [[6.0, 0.0]]])
    model = SurprisalModel.train(xy(pts))
    pi = model.familiarity()
    dist = oracles.metric_from(model.metric())
    ref = oracles.familiarity(oracles.in_model_phis([c.values for c in model.dataset.cases],
                                                    model.k, dist))
    assert np.allclose(pi, ref, rtol=1e-7)
    assert pi[-1] < 1


def test_duplicate_of_dense_member_is_similar():
    rng = np.random.default_rng(0)
    X = 0.1 * rng.normal(size=(50, 2))
    model = SurprisalModel.train(xy(X))
    member = int(np.argmin(np.linalg.norm(X - X.mean(axis=0), axis=1)))
    query = list(model.dataset.cases[member].values)
    rep = similarity_conviction(model.dataset, query, model.k, model.metric())
    _, _, ref = oracles.similarity([c.values for c in model.dataset.cases], query, model.k,
                                   oracles.metric_from(model.metric()))
    assert rep.pi_s == pytest.approx(ref, rel=1e-9)
    assert rep.pi_s > 1


@pytest.mark.parametrize("seed", range(5))
def test_ten_sigma_query_is_dissimilar(seed):
    rng = np.random.default_rng(seed)
    model = SurprisalModel.train(xy(rng.normal(size=(200, 2))))
    rep = model.explain([10.0, 0.0])
    assert rep.pi_s < 0.7
    assert rep.pi_s == rep.expected_phi / rep.phi


def test_grid_interior_near_one():
    model = SurprisalModel.train(grid(20))
    interior = [i for i in range(400) if 0 < i // 20 < 19 and 0 < i % 20 < 19]
    cache = model._cache()
    for i in interior:
        rep = similarity_conviction(model.dataset, i, model.k, model.metric(), cache=cache)
        assert 0.6 <= rep.pi_s <= 1.6


def test_similarity_needs_k_plus_one_cases():
    ds = xy([(0, 0), (1, 1), (2, 2)])
    cfg = DistanceConfig.for_specs(ds.specs)
    with pytest.raises(DataError, match="k \\+ 1 = 4"):
        similarity_conviction(ds, [0.0, 0.0], 3, cfg)


def test_in_model_query_excludes_itself():
    rng = np.random.default_rng(3)
    ds = xy(rng.normal(size=(20, 2)))
    cfg = DistanceConfig.for_specs(ds.specs, residuals=[0.5, 0.5])
    rows = [c.values for c in ds.cases]
    rep = similarity_conviction(ds, 4, 3, cfg)
    ref = oracles.similarity(rows, rows[4], 3, oracles.metric_from(cfg), exclude=4)
    assert (rep.phi, rep.expected_phi, rep.pi_s) == pytest.approx(ref, rel=1e-12)


def test_pi_s_decreases_with_phi_at_fixed_expectation():
    rng = np.random.default_rng(5)
    ds = xy(rng.normal(size=(30, 2)))
    cfg = DistanceConfig.for_specs(ds.specs, residuals=[0.5, 0.5])
    cache = in_model_neighbors(ds, 3, cfg)
    # moving the query straight away from a lone far neighbor set keeps the neighbors fixed
    far = [20.0, 0.0]
    a = similarity_conviction(ds, far, 3, cfg, cache=cache)
    b = similarity_conviction(ds, [21.0, 0.0], 3, cfg, cache=cache)
    assert a.expected_phi == b.expected_phi and b.phi > a.phi and b.pi_s < a.pi_s


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_convictions_match_oracle(seed):
    rng = np.random.default_rng(seed)
    full, rows, *_ , cfg = random_instance(rng)
    if full.n_cases < 5:
        return
    ds = full.subset(range(full.n_cases - 1))
    rows, query = rows[:-1], rows[-1]
    k = int(rng.integers(1, ds.n_cases))
    dist = oracles.metric_from(cfg)
    rep = similarity_conviction(ds, list(query), k, cfg)
    assert (rep.phi, rep.expected_phi, rep.pi_s) == pytest.approx(
        oracles.similarity(rows, query, k, dist), rel=1e-9)
    assert np.allclose(familiarity_conviction(ds, cfg, k),
                       oracles.familiarity(oracles.in_model_phis(rows, k, dist)), rtol=1e-7)
    ref_q = oracles.familiarity(oracles.in_model_phis(rows + [query], k, dist))[-1]
    assert familiarity_of_query(ds, list(query), k, cfg) == pytest.approx(ref_q, rel=1e-7)


def test_residual_conviction_examples():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 2))
    ds = xy(X)
    cfg = DistanceConfig.for_specs(ds.specs, residuals=[0.5, 0.5], residual_floor=1e-9)
    errors = np.full((30, 2), 0.25)
    q = [0.1, 0.0]
    # prediction 0.0 against observed y = 0.0: floored denominator, capped result
    assert residual_conviction(ds, q, 1, 0.0, 5, cfg, errors) == CONVICTION_CAP
    assert residual_conviction(ds, q, 1, 0.25, 5, cfg, errors) == pytest.approx(1.0)
    assert residual_conviction(ds, q, 1, 1.0, 5, cfg, errors) == pytest.approx(0.25)
    assert residual_conviction(ds, [0.1, None], 1, 1.0, 5, cfg, errors,
                               observed_error=0.5) == pytest.approx(0.5)
    with pytest.raises(ConfigError, match="fit"):
        residual_conviction(ds, q, 1, 0.0, 5, cfg, None)
    with pytest.raises(ConfigError):
        residual_conviction(ds, [0.1, None], 1, 0.0, 5, cfg, errors)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_residual_conviction_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    full, rows, kinds, *_ , cfg = random_instance(rng)
    if full.n_cases < 4 or len(kinds) < 2:
        return
    ds = full.subset(range(full.n_cases - 1))
    query = rows[-1]
    j = int(np.flatnonzero([kind == "continuous" for kind in kinds])[0])
    k = int(rng.integers(1, ds.n_cases))
    errors = rng.uniform(0, 2, size=(ds.n_cases, ds.n_features))
    pred = float(rng.normal())
    got = residual_conviction(ds, list(query), j, pred, k, cfg, errors)
    nb = oracles.knn(rows[:-1], query, k, oracles.metric_from(cfg.without(j)))
    ref = oracles.residual_conviction([errors[i, j] for i, _ in nb], abs(query[j] - pred),
                                      float(cfg.residual_floor[j]))
    assert got == pytest.approx(ref, rel=1e-12)
