import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arsk.exceptions import DegenerateWeightsError, InvalidParameterError
from arsk.metrics import cer
from arsk.model import ClusterModel, ErrorMatrix, PenaltySpec, WeightVector, validate
from arsk.solver import (
    ArskOptions,
    bcss,
    e_update_objective,
    fit,
    full_objective,
    init_error_matrix,
    restore_error_matrix,
    robust_bcss,
    robust_bcss_all,
    update_error_matrix,
    update_error_matrix_weighted,
    update_weights,
)
from arsk.wkmeans import KMeansOptions, kmeans_weighted
from conftest import blobs


def bcss_double_sum(x, labels):
    """Pairwise form over unordered pairs: (1/n) sum_{i<i'} d^2 - sum_k (1/n_k) sum_{i<i' in k} d^2."""
    x = np.asarray(x, float)
    labels = np.asarray(labels)
    d2 = (x[:, None] - x[None, :]) ** 2
    total = np.triu(d2, 1).sum() / x.size
    within = 0.0
    for k in np.unique(labels):
        idx = labels == k
        within += np.triu(d2[np.ix_(idx, idx)], 1).sum() / idx.sum()
    return total - within


def random_model(rng, n, K):
    labels = np.concatenate([np.arange(1, K + 1), rng.integers(1, K + 1, n - K)])
    return ClusterModel(labels, np.zeros((K, 1)))


class TestBcss:
    def test_examples(self):
        m = ClusterModel([1, 1, 2, 2], np.zeros((2, 1)))
        assert bcss([3.0, 3.0, 3.0, 3.0], m) == 0.0
        assert bcss([0.0, 0.0, 10.0, 10.0], m) == pytest.approx(100.0)
        assert bcss_double_sum([0.0, 0.0, 10.0, 10.0], m.labels) == pytest.approx(100.0)

    def test_double_sum_oracle(self, rng):
        for _ in range(50):
            n = int(rng.integers(3, 30))
            m = random_model(rng, n, int(rng.integers(1, min(n, 5) + 1)))
            x = rng.normal(size=n) * 3
            assert bcss(x, m) == pytest.approx(bcss_double_sum(x, m.labels), abs=1e-8)
            assert bcss(x, m) >= -1e-9

    def test_robust(self, rng):
        m = random_model(rng, 12, 3)
        x = rng.normal(size=12)
        assert robust_bcss(x, np.zeros(12), m) == bcss(x, m)
        assert robust_bcss(x, x, m) == pytest.approx(0.0, abs=1e-12)
        clean = x.copy()
        x[4] += 25.0
        e = np.zeros(12)
        e[4] = 25.0
        assert robust_bcss(x, e, m) == pytest.approx(bcss(clean, m), abs=1e-10)

    def test_all_columns(self, rng):
        m = random_model(rng, 20, 3)
        X = rng.normal(size=(20, 4))
        E = rng.normal(size=(20, 4))
        got = robust_bcss_all(X, E, m)
        want = [robust_bcss(X[:, j], E[:, j], m) for j in range(4)]
        np.testing.assert_allclose(got, want, atol=1e-10)


def objective_oracle(X, labels, E, w, pE, pw):
    def pen(spec, v):
        lam, a = spec.lam, spec.a
        if spec.kind == "lasso":
            return lam * v
        if v <= lam:
            return lam * v
        if v <= a * lam:
            return -(v * v - 2 * a * lam * v + lam * lam) / (2 * (a - 1))
        return (a + 1) * lam * lam / 2

    A = X - E
    total = sum(w[j] * bcss_double_sum(A[:, j], labels) for j in range(X.shape[1]))
    total -= sum(pen(pE, np.linalg.norm(E[i])) for i in range(X.shape[0]))
    total -= sum(pen(pw, w[j]) + 0.5 * w[j] ** 2 for j in range(X.shape[1]))
    return total


class TestObjective:
    def test_uniform_reduction(self, rng):
        X = rng.normal(size=(15, 4))
        m = random_model(rng, 15, 3)
        w = np.full(4, 0.5)
        got = full_objective(X, m, np.zeros_like(X), w, PenaltySpec("lasso", 1e12), PenaltySpec("lasso", 0))
        q = [bcss(X[:, j], m) for j in range(4)]
        assert got == pytest.approx(sum(q) / 2 - 0.5, abs=1e-10)

    def test_degenerate_weights(self, rng):
        X = rng.normal(size=(6, 2))
        E = np.zeros_like(X)
        E[1] = [3.0, 4.0]
        m = random_model(rng, 6, 2)
        got = full_objective(X, m, E, np.zeros(2), PenaltySpec("lasso", 2.0), PenaltySpec("lasso", 1))
        assert got == -10.0

    def test_oracle(self, rng):
        for s in range(20):
            n, p = 12, 3
            X = rng.normal(size=(n, p))
            E = rng.normal(size=(n, p)) * (rng.random((n, 1)) < 0.3)
            w = np.abs(rng.normal(size=p))
            w /= np.linalg.norm(w)
            m = random_model(rng, n, 3)
            kind = "scad" if s % 2 else "lasso"
            pE, pw = PenaltySpec(kind, 0.7), PenaltySpec(kind, 0.2)
            got = full_objective(X, m, E, w, pE, pw)
            assert got == pytest.approx(objective_oracle(X, m.labels, E, w, pE, pw), abs=1e-8)


class TestInit:
    def test_extremes(self, rng):
        X = rng.normal(size=(7, 3))
        assert not init_error_matrix(X, 0.0).values.any()
        np.testing.assert_array_equal(init_error_matrix(X, 1.0).values, X)

    def test_hand_ranked(self):
        # grand mean is 0; distances 1, 2, 3, 4 (rows listed out of order)
        X = np.array([[3.0, 0.0], [-1.0, 0.0], [0.0, 4.0], [0.0, -2.0]])
        X = X - X.mean(axis=0)
        d = np.linalg.norm(X, axis=1)
        E = init_error_matrix(X, 0.5).values
        far = np.argsort(-d)[:2]
        np.testing.assert_array_equal(E[far], X[far])
        assert not np.delete(E, far, axis=0).any()

    def test_count(self, rng):
        X = rng.normal(size=(10, 2))
        assert init_error_matrix(X, 0.8).active_rows.size == 8


class TestErrorUpdate:
    @pytest.mark.parametrize("kind", ["lasso", "scad"])
    def test_monotone(self, rng, kind):
        for s in range(20):
            X, labels = blobs(rng, [[0, 0, 0], [4, 4, 0]], 15, scale=1.0)
            X[rng.choice(30, 3, replace=False)] += rng.normal(scale=8, size=(3, 3))
            m = ClusterModel(labels, np.zeros((2, 3)))
            spec = PenaltySpec(kind, float(rng.uniform(0.5, 4)))
            E0 = init_error_matrix(X, 0.8).values
            E, trace, _ = update_error_matrix_weighted(X, m, E0, spec, tol=1e-12, max_iter=200)
            assert np.all(np.diff(trace) <= 1e-9 * max(1.0, abs(trace[0])))
            assert trace[-1] == pytest.approx(e_update_objective(X, E, m, spec), rel=1e-10)

    def test_huge_lambda(self, rng):
        X, labels = blobs(rng, [[0, 0], [5, 5]], 10)
        m = ClusterModel(labels, np.zeros((2, 2)))
        E, _ = update_error_matrix(X, m, WeightVector.uniform(2), X.copy(), PenaltySpec("lasso", 1e12))
        assert not E.values.any()

    def test_zero_lambda(self, rng):
        X, labels = blobs(rng, [[0, 0], [5, 5]], 10)
        m = ClusterModel(labels, np.zeros((2, 2)))
        E, trace, _ = update_error_matrix_weighted(X, m, np.zeros_like(X), PenaltySpec("lasso", 0.0))
        A = X - E
        means = np.array([A[labels == k].mean(axis=0) for k in (1, 2)])
        assert np.abs(A - means[labels - 1]).max() < 1e-8

    @pytest.mark.parametrize("kind", ["lasso", "scad"])
    def test_planted_row(self, rng, kind):
        X, labels = blobs(rng, [[0, 0, 0], [6, 6, 6]], 15, scale=0.5)
        X[7] += [20.0, -20.0, 20.0]
        m = ClusterModel(labels, np.zeros((2, 3)))
        E, _, _ = update_error_matrix_weighted(X, m, np.zeros_like(X), PenaltySpec(kind, 5.0))
        assert ErrorMatrix(E).active_rows.tolist() == [7]


class TestRestoreAndWeights:
    def test_restore(self, rng):
        E = rng.normal(size=(5, 3))
        np.testing.assert_array_equal(restore_error_matrix(E, np.ones(3)).values, E)
        out = restore_error_matrix(E, np.array([0.0, 0.25, 1.0])).values
        np.testing.assert_array_equal(out[:, 0], E[:, 0])
        np.testing.assert_allclose(out[:, 1], 2 * E[:, 1])
        lin = restore_error_matrix(E, np.array([0.0, 0.25, 1.0]), mode="linear").values
        np.testing.assert_allclose(lin[:, 1], 4 * E[:, 1])

    def test_update_weights(self):
        q = np.array([10.0, 1.0, 1.0])
        np.testing.assert_allclose(update_weights(q, PenaltySpec("lasso", 0)).weights, q / np.linalg.norm(q))
        np.testing.assert_array_equal(update_weights(q, PenaltySpec("lasso", 2.0)).weights, [1, 0, 0])
        with pytest.raises(DegenerateWeightsError, match="lambda2"):
            update_weights(q, PenaltySpec("lasso", 11.0))

    @given(st.lists(st.floats(0, 1e4), min_size=1, max_size=20), st.floats(0, 50))
    def test_unit_norm(self, q, lam):
        try:
            w = update_weights(np.array(q), PenaltySpec("scad", lam)).weights
        except DegenerateWeightsError:
            return
        assert abs(np.linalg.norm(w) - 1) < 1e-10
        assert np.all(w >= 0)


class TestFit:
    def test_reduction_law(self, clean_dataset):
        X = clean_dataset.X.values
        opts = ArskOptions(K=3, seed=5).with_lambdas(1e12, 0.0)
        res = fit(X, opts)
        assert not res.errors.values.any()
        assert res.outlier_indices == frozenset() or len(res.outlier_indices) == 0

    def test_clean_recovery(self, clean_dataset):
        res = fit(clean_dataset.X, ArskOptions(K=3).with_lambdas(20.0, 100.0))
        assert cer(clean_dataset.true_labels, res.labels) <= 0.08
        assert validate(res) == []

    def test_contaminated_detection(self, contaminated_dataset):
        ds = contaminated_dataset
        res = fit(ds.X, ArskOptions(K=3).with_lambdas(2.0, 100.0))
        flagged = set(np.flatnonzero(ds.outlier_flags).tolist())
        assert flagged <= set(res.outlier_indices)
        assert len(res.outlier_indices) <= len(flagged) + 5
        assert validate(res) == []

    def test_determinism(self, contaminated_dataset):
        opts = ArskOptions(K=3, seed=4).with_lambdas(15.0, 100.0)
        assert fit(contaminated_dataset.X, opts) == fit(contaminated_dataset.X, opts)

    def test_support_and_bcss_nonnegative(self, contaminated_dataset):
        res = fit(contaminated_dataset.X, ArskOptions(K=3, penalty_E=PenaltySpec("scad", 10.0)))
        rows = np.flatnonzero(np.linalg.norm(res.errors.values, axis=1) > 0)
        assert sorted(res.outlier_indices) == rows.tolist()
        q = robust_bcss_all(contaminated_dataset.X.values, res.errors.values, res.model)
        assert q.min() >= -1e-9
        w = res.weights.weights
        assert np.all(w >= 0) and abs(np.linalg.norm(w) - 1) < 1e-10

    def test_errors(self, rng):
        X = rng.normal(size=(4, 2))
        with pytest.raises(InvalidParameterError):
            fit(X, ArskOptions(K=5))
        with pytest.raises(DegenerateWeightsError):
            fit(X, ArskOptions(K=2).with_lambdas(1.0, 1e9))
        with pytest.raises(InvalidParameterError):
            ArskOptions(outer_tol=0)
        with pytest.raises(InvalidParameterError):
            ArskOptions(restore_mode="cube")


def test_reduction_matches_weighted_kmeans(clean_dataset):
    X = clean_dataset.X.values
    opts = ArskOptions(K=3, seed=8).with_lambdas(1e12, 0.0)
    res = fit(X, opts)
    # rerun the final clustering step with the converged weights and the same seed stream
    from arsk._rng import child_seed

    km = kmeans_weighted(X, res.weights.weights, 3, opts.kmeans.reseeded(child_seed(8, "outer", res.outer_iterations)))
    assert cer(res.labels, km.model.labels) == 0.0
