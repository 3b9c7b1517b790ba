import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmm.baselines import PcaKnn, knn_classify, knn_predict, pca_fit, pca_transform
from dmm.errors import ConfigError


def brute_knn(train, labels, query, neighbors, k):
    """Oracle: full stable sort by (distance, index), then vote."""
    dist = [(float(np.sum((p - query) ** 2)), j) for j, p in enumerate(train)]
    dist.sort()
    votes = np.zeros(k, dtype=int)
    for _, j in dist[:neighbors]:
        votes[labels[j]] += 1
    return int(np.argmax(votes))


class TestPca:
    def test_line_data(self, rng):
        direction = np.array([1.0, 2.0, -2.0]) / 3
        x = rng.normal(size=(200, 1)) * direction + [1, 1, 1]
        model = pca_fit(x, 1)
        assert abs(abs(model.components[:, 0] @ direction) - 1) < 1e-8

    def test_isotropic_variances(self):
        x = np.random.default_rng(8).normal(size=(5000, 3))
        ev = pca_fit(x, 3).explained_variance
        assert ev.max() / ev.min() < 1.2

    def test_full_basis_reconstruction(self, rng):
        x = rng.normal(size=(50, 4))
        model = pca_fit(x, 4)
        back = pca_transform(model, x) @ model.components.T + model.mean
        assert np.abs(back - x).max() < 1e-8

    def test_wide_data_matches_tall_route(self, rng):
        x = rng.normal(size=(6, 10))
        wide = pca_fit(x, 3)
        cov = np.cov(x, rowvar=False)
        w = np.sort(np.linalg.eigvalsh(cov))[::-1][:3]
        np.testing.assert_allclose(wide.explained_variance, w, atol=1e-10)
        np.testing.assert_allclose(wide.components.T @ wide.components, np.eye(3), atol=1e-10)

    def test_bad_rank(self, rng):
        with pytest.raises(ConfigError):
            pca_fit(rng.normal(size=(5, 3)), 4)


class TestKnn:
    def test_exact_match(self, rng):
        pts = rng.normal(size=(10, 2))
        labels = np.arange(10) % 3
        assert knn_classify(pts, labels, pts[4], neighbors=1) == labels[4]

    def test_majority(self):
        pts = np.array([[0.0], [0.1], [0.2], [5.0]])
        assert knn_classify(pts, [0, 0, 1, 1], [0.05], neighbors=3) == 0

    def test_distance_ties_prefer_lower_index(self):
        pts = np.array([[-1.0], [1.0]])
        assert knn_classify(pts, [1, 0], [0.0], neighbors=1) == 1

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 9))
    def test_brute_force_oracle(self, seed, neighbors):
        rng = np.random.default_rng(seed)
        train = rng.integers(0, 3, size=(30, 2)).astype(float)  # many exact ties
        labels = rng.integers(0, 3, size=30)
        queries = rng.integers(0, 3, size=(10, 2)).astype(float)
        got = knn_predict(train, labels, queries, neighbors, 3)
        for q, g in zip(queries, got):
            assert g == brute_knn(train, labels, q, neighbors, 3)

    def test_bad_neighbors(self, rng):
        with pytest.raises(ConfigError):
            knn_predict(rng.normal(size=(3, 1)), [0, 1, 0], [[0.0]], neighbors=4)


def test_pca_knn_separable(rng):
    a = rng.normal(size=(40, 5)) + 4
    b = rng.normal(size=(40, 5)) - 4
    x = np.vstack([a, b])
    y = np.repeat([0, 1], 40)
    clf = PcaKnn(r=2, neighbors=5).fit(x, y)
    assert (clf.predict(x) == y).all()
