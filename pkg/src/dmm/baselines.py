"""PCA + k-nearest-neighbour baseline on normalized one-hot vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .linalg import fix_signs

__all__ = ["PcaModel", "pca_fit", "pca_transform", "knn_classify", "knn_predict", "PcaKnn"]

_CHUNK = 1 << 22


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def r(self) -> int:
        return self.components.shape[1]


def pca_fit(vectors, r: int) -> PcaModel:
    """Principal directions of mean-centred rows.

    Eigendecomposes ``Xc^T Xc`` when ``d <= n`` and ``Xc Xc^T`` otherwise.
    """
    x = np.asarray(vectors, dtype=float)
    n, d = x.shape
    if n < 2:
        raise ConfigError("PCA needs at least two samples")
    if not 1 <= r <= min(n, d):
        raise ConfigError(f"r={r} outside [1, {min(n, d)}]")
    mean = x.mean(axis=0)
    xc = x - mean
    if d <= n:
        w, v = np.linalg.eigh(xc.T @ xc)
        order = np.argsort(-w, kind="stable")[:r]
        w, comps = w[order], v[:, order]
    else:
        w, v = np.linalg.eigh(xc @ xc.T)
        order = np.argsort(-w, kind="stable")[:r]
        w, v = w[order], v[:, order]
        comps = xc.T @ v / np.sqrt(np.maximum(w, 1e-300))
    comps = fix_signs(comps)
    return PcaModel(mean, comps, np.maximum(w, 0.0) / (n - 1))


def pca_transform(model: PcaModel, vectors) -> np.ndarray:
    return (np.asarray(vectors, dtype=float) - model.mean) @ model.components


def _sq_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0], b.shape[0]))
    for j in range(a.shape[1]):
        diff = a[:, j, None] - b[None, :, j]
        out += diff * diff
    return out


def knn_predict(train_points, train_labels, queries, neighbors: int = 15, k: int | None = None):
    """Majority vote among the nearest training points.

    Distance ties prefer the lower training index; vote ties the lower label.
    """
    pts = np.asarray(train_points, dtype=float)
    labels = np.asarray(train_labels, dtype=np.int64)
    q = np.asarray(queries, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if q.ndim == 1:
        q = q[:, None]
    n = pts.shape[0]
    if n == 0:
        raise ConfigError("empty training set")
    if not 1 <= neighbors <= n:
        raise ConfigError(f"neighbors={neighbors} outside [1, {n}]")
    k = int(labels.max()) + 1 if k is None else k
    out = np.empty(q.shape[0], dtype=np.int64)
    step = max(1, _CHUNK // n)
    for start in range(0, q.shape[0], step):
        dist = _sq_dist(q[start:start + step], pts)
        if neighbors < n:
            kth = np.partition(dist, neighbors - 1, axis=1)[:, neighbors - 1]
        else:
            kth = dist.max(axis=1)
        for row in range(dist.shape[0]):
            cand = np.flatnonzero(dist[row] <= kth[row])
            nearest = cand[np.lexsort((cand, dist[row, cand]))[:neighbors]]
            votes = np.bincount(labels[nearest], minlength=k)
            out[start + row] = int(np.argmax(votes))
    return out


def knn_classify(train_points, train_labels, query, neighbors: int = 15) -> int:
    return int(knn_predict(train_points, train_labels, np.atleast_2d(query), neighbors)[0])


class PcaKnn:
    """PCA to ``r`` components followed by ``neighbors``-NN voting."""

    def __init__(self, r: int, neighbors: int = 15):
        self.r = r
        self.neighbors = neighbors

    def fit(self, vectors, labels, k: int | None = None):
        self.pca_ = pca_fit(vectors, self.r)
        self.train_ = pca_transform(self.pca_, vectors)
        self.labels_ = np.asarray(labels, dtype=np.int64)
        self.k_ = int(self.labels_.max()) + 1 if k is None else k
        return self

    def predict(self, vectors) -> np.ndarray:
        z = pca_transform(self.pca_, vectors)
        return knn_predict(self.train_, self.labels_, z, self.neighbors, self.k_)
