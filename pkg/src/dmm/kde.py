"""Class-conditional kernel density estimates in latent space with ML / MAP decisions.

All densities are handled as log-scores; the kernel sum over a cloud is a
log-sum-exp so that far-away queries do not underflow to zero.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError

__all__ = [
    "H_MIN",
    "KERNELS",
    "DegenerateBandwidthWarning",
    "KdeModel",
    "bandwidth_scott",
    "bandwidth_cv",
    "fit_kde",
    "kde_log_density",
    "log_densities",
    "classify",
    "predict",
]

H_MIN = 1e-3
KERNELS = ("gaussian", "epanechnikov")
TIE_TOL = 1e-12
_CHUNK = 1 << 22  # pairwise entries per block


class DegenerateBandwidthWarning(UserWarning):
    """A cloud had too little spread for the bandwidth rule; ``H_MIN`` was used."""


def _unit_ball_volume(r: int) -> float:
    return math.pi ** (r / 2) / math.gamma(r / 2 + 1)


def _log_kernel(sq_dist: np.ndarray, kernel: str, r: int) -> np.ndarray:
    """``log K(u)`` from ``||u||^2``."""
    if kernel == "gaussian":
        return -0.5 * r * math.log(2 * math.pi) - 0.5 * sq_dist
    if kernel == "epanechnikov":
        log_norm = math.log((r + 2) / (2 * _unit_ball_volume(r)))
        inside = 1.0 - sq_dist
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(inside > 0, log_norm + np.log(np.where(inside > 0, inside, 1.0)), -np.inf)
    raise ConfigError(f"unknown kernel {kernel!r}")


def _as_cloud(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def bandwidth_scott(cloud, h_min: float = H_MIN) -> float:
    """Isotropic Scott-type rule ``h = mean_std * n^(-1/(r+4))``, floored at ``h_min``.

    ``mean_std`` averages the unbiased per-dimension standard deviations.
    """
    pts = _as_cloud(cloud)
    n, r = pts.shape
    if n < 2:
        warnings.warn("single-point cloud; using minimum bandwidth", DegenerateBandwidthWarning,
                      stacklevel=2)
        return h_min
    spread = float(np.mean(np.std(pts, axis=0, ddof=1)))
    h = spread * n ** (-1.0 / (r + 4))
    if h < h_min:
        warnings.warn(f"bandwidth {h:.3g} below floor; using {h_min}", DegenerateBandwidthWarning,
                      stacklevel=2)
        return h_min
    return h


def _pairwise_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0], b.shape[0]))
    for j in range(a.shape[1]):
        diff = a[:, j, None] - b[None, :, j]
        out += diff * diff
    return out


def _cloud_log_density(queries: np.ndarray, cloud: np.ndarray, h: float, kernel: str) -> np.ndarray:
    n, r = cloud.shape
    offset = -math.log(n) - r * math.log(h)
    out = np.empty(queries.shape[0])
    step = max(1, _CHUNK // max(n, 1))
    with np.errstate(divide="ignore"):
        for start in range(0, queries.shape[0], step):
            block = queries[start:start + step]
            logk = _log_kernel(_pairwise_sq(block, cloud) / (h * h), kernel, r)
            out[start:start + step] = offset + logsumexp(logk, axis=1)
    return out


def bandwidth_cv(cloud, kernel: str = "gaussian", h_min: float = H_MIN) -> float:
    """Pick ``h_scott * 2^j``, ``j in [-3, 3]``, maximizing leave-one-out log-likelihood."""
    pts = _as_cloud(cloud)
    n, r = pts.shape
    base = bandwidth_scott(pts, h_min)
    if n < 3:
        return base
    sq = _pairwise_sq(pts, pts)
    np.fill_diagonal(sq, np.inf)
    best_h, best_ll = base, -np.inf
    for j in range(-3, 4):
        h = max(base * 2.0**j, h_min)
        with np.errstate(divide="ignore"):
            logk = _log_kernel(sq / (h * h), kernel, r)
            logk[np.isinf(sq)] = -np.inf
            loo = -math.log(n - 1) - r * math.log(h) + logsumexp(logk, axis=1)
        ll = float(np.sum(loo))
        if ll > best_ll:
            best_h, best_ll = h, ll
    return best_h


@dataclass(frozen=True)
class KdeModel:
    """Per-class latent clouds, bandwidths and priors."""

    clouds: tuple
    bandwidths: np.ndarray
    priors: np.ndarray
    kernel: str = "gaussian"
    prior_mode: str = "uniform"
    label_names: tuple | None = None

    def __post_init__(self):
        clouds = tuple(_as_cloud(c) for c in self.clouds)
        if not clouds:
            raise ConfigError("KDE model needs at least one class")
        r = clouds[0].shape[1]
        for y, c in enumerate(clouds):
            if c.shape[0] < 1:
                raise ConfigError(f"class {y} has an empty latent cloud")
            if c.shape[1] != r:
                raise ConfigError("all clouds must share the latent dimension")
            c.setflags(write=False)
        h = np.asarray(self.bandwidths, dtype=float)
        p = np.asarray(self.priors, dtype=float)
        if h.shape != (len(clouds),) or (h <= 0).any():
            raise ConfigError("need one positive bandwidth per class")
        if p.shape != (len(clouds),) or (p <= 0).any() or abs(p.sum() - 1) > 1e-12:
            raise ConfigError("priors must be positive and sum to 1")
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        h.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "clouds", clouds)
        object.__setattr__(self, "bandwidths", h)
        object.__setattr__(self, "priors", p)

    @property
    def k(self) -> int:
        return len(self.clouds)

    @property
    def r(self) -> int:
        return self.clouds[0].shape[1]

    def to_dict(self) -> dict:
        classes = []
        for y, cloud in enumerate(self.clouds):
            label = self.label_names[y] if self.label_names else y
            classes.append({
                "label": label,
                "bandwidth": float(self.bandwidths[y]),
                "prior": float(self.priors[y]),
                "cloud": cloud.tolist(),
            })
        return {"r": self.r, "kernel": self.kernel, "prior_mode": self.prior_mode,
                "classes": classes}

    @classmethod
    def from_dict(cls, data: dict) -> "KdeModel":
        classes = data["classes"]
        labels = tuple(c["label"] for c in classes)
        names = None if labels == tuple(range(len(labels))) else tuple(str(s) for s in labels)
        r = int(data["r"])
        return cls(
            clouds=tuple(np.asarray(c["cloud"], float).reshape(-1, r) for c in classes),
            bandwidths=np.array([c["bandwidth"] for c in classes], float),
            priors=np.array([c["prior"] for c in classes], float),
            kernel=data.get("kernel", "gaussian"),
            prior_mode=data.get("prior_mode", "explicit"),
            label_names=names,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _resolve_priors(priors, counts: np.ndarray) -> tuple[np.ndarray, str]:
    k = len(counts)
    if isinstance(priors, str):
        if priors == "uniform":
            return np.full(k, 1.0 / k), "uniform"
        if priors == "empirical":
            return counts / counts.sum(), "empirical"
        raise ConfigError(f"unknown prior mode {priors!r}")
    p = np.asarray(priors, dtype=float)
    if p.shape != (k,) or (p <= 0).any():
        raise ConfigError(f"explicit priors must be {k} positive numbers")
    return p / p.sum(), "explicit"


def fit_kde(
    points,
    labels,
    k: int,
    kernel: str = "gaussian",
    bandwidth: str | float | Sequence[float] = "scott",
    priors: str | Sequence[float] = "uniform",
    label_names=None,
    h_min: float = H_MIN,
) -> KdeModel:
    """Fit one KDE per class on embedded training points.

    ``bandwidth`` is ``"scott"``, ``"cv"``, a scalar shared by all classes or
    one value per class.
    """
    pts = _as_cloud(points)
    labels = np.asarray(labels, dtype=np.int64)
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}")
    clouds = [pts[labels == y] for y in range(k)]
    counts = np.array([len(c) for c in clouds], dtype=float)
    if (counts == 0).any():
        raise ConfigError(f"class {int(np.flatnonzero(counts == 0)[0])} has no training points")
    p, mode = _resolve_priors(priors, counts)
    if bandwidth == "scott":
        h = [bandwidth_scott(c, h_min) for c in clouds]
    elif bandwidth == "cv":
        h = [bandwidth_cv(c, kernel, h_min) for c in clouds]
    elif isinstance(bandwidth, str):
        raise ConfigError(f"unknown bandwidth rule {bandwidth!r}")
    else:
        h = np.broadcast_to(np.asarray(bandwidth, dtype=float), (k,))
    return KdeModel(tuple(clouds), np.asarray(h, float), p, kernel, mode, label_names)


def log_densities(model: KdeModel, queries) -> np.ndarray:
    """``log f(z | y)`` for every query and class, shape ``(n_queries, k)``."""
    z = _as_cloud(queries)
    if z.shape[1] != model.r:
        raise ConfigError(f"queries have dimension {z.shape[1]}, model expects {model.r}")
    return np.column_stack([
        _cloud_log_density(z, cloud, h, model.kernel)
        for cloud, h in zip(model.clouds, model.bandwidths)
    ])


def kde_log_density(model: KdeModel, z, y: int) -> float:
    if not 0 <= y < model.k:
        raise ConfigError(f"unknown class {y}")
    z = np.asarray(z, dtype=float).reshape(1, -1)
    if z.shape[1] != model.r:
        raise ConfigError(f"query has dimension {z.shape[1]}, model expects {model.r}")
    return float(_cloud_log_density(z, model.clouds[y], float(model.bandwidths[y]), model.kernel)[0])


def _decide(scores: np.ndarray, priors: np.ndarray) -> np.ndarray:
    best = scores.max(axis=1)
    winners = np.argmax(scores >= best[:, None] - TIE_TOL, axis=1)
    dead = np.isneginf(best)
    if dead.any():
        winners[dead] = int(np.argmax(priors))
    return winners


def predict(model: KdeModel, queries, rule: str = "ml") -> np.ndarray:
    """Vectorized decisions; ``rule`` is ``"ml"`` or ``"map"``."""
    scores = log_densities(model, queries)
    if rule == "map":
        log_prior = np.log(model.priors)
        scores = scores + (log_prior - log_prior.max())
    elif rule != "ml":
        raise ConfigError(f"unknown decision rule {rule!r}")
    return _decide(scores, model.priors)


def classify(model: KdeModel, z, rule: str = "ml") -> int:
    return int(predict(model, np.asarray(z, float).reshape(1, -1), rule)[0])
