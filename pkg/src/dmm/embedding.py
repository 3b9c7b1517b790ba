"""Spectral coordinates: projection of normalized survey vectors on the top-r eigenvectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SchemaError
from .operator import OperatorSpectrum
from .survey import LabeledDataset, SurveyVector

__all__ = [
    "SpectralEmbedding",
    "fit_embedding",
    "embed",
    "embed_indices",
    "embed_dataset",
    "select_rank",
]


@dataclass(frozen=True)
class SpectralEmbedding:
    """Top-``r`` eigenbasis of a density operator plus the block count ``q``."""

    basis: np.ndarray
    q: int
    variant: str
    eigenvalues: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float, copy=True)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        ev = np.array(self.eigenvalues, dtype=float, copy=True)
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def r(self) -> int:
        return self.basis.shape[1]

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "variant": self.variant,
            "eigenvalues": self.eigenvalues.tolist(),
            "basis": self.basis.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralEmbedding":
        return cls(np.asarray(data["basis"], float), int(data["q"]), data["variant"],
                   np.asarray(data["eigenvalues"], float))


def fit_embedding(spec: OperatorSpectrum, r: int, q: int = 1) -> SpectralEmbedding:
    """Keep the first ``r`` eigenvectors (descending eigenvalue order)."""
    if not 1 <= r <= spec.rank:
        raise ConfigError(f"r={r} outside [1, {spec.rank}] (numerical rank of the operator)")
    return SpectralEmbedding(spec.eigenvectors[:, :r], int(q), spec.variant, spec.eigenvalues[:r])


def embed_indices(emb: SpectralEmbedding, indices) -> np.ndarray:
    """Embed rows of active coordinates, shape ``(n, q)`` -> ``(n, r)``.

    Sums the ``q`` selected rows of the basis; never densifies the input.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim == 1:
        idx = idx[None, :]
    if idx.shape[1] != emb.q:
        raise SchemaError(f"expected {emb.q} active coordinates per sample, got {idx.shape[1]}")
    if idx.size and (idx.min() < 0 or idx.max() >= emb.d):
        raise SchemaError(f"active coordinate outside [0, {emb.d})")
    return emb.basis[idx].sum(axis=1) / math.sqrt(emb.q)


def embed(emb: SpectralEmbedding, x: SurveyVector) -> np.ndarray:
    """Latent coordinates ``U_r^T x / sqrt(q)`` of one survey vector."""
    if x.schema.d != emb.d:
        raise SchemaError(f"survey dimension {x.schema.d} does not match embedding d={emb.d}")
    return embed_indices(emb, x.indices)[0]


def embed_dataset(emb: SpectralEmbedding, ds: LabeledDataset) -> np.ndarray:
    if ds.schema.d != emb.d:
        raise SchemaError(f"dataset dimension {ds.schema.d} does not match embedding d={emb.d}")
    return embed_indices(emb, ds.active_indices())


def select_rank(spec: OperatorSpectrum, strategy: str | int = "full_rank") -> int:
    """Choose the truncation level.

    ``"full_rank"`` keeps every positive eigenvalue; ``"gap"`` cuts after the
    largest consecutive eigenvalue gap (full rank when no gap exists); an
    integer is a fixed ``r`` checked against the rank.
    """
    s = spec.rank
    if s < 1:
        raise ConfigError("spectrum has no positive eigenvalue")
    if strategy == "full_rank":
        return s
    if strategy == "gap":
        sigma = spec.eigenvalues
        if s <= 1:
            return s
        gaps = sigma[:-1] - sigma[1:]
        if np.all(gaps <= 1e-12 * sigma[0]):
            return s
        return int(np.argmax(gaps)) + 1
    if isinstance(strategy, str) and strategy.startswith("fixed"):
        strategy = int(strategy.strip("fixed()"))
    if isinstance(strategy, (int, np.integer)) and not isinstance(strategy, bool):
        r = int(strategy)
        if not 1 <= r <= s:
            raise ConfigError(f"fixed r={r} outside [1, {s}]")
        return r
    raise ConfigError(f"unknown rank strategy {strategy!r}")
