"""Class-conditional frequency matrix, amplitude lifting and the density operator.

The operator ``rho = A A^T / tr(A A^T)`` is never formed: its nonzero
spectrum comes from the ``k x k`` Gram matrix ``G = A^T A``, with
eigenvectors transferred as ``u = A v / sqrt(lambda)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateOperatorError, SchemaError
from .linalg import fix_signs, jacobi_eigh, sort_eigenpairs
from .survey import LabeledDataset

__all__ = [
    "COUNT_BASED",
    "CLASS_NORMALIZED",
    "FrequencyMatrix",
    "AmplitudeMatrix",
    "OperatorSpectrum",
    "class_frequency_matrix",
    "amplitude_lift",
    "class_normalized_amplitudes",
    "amplitudes",
    "gram_matrix",
    "spectral_decompose",
    "operator_apply",
    "dense_operator",
]

COUNT_BASED = "count_based"
CLASS_NORMALIZED = "class_normalized"
VARIANTS = (COUNT_BASED, CLASS_NORMALIZED)


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrequencyMatrix:
    """Counts ``F[i, y]``: how often coordinate ``i`` is active among class-``y`` samples."""

    counts: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.counts)
        if f.ndim != 2:
            raise DataError("frequency matrix must be 2-D")
        if (f < 0).any():
            raise DataError("frequency counts must be nonnegative")
        object.__setattr__(self, "counts", _readonly(f))

    @property
    def d(self) -> int:
        return self.counts.shape[0]

    @property
    def k(self) -> int:
        return self.counts.shape[1]

    @property
    def class_masses(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total_mass(self):
        return self.counts.sum()


@dataclass(frozen=True)
class AmplitudeMatrix:
    """Entrywise square-root lifting of counts or class profiles, shape ``(d, k)``."""

    columns: np.ndarray
    variant: str = COUNT_BASED
    smoothing: float = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        a = np.asarray(self.columns, dtype=float)
        if a.ndim != 2:
            raise ValueError("amplitude matrix must be 2-D")
        object.__setattr__(self, "columns", _readonly(a))

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def k(self) -> int:
        return self.columns.shape[1]

    @property
    def trace_normalizer(self) -> float:
        """``tr(A A^T)``: total mass for counts, ``k`` for class profiles."""
        if self.variant == CLASS_NORMALIZED:
            return float(self.k)
        return float(np.sum(self.columns**2))


@dataclass(frozen=True)
class OperatorSpectrum:
    """Nonzero eigenpairs of a density operator, descending eigenvalues."""

    variant: str
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    trace_normalizer: float
    rank_tol: float

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _readonly(np.asarray(self.eigenvalues, float)))
        object.__setattr__(self, "eigenvectors", _readonly(np.asarray(self.eigenvectors, float)))

    @property
    def rank(self) -> int:
        return len(self.eigenvalues)

    @property
    def d(self) -> int:
        return self.eigenvectors.shape[0]

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "trace_normalizer": self.trace_normalizer,
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenvectors": self.eigenvectors.tolist(),
            "rank_tol": self.rank_tol,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OperatorSpectrum":
        vecs = np.asarray(data["eigenvectors"], dtype=float)
        vals = np.asarray(data["eigenvalues"], dtype=float)
        if vecs.ndim != 2 or vecs.shape[1] != len(vals):
            raise SchemaError("eigenvectors must be a d x s array matching the eigenvalues")
        return cls(
            variant=data["variant"],
            eigenvalues=vals,
            eigenvectors=vecs,
            trace_normalizer=float(data["trace_normalizer"]),
            rank_tol=float(data["rank_tol"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "OperatorSpectrum":
        return cls.from_dict(json.loads(text))


def class_frequency_matrix(ds: LabeledDataset) -> FrequencyMatrix:
    """Tally ``F`` in one pass over the sparse active indices (``O(q)`` per sample)."""
    if ds.n == 0:
        raise DataError("empty dataset")
    empty = np.flatnonzero(ds.class_counts() == 0)
    if empty.size:
        y = int(empty[0])
        name = ds.label_names[y] if ds.label_names else str(y)
        raise DataError(f"class {name!r} (index {y}) has no samples")
    d, k, q = ds.schema.d, ds.k, ds.schema.q
    flat = ds.active_indices() * k + np.repeat(ds.labels, q).reshape(ds.n, q)
    counts = np.bincount(flat.ravel(), minlength=d * k).reshape(d, k)
    return FrequencyMatrix(counts.astype(np.int64))


def amplitude_lift(freq: FrequencyMatrix) -> AmplitudeMatrix:
    return AmplitudeMatrix(np.sqrt(freq.counts.astype(float)), COUNT_BASED, 0.0)


def class_normalized_amplitudes(freq: FrequencyMatrix, smoothing: float = 0.0) -> AmplitudeMatrix:
    """Columns ``sqrt(p_y)`` with ``p_y(i) = (F[i,y] + a) / (s_y + d a)``."""
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    f = freq.counts.astype(float)
    mass = f.sum(axis=0) + freq.d * smoothing
    if (mass <= 0).any():
        y = int(np.flatnonzero(mass <= 0)[0])
        raise DataError(f"class {y} has zero mass; cannot normalize without smoothing")
    profiles = (f + smoothing) / mass
    return AmplitudeMatrix(np.sqrt(profiles), CLASS_NORMALIZED, float(smoothing))


def amplitudes(freq: FrequencyMatrix, variant: str = COUNT_BASED, smoothing: float = 0.0):
    """Dispatch on the operator variant."""
    if variant == COUNT_BASED:
        if smoothing:
            f = FrequencyMatrix(freq.counts.astype(float) + smoothing)
            return AmplitudeMatrix(np.sqrt(f.counts), COUNT_BASED, float(smoothing))
        return amplitude_lift(freq)
    if variant == CLASS_NORMALIZED:
        return class_normalized_amplitudes(freq, smoothing)
    raise ValueError(f"unknown variant {variant!r}")


def gram_matrix(amp: AmplitudeMatrix) -> np.ndarray:
    a = amp.columns
    g = a.T @ a
    return 0.5 * (g + g.T)


def spectral_decompose(amp: AmplitudeMatrix, rank_tol: float | None = None) -> OperatorSpectrum:
    """Nonzero spectrum of ``A A^T / tr(A A^T)`` through the Gram matrix.

    Eigenvalues ``lambda_i`` of ``G`` with ``lambda_i > rank_tol * lambda_max``
    are kept; ``sigma_i = lambda_i / tr`` and ``u_i = A v_i / sqrt(lambda_i)``.
    """
    k = amp.k
    if rank_tol is None:
        rank_tol = 1e-12 * k
    if not 0 < rank_tol < 1:
        raise ValueError("rank_tol must lie in (0, 1)")
    g = gram_matrix(amp)
    lam, v = jacobi_eigh(g)
    lam_max = float(lam.max()) if lam.size else 0.0
    if lam_max <= 0:
        raise DegenerateOperatorError("operator has no positive eigenvalue")
    keep = lam > rank_tol * lam_max
    lam, v = lam[keep], v[:, keep]
    u = (amp.columns @ v) / np.sqrt(lam)
    u = fix_signs(u)
    trace = amp.trace_normalizer
    sigma, u = sort_eigenpairs(lam / trace, u)
    return OperatorSpectrum(amp.variant, sigma, u, trace, float(rank_tol))


def operator_apply(spec: OperatorSpectrum, v) -> np.ndarray:
    """``rho v = sum_i sigma_i u_i (u_i^T v)`` without forming ``rho``."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != spec.d:
        raise SchemaError(f"vector length {v.shape[0]} does not match d={spec.d}")
    u = spec.eigenvectors
    coeffs = u.T @ v
    scale = spec.eigenvalues if v.ndim == 1 else spec.eigenvalues[:, None]
    return u @ (scale * coeffs)


def dense_operator(amp: AmplitudeMatrix) -> np.ndarray:
    """Explicit ``d x d`` operator; test oracle for small ``d`` only."""
    a = amp.columns
    rho = a @ a.T
    return rho / math.fsum(np.diag(rho))
