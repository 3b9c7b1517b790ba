"""End-to-end fit: counts, amplitudes, spectrum, embedding, per-class KDE."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .embedding import SpectralEmbedding, embed_dataset, embed_indices, fit_embedding, select_rank
from .errors import ConfigError
from .kde import KdeModel, fit_kde, predict
from .operator import (
    COUNT_BASED,
    OperatorSpectrum,
    amplitudes,
    class_frequency_matrix,
    spectral_decompose,
)
from .survey import LabeledDataset, SurveySchema

__all__ = ["PipelineOptions", "DmmModel", "fit_pipeline", "load_model"]


@dataclass(frozen=True)
class PipelineOptions:
    variant: str = COUNT_BASED
    smoothing: float = 0.0
    rank: str | int = "full_rank"
    rank_tol: float | None = None
    kernel: str = "gaussian"
    bandwidth: str | float = "scott"
    priors: str | tuple = "uniform"

    def to_dict(self) -> dict:
        out = asdict(self)
        if isinstance(self.priors, tuple):
            out["priors"] = list(self.priors)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineOptions":
        data = dict(data)
        if isinstance(data.get("priors"), list):
            data["priors"] = tuple(data["priors"])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown pipeline options: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class DmmModel:
    """A fitted embedding plus latent classifier."""

    schema: SurveySchema
    spectrum: OperatorSpectrum
    embedding: SpectralEmbedding
    kde: KdeModel
    options: PipelineOptions = field(default_factory=PipelineOptions)

    def transform(self, ds: LabeledDataset) -> np.ndarray:
        return embed_dataset(self.embedding, ds)

    def predict(self, ds: LabeledDataset, rule: str = "ml") -> np.ndarray:
        return predict(self.kde, self.transform(ds), rule)

    def predict_indices(self, indices, rule: str = "ml") -> np.ndarray:
        return predict(self.kde, embed_indices(self.embedding, indices), rule)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.to_dict(),
            "options": self.options.to_dict(),
            "spectrum": self.spectrum.to_dict(),
            "embedding": self.embedding.to_dict(),
            "kde": self.kde.to_dict(),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> DmmModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return DmmModel(
            schema=SurveySchema.from_dict(data["schema"]),
            spectrum=OperatorSpectrum.from_dict(data["spectrum"]),
            embedding=SpectralEmbedding.from_dict(data["embedding"]),
            kde=KdeModel.from_dict(data["kde"]),
            options=PipelineOptions.from_dict(data.get("options", {})),
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot load model {path}: {exc}") from exc


def fit_pipeline(ds: LabeledDataset, options: PipelineOptions | None = None) -> DmmModel:
    """Fit the density-matrix embedding and class-conditional KDE on ``ds``."""
    opts = options or PipelineOptions()
    freq = class_frequency_matrix(ds)
    amp = amplitudes(freq, opts.variant, opts.smoothing)
    spectrum = spectral_decompose(amp, opts.rank_tol)
    r = select_rank(spectrum, opts.rank)
    emb = fit_embedding(spectrum, r, ds.schema.q)
    latent = embed_dataset(emb, ds)
    kde = fit_kde(latent, ds.labels, ds.k, kernel=opts.kernel, bandwidth=opts.bandwidth,
                  priors=opts.priors, label_names=ds.label_names)
    return DmmModel(ds.schema, spectrum, emb, kde, opts)
