"""Density-matrix spectral embeddings and KDE classification for categorical surveys."""

__version__ = "0.1.0"

from .embedding import SpectralEmbedding, embed, embed_dataset, fit_embedding, select_rank
from .errors import (
    ConfigError,
    DataError,
    DegenerateOperatorError,
    DmmError,
    EncodingError,
    SchemaError,
)
from .kde import KdeModel, classify, fit_kde, kde_log_density, predict
from .metrics import metrics
from .operator import (
    CLASS_NORMALIZED,
    COUNT_BASED,
    AmplitudeMatrix,
    FrequencyMatrix,
    OperatorSpectrum,
    amplitude_lift,
    class_frequency_matrix,
    class_normalized_amplitudes,
    operator_apply,
    spectral_decompose,
)
from .pipeline import DmmModel, PipelineOptions, fit_pipeline, load_model
from .survey import LabeledDataset, SurveySchema, SurveyVector, decode, encode, load_dataset, normalize

__all__ = [
    "__version__",
    "AmplitudeMatrix",
    "CLASS_NORMALIZED",
    "COUNT_BASED",
    "ConfigError",
    "DataError",
    "DegenerateOperatorError",
    "DmmError",
    "DmmModel",
    "EncodingError",
    "FrequencyMatrix",
    "KdeModel",
    "LabeledDataset",
    "OperatorSpectrum",
    "PipelineOptions",
    "SchemaError",
    "SpectralEmbedding",
    "SurveySchema",
    "SurveyVector",
    "amplitude_lift",
    "class_frequency_matrix",
    "class_normalized_amplitudes",
    "classify",
    "decode",
    "embed",
    "embed_dataset",
    "encode",
    "fit_embedding",
    "fit_kde",
    "fit_pipeline",
    "kde_log_density",
    "load_dataset",
    "load_model",
    "metrics",
    "normalize",
    "operator_apply",
    "predict",
    "select_rank",
    "spectral_decompose",
]
