"""Seeded blockwise-categorical generator and the S1-S4 experiment grids.

Randomness comes from numpy's PCG64 bit generator keyed by a
``SeedSequence([seed, *path])``; only raw 64-bit outputs are consumed, so
draws do not depend on numpy's higher-level sampling routines.  Categories
are drawn by comparing the top 53 bits of a raw output with integer
thresholds ``floor(cdf * 2**53)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .pipeline import PipelineOptions
from .survey import LabeledDataset, SurveySchema

__all__ = [
    "GeneratorSpec",
    "Cell",
    "ExperimentConfig",
    "EXPERIMENTS",
    "stream",
    "make_profiles",
    "sample_dataset",
    "generate",
    "experiment_config",
    "load_config",
]

_BITS = 53
_ONE = 1 << _BITS


def stream(seed: int, *path: int) -> np.random.PCG64:
    """Independent bit generator for ``(seed, *path)``."""
    return np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, path)]))


def _raw53(bitgen: np.random.PCG64, size: int) -> np.ndarray:
    return bitgen.random_raw(size) >> np.uint64(64 - _BITS)


def _thresholds(p: np.ndarray) -> np.ndarray:
    """Integer cumulative thresholds; the last one is exactly ``2**53``."""
    cdf = np.cumsum(p, axis=-1)
    t = np.floor(cdf / cdf[..., -1:] * _ONE).astype(np.uint64)
    t[..., -1] = _ONE
    return t


def _draw(bitgen, law: np.ndarray, size: int) -> np.ndarray:
    """``size`` categories from one law, as int64 indices."""
    u = _raw53(bitgen, size)
    return np.searchsorted(_thresholds(law), u, side="right").astype(np.int64)


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one synthetic cell.

    ``informative`` lists block indices whose laws move with ``delta``; blocks
    in ``noise_block_sizes`` are appended after the survey blocks and are
    uniform for every class.
    """

    block_sizes: tuple[int, ...]
    k: int
    informative: tuple[int, ...]
    delta: float
    noise_block_sizes: tuple[int, ...] = ()
    priors: tuple[float, ...] | None = None
    n_train: int = 6000
    n_test: int = 6000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "block_sizes", tuple(int(m) for m in self.block_sizes))
        object.__setattr__(self, "informative", tuple(sorted({int(i) for i in self.informative})))
        object.__setattr__(self, "noise_block_sizes", tuple(int(m) for m in self.noise_block_sizes))
        if self.k < 2:
            raise ConfigError("k must be at least 2")
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError("delta must lie in [0, 1]")
        if any(m < 2 for m in self.block_sizes + self.noise_block_sizes):
            raise ConfigError("every block needs at least 2 modalities")
        if any(not 0 <= i < len(self.block_sizes) for i in self.informative):
            raise ConfigError("informative block index out of range")
        if self.priors is not None:
            p = tuple(float(x) for x in self.priors)
            if len(p) != self.k or min(p) <= 0 or abs(sum(p) - 1) > 1e-9:
                raise ConfigError(f"priors must be {self.k} positive numbers summing to 1")
            object.__setattr__(self, "priors", p)
        if self.n_train < 1 or self.n_test < 0:
            raise ConfigError("sample sizes must be positive")

    @property
    def all_block_sizes(self) -> tuple[int, ...]:
        return self.block_sizes + self.noise_block_sizes

    @property
    def d(self) -> int:
        return sum(self.all_block_sizes)

    @property
    def class_priors(self) -> np.ndarray:
        if self.priors is None:
            return np.full(self.k, 1.0 / self.k)
        return np.asarray(self.priors)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown generator fields: {sorted(unknown)}")
        for key in ("block_sizes", "informative", "noise_block_sizes", "priors"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def make_profiles(spec: GeneratorSpec) -> list[np.ndarray]:
    """Per-block laws, each of shape ``(k, m_i)``.

    Informative blocks blend uniform with a point mass on modality
    ``c mod m_i``: ``(1 - delta) / m_i + delta * [j == c mod m_i]``.
    """
    laws = []
    informative = set(spec.informative)
    for i, m in enumerate(spec.all_block_sizes):
        law = np.full((spec.k, m), 1.0 / m)
        if i in informative:
            law *= 1.0 - spec.delta
            law[np.arange(spec.k), np.arange(spec.k) % m] += spec.delta
        laws.append(law)
    return laws


def _class_counts(priors: np.ndarray, n: int) -> np.ndarray:
    """Largest-remainder allocation of ``n`` samples; remainder ties go to lower classes."""
    exact = priors * n
    counts = np.floor(exact).astype(np.int64)
    short = n - int(counts.sum())
    order = sorted(range(len(priors)), key=lambda y: (-(exact[y] - counts[y]), y))
    for y in order[:short]:
        counts[y] += 1
    return counts


def sample_dataset(
    profiles: Sequence[np.ndarray],
    priors,
    n: int,
    seed: int | np.random.PCG64,
    stratified: bool = True,
) -> LabeledDataset:
    """Draw ``n`` labeled samples.

    With ``stratified`` the class counts are the largest-remainder rounding
    of ``priors * n`` in shuffled order; otherwise each label is drawn from
    ``priors``.  Each block is then drawn independently from its class law.
    """
    bitgen = seed if isinstance(seed, np.random.PCG64) else stream(seed)
    priors = np.asarray(priors, dtype=float)
    k = len(priors)
    if n < 1:
        raise ConfigError("n must be positive")
    if stratified:
        counts = _class_counts(priors / priors.sum(), n)
        labels = np.repeat(np.arange(k, dtype=np.int64), counts)
        keys = bitgen.random_raw(n)
        labels = labels[np.argsort(keys, kind="stable")]
    else:
        labels = _draw(bitgen, priors, n)
    sizes = tuple(law.shape[1] for law in profiles)
    codes = np.empty((n, len(sizes)), dtype=np.int64)
    for i, law in enumerate(profiles):
        u = _raw53(bitgen, n)
        thresholds = _thresholds(law)
        col = np.empty(n, dtype=np.int64)
        for y in range(k):
            mask = labels == y
            col[mask] = np.searchsorted(thresholds[y], u[mask], side="right")
        codes[:, i] = col
    return LabeledDataset(SurveySchema(sizes), codes, labels, k)


def generate(spec: GeneratorSpec, path: Sequence[int] = ()) -> tuple[LabeledDataset, LabeledDataset]:
    """Train and test sets for one cell from independent streams."""
    profiles = make_profiles(spec)
    train = sample_dataset(profiles, spec.class_priors, spec.n_train, stream(spec.seed, *path, 0))
    test = sample_dataset(profiles, spec.class_priors, max(spec.n_test, 1),
                          stream(spec.seed, *path, 1))
    return train, test


# ---------------------------------------------------------------------------
# named experiments


@dataclass(frozen=True)
class Cell:
    """One row of an experiment table: display parameters plus its generator."""

    params: tuple[tuple[str, object], ...]
    spec: GeneratorSpec

    def params_dict(self) -> dict:
        return dict(self.params)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    cells: tuple[Cell, ...]
    seed: int = 0
    variants: tuple[str, ...] = ("count_based",)
    rules: tuple[str, ...] = ("ml",)
    baselines: tuple[str, ...] = ("pca_knn",)
    stability: bool = False
    pipeline: PipelineOptions = field(default_factory=PipelineOptions)
    table_metrics: tuple[str, ...] = ("accuracy", "macro_f1")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "variants": list(self.variants),
            "rules": list(self.rules),
            "baselines": list(self.baselines),
            "stability": self.stability,
            "pipeline": self.pipeline.to_dict(),
            "table_metrics": list(self.table_metrics),
            "cells": [{"params": c.params_dict(), "generator": c.spec.to_dict()} for c in self.cells],
        }


EXPERIMENTS = ("S1", "S2", "S3", "S4")

# base survey shared by S1-S3: 15 blocks of 5 modalities, 10 informative
_Q, _M, _K, _N = 15, 5, 3, 6000
_INFORMATIVE = tuple(range(10))


def _base(**kw) -> GeneratorSpec:
    args = dict(block_sizes=(_M,) * _Q, k=_K, informative=_INFORMATIVE, delta=0.6,
                n_train=_N, n_test=_N)
    args.update(kw)
    return GeneratorSpec(**args)


def _s1(seed: int) -> list[Cell]:
    return [Cell((("delta", d),), _base(delta=d, seed=seed)) for d in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)]


def _s2(seed: int) -> list[Cell]:
    cells = []
    for scale in (1, 2, 4, 8):
        # the five non-informative blocks grow; d = 50 + 25 * scale
        sizes = tuple(_M if i in _INFORMATIVE else _M * scale for i in range(_Q))
        spec = _base(block_sizes=sizes, seed=seed)
        cells.append(Cell((("scale", scale), ("d", spec.d)), spec))
    return cells


def _s3(seed: int) -> list[Cell]:
    cells = []
    for alpha in (0.0, 0.5, 1.0, 2.0):
        q_noise = math.ceil(alpha * _Q)
        spec = _base(noise_block_sizes=(_M,) * q_noise, seed=seed)
        cells.append(Cell((("alpha", alpha), ("q_noise", q_noise)), spec))
    return cells


def _s4(seed: int) -> list[Cell]:
    cells = []
    for major, minor in ((0.5, 0.5), (0.8, 0.2), (0.9, 0.1), (0.95, 0.05)):
        spec = GeneratorSpec(block_sizes=(_M,) * _Q, k=2, informative=_INFORMATIVE, delta=0.6,
                             priors=(major, minor), n_train=_N, n_test=_N, seed=seed)
        cells.append(Cell((("p_major", major), ("p_minor", minor)), spec))
    return cells


def experiment_config(name: str, seed: int = 0, **overrides) -> ExperimentConfig:
    """Named experiment grid with harness defaults; ``overrides`` replace
    :class:`ExperimentConfig` fields or, under ``generator``, fields of every
    cell's :class:`GeneratorSpec`."""
    builders = {"S1": _s1, "S2": _s2, "S3": _s3, "S4": _s4}
    if name not in builders:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    cells = builders[name](seed)
    gen_over = overrides.pop("generator", None) or {}
    if gen_over:
        try:
            cells = [Cell(c.params, replace(c.spec, **gen_over)) for c in cells]
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
    base = dict(name=name, cells=tuple(cells), seed=seed)
    if name == "S4":
        base.update(variants=("count_based", "class_normalized"), rules=("ml", "map"),
                    baselines=(), pipeline=PipelineOptions(priors="empirical", bandwidth=0.3),
                    table_metrics=("balanced_accuracy", "macro_f1"))
    base.update(overrides)
    try:
        return ExperimentConfig(**base)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, seed: int | None = None) -> ExperimentConfig:
    """Custom experiment file.

    Either ``{"experiment": "S1", "seed": ..., "overrides": {...}}`` or an
    explicit grid ``{"name": ..., "cells": [{"params": {...}, "generator": {...}}], ...}``.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    run_seed = int(data.get("seed", 0) if seed is None else seed)
    if "experiment" in data:
        overrides = dict(data.get("overrides", {}))
        if "pipeline" in overrides:
            overrides["pipeline"] = PipelineOptions.from_dict(overrides["pipeline"])
        for key in ("variants", "rules", "baselines", "table_metrics"):
            if key in overrides:
                overrides[key] = tuple(overrides[key])
        return experiment_config(data["experiment"], run_seed, **overrides)
    try:
        cells = tuple(
            Cell(tuple(c.get("params", {"cell": j}).items()),
                 GeneratorSpec.from_dict({**c["generator"], "seed": run_seed}))
            for j, c in enumerate(data["cells"])
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return ExperimentConfig(
        name=str(data.get("name", Path(path).stem)),
        cells=cells,
        seed=run_seed,
        variants=tuple(data.get("variants", ("count_based",))),
        rules=tuple(data.get("rules", ("ml",))),
        baselines=tuple(data.get("baselines", ("pca_knn",))),
        stability=bool(data.get("stability", False)),
        pipeline=PipelineOptions.from_dict(data.get("pipeline", {})),
        table_metrics=tuple(data.get("table_metrics", ("accuracy", "macro_f1"))),
    )
