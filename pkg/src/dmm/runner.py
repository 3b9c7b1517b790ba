"""Run experiment grids and assemble reproducible reports."""

from __future__ import annotations

import logging
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import PcaKnn
from .errors import ConfigError, DmmError
from .kde import H_MIN, DegenerateBandwidthWarning, predict
from .metrics import metrics
from .operator import (
    CLASS_NORMALIZED,
    COUNT_BASED,
    AmplitudeMatrix,
    class_frequency_matrix,
    class_normalized_amplitudes,
    spectral_decompose,
)
from .pipeline import fit_pipeline
from .report import SCHEMA_VERSION, dumps, summary_csv
from .stability import embedding_stability_report
from .synthetic import Cell, ExperimentConfig, generate, make_profiles

__all__ = ["ExperimentReport", "run", "method_name", "max_threads"]

log = logging.getLogger(__name__)

VARIANTS = (COUNT_BASED, CLASS_NORMALIZED)
RULES = ("ml", "map")
BASELINES = ("pca_knn",)
KNN_NEIGHBORS = 15


def method_name(variant: str, rule: str) -> str:
    return f"dmm_{variant}_{rule}"


def max_threads(n_cells: int) -> int:
    """Worker count: ``DMM_THREADS`` if set, else the CPU count, never more than the cells."""
    env = os.environ.get("DMM_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"DMM_THREADS must be an integer, got {env!r}") from None
        if cap < 1:
            raise ConfigError("DMM_THREADS must be at least 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_cells))


@dataclass
class ExperimentReport:
    """Deterministic report content plus the wall-clock timings kept beside it."""

    data: dict
    timings: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return dumps(self.data)

    def summary_csv(self) -> str:
        return summary_csv(self.data)

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "report": out / "report.json",
            "summary": out / "summary.csv",
            "timings": out / "timings.json",
        }
        paths["report"].write_bytes(self.to_json().encode("ascii"))
        paths["summary"].write_text(self.summary_csv(), encoding="ascii", newline="")
        paths["timings"].write_text(dumps(self.timings), encoding="ascii")
        return paths


def _validate(config: ExperimentConfig) -> None:
    if not config.cells:
        raise ConfigError("experiment has no cells")
    for name, values, allowed in (
        ("variant", config.variants, VARIANTS),
        ("rule", config.rules, RULES),
        ("baseline", config.baselines, BASELINES),
    ):
        bad = [v for v in values if v not in allowed]
        if bad:
            raise ConfigError(f"unknown {name} {bad[0]!r}; choose from {', '.join(allowed)}")
    if not config.variants and not config.baselines:
        raise ConfigError("nothing to evaluate: no variants and no baselines")
    for m in config.table_metrics:
        if m not in ("accuracy", "macro_f1", "balanced_accuracy"):
            raise ConfigError(f"unknown table metric {m!r}")


def _truth_amplitudes(cell: Cell) -> AmplitudeMatrix:
    laws = make_profiles(cell.spec)
    p = np.vstack([law.T for law in laws]) / len(laws)
    return AmplitudeMatrix(np.sqrt(p), CLASS_NORMALIZED)


def _stability(cell: Cell, train) -> dict:
    """Population versus empirical class-normalized operator for one cell."""
    truth = _truth_amplitudes(cell)
    empirical = class_normalized_amplitudes(class_frequency_matrix(train))
    p_min = float(np.min(truth.columns ** 2))
    n_min = int(np.min(train.class_counts()))
    r = spectral_decompose(truth).rank
    try:
        rep = embedding_stability_report(
            truth, empirical, r,
            n_min=n_min if p_min > 0 else None,
            p_min=p_min if p_min > 0 else None,
        )
    except DmmError as exc:
        return {"error": str(exc)}
    out = rep.to_dict()
    out["parameters"]["p_min"] = p_min
    out["parameters"]["n_min"] = n_min
    return out


def _run_cell(index: int, cell: Cell, config: ExperimentConfig) -> tuple[dict, dict]:
    timings: dict = {}
    t0 = time.perf_counter()
    train, test = generate(cell.spec, (index,))
    timings["generate"] = time.perf_counter() - t0

    methods: dict = {}
    models: dict = {}
    for variant in config.variants:
        t0 = time.perf_counter()
        model = fit_pipeline(train, replace(config.pipeline, variant=variant))
        timings[f"fit_{variant}"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        latent = model.transform(test)
        for rule in config.rules:
            pred = predict(model.kde, latent, rule)
            methods[method_name(variant, rule)] = metrics(pred, test.labels, test.k).to_dict()
        timings[f"predict_{variant}"] = time.perf_counter() - t0
        bw = np.asarray(model.kde.bandwidths)
        models[variant] = {
            "rank": model.embedding.r,
            "eigenvalues": model.spectrum.eigenvalues.tolist(),
            "bandwidths": bw.tolist(),
            "priors": np.asarray(model.kde.priors).tolist(),
            "floored_bandwidth_classes": np.flatnonzero(bw <= H_MIN).tolist(),
        }

    for name in config.baselines:
        t0 = time.perf_counter()
        scale = 1.0 / math.sqrt(train.schema.q)
        clf = PcaKnn(r=train.k, neighbors=KNN_NEIGHBORS)
        clf.fit(train.dense() * scale, train.labels, train.k)
        pred = clf.predict(test.dense() * scale)
        methods[name] = metrics(pred, test.labels, test.k).to_dict()
        timings[name] = time.perf_counter() - t0

    result = {
        "index": index,
        "params": cell.params_dict(),
        "d": train.schema.d,
        "q": train.schema.q,
        "n_train": train.n,
        "n_test": test.n,
        "test_class_counts": test.class_counts().tolist(),
        "methods": methods,
        "models": models,
    }
    if config.stability:
        t0 = time.perf_counter()
        result["stability"] = _stability(cell, train)
        timings["stability"] = time.perf_counter() - t0
    return result, timings


def _run_cell_safe(index: int, cell: Cell, config: ExperimentConfig):
    try:
        return _run_cell(index, cell, config)
    except DmmError as exc:
        raise type(exc)(f"cell {index} {cell.params_dict()}: {exc}") from exc
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        raise DmmError(f"cell {index} {cell.params_dict()}: {exc}") from exc


def run(config: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """Evaluate every cell of ``config``.

    Cells run concurrently on up to ``threads`` workers (default from
    :func:`max_threads`); results are assembled in cell order so the report
    bytes do not depend on scheduling.
    """
    _validate(config)
    workers = max_threads(len(config.cells)) if threads is None else max(1, int(threads))
    log.info("running %s: %d cells on %d threads", config.name, len(config.cells), workers)
    t_start = time.perf_counter()
    with warnings.catch_warnings():
        # floored bandwidths are recorded per model in the report instead
        warnings.simplefilter("ignore", DegenerateBandwidthWarning)
        if workers == 1:
            results = [_run_cell_safe(j, c, config) for j, c in enumerate(config.cells)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_cell_safe, j, c, config)
                           for j, c in enumerate(config.cells)]
                results = [f.result() for f in futures]
    data = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "h_min": H_MIN,
        "config": config.to_dict(),
        "cells": [r for r, _ in results],
    }
    timings = {
        "cells": [t for _, t in results],
        "total_seconds": time.perf_counter() - t_start,
        "threads": workers,
    }
    return ExperimentReport(data, timings)
