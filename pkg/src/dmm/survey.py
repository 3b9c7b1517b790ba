"""Blockwise one-hot survey space: schema, sparse survey vectors, labeled datasets.

A survey with ``q`` categorical questions, question ``i`` having ``m_i >= 2``
modalities, lives in ``{0,1}^d`` with ``d = sum(m_i)``.  Samples are stored
sparsely as the ``q`` active modality indices; the dense expansion is only
built on request.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError, EncodingError, SchemaError

__all__ = [
    "SurveySchema",
    "SurveyVector",
    "LabeledDataset",
    "encode",
    "decode",
    "normalize",
    "load_dataset",
    "load_schema",
    "load_features",
]


@dataclass(frozen=True)
class SurveySchema:
    """Layout of the one-hot survey space.

    Parameters
    ----------
    block_sizes : sequence of int
        Modality counts ``m_1..m_q``; each must be at least 2.
    names : sequence of str, optional
        Block (column) names.
    categories : sequence of sequence of str, optional
        Category strings per block; position gives the modality index.
    """

    block_sizes: tuple[int, ...]
    names: tuple[str, ...] | None = None
    categories: tuple[tuple[str, ...], ...] | None = None
    block_offsets: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        sizes = tuple(int(m) for m in self.block_sizes)
        if not sizes:
            raise SchemaError("schema needs at least one block")
        for i, m in enumerate(sizes):
            if m < 2:
                raise SchemaError(f"block {i} has {m} modalities; at least 2 are required")
        object.__setattr__(self, "block_sizes", sizes)
        offsets = [0]
        for m in sizes:
            offsets.append(offsets[-1] + m)
        object.__setattr__(self, "block_offsets", tuple(offsets))

        if self.names is not None:
            names = tuple(str(s) for s in self.names)
            if len(names) != len(sizes):
                raise SchemaError(f"{len(names)} block names for {len(sizes)} blocks")
            object.__setattr__(self, "names", names)
        if self.categories is not None:
            cats = tuple(tuple(str(c) for c in block) for block in self.categories)
            if len(cats) != len(sizes):
                raise SchemaError(f"{len(cats)} category lists for {len(sizes)} blocks")
            for i, (block, m) in enumerate(zip(cats, sizes)):
                if len(block) != m:
                    raise SchemaError(f"block {i}: {len(block)} categories but size {m}")
                if len(set(block)) != m:
                    raise SchemaError(f"block {i}: duplicate category names")
            object.__setattr__(self, "categories", cats)

    @property
    def q(self) -> int:
        return len(self.block_sizes)

    @property
    def d(self) -> int:
        return self.block_offsets[-1]

    @property
    def offsets_array(self) -> np.ndarray:
        """Start coordinate of every block, shape ``(q,)``."""
        return np.asarray(self.block_offsets[:-1], dtype=np.int64)

    def block_of(self, coordinate: int) -> tuple[int, int]:
        """Return ``(block, modality)`` for a one-hot coordinate."""
        if not 0 <= coordinate < self.d:
            raise EncodingError(f"coordinate {coordinate} outside [0, {self.d})")
        block = int(np.searchsorted(self.block_offsets, coordinate, side="right")) - 1
        return block, coordinate - self.block_offsets[block]

    def to_dict(self) -> dict:
        out: dict = {"block_sizes": list(self.block_sizes)}
        if self.names is not None:
            out["names"] = list(self.names)
        if self.categories is not None:
            out["categories"] = [list(c) for c in self.categories]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SurveySchema":
        return cls(
            block_sizes=data["block_sizes"],
            names=data.get("names"),
            categories=data.get("categories"),
        )


@dataclass(frozen=True)
class SurveyVector:
    """A one-hot survey response stored as its ``q`` active modalities."""

    schema: SurveySchema
    active: tuple[int, ...]

    @property
    def indices(self) -> np.ndarray:
        """Global one-hot coordinates of the active entries."""
        return self.schema.offsets_array + np.asarray(self.active, dtype=np.int64)

    def dense(self) -> np.ndarray:
        x = np.zeros(self.schema.d)
        x[self.indices] = 1.0
        return x


def encode(schema: SurveySchema, modalities: Sequence[int]) -> SurveyVector:
    """Build the survey vector selecting ``modalities[i]`` in block ``i``."""
    mods = tuple(int(m) for m in modalities)
    if len(mods) != schema.q:
        raise SchemaError(f"expected {schema.q} modalities, got {len(mods)}")
    for i, (m, size) in enumerate(zip(mods, schema.block_sizes)):
        if not 0 <= m < size:
            raise EncodingError(f"modality {m} out of range for block {i} of size {size}")
    return SurveyVector(schema, mods)


def decode(x: SurveyVector) -> list[int]:
    return list(x.active)


def normalize(x: SurveyVector) -> np.ndarray:
    """Dense unit vector ``x / sqrt(q)``."""
    out = np.zeros(x.schema.d)
    out[x.indices] = 1.0 / math.sqrt(x.schema.q)
    return out


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LabeledDataset:
    """Labeled samples on a survey schema.

    ``codes[j, i]`` is the modality chosen by sample ``j`` in block ``i`` and
    ``labels[j]`` its class in ``[0, k)``.
    """

    schema: SurveySchema
    codes: np.ndarray
    labels: np.ndarray
    k: int
    label_names: tuple[str, ...] | None = None

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if codes.ndim != 2 or codes.shape[1] != self.schema.q:
            raise SchemaError(f"codes must have shape (n, {self.schema.q}), got {codes.shape}")
        if labels.shape != (codes.shape[0],):
            raise SchemaError("labels and codes disagree on the sample count")
        if self.k < 1:
            raise SchemaError("k must be positive")
        sizes = np.asarray(self.schema.block_sizes)
        if codes.size and ((codes < 0).any() or (codes >= sizes).any()):
            raise EncodingError("modality index out of range in dataset")
        if labels.size and ((labels < 0).any() or (labels >= self.k).any()):
            raise EncodingError(f"label outside [0, {self.k})")
        if self.label_names is not None:
            names = tuple(str(s) for s in self.label_names)
            if len(names) != self.k:
                raise SchemaError(f"{len(names)} label names for k={self.k}")
            object.__setattr__(self, "label_names", names)
        object.__setattr__(self, "codes", _frozen(codes))
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    def __len__(self) -> int:
        return self.n

    def active_indices(self) -> np.ndarray:
        """Global active coordinates, shape ``(n, q)``."""
        return self.codes + self.schema.offsets_array

    def vector(self, j: int) -> SurveyVector:
        return SurveyVector(self.schema, tuple(int(c) for c in self.codes[j]))

    @property
    def samples(self) -> Iterator[tuple[SurveyVector, int]]:
        for j in range(self.n):
            yield self.vector(j), int(self.labels[j])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def dense(self) -> np.ndarray:
        """Dense ``n x d`` one-hot matrix; for tests and small baselines only."""
        out = np.zeros((self.n, self.schema.d))
        out[np.arange(self.n)[:, None], self.active_indices()] = 1.0
        return out


# ---------------------------------------------------------------------------
# CSV / JSON loading


def load_schema(path: str | Path) -> tuple[SurveySchema, tuple[str, ...] | None]:
    """Read a schema file ``{"blocks": [{"name", "categories"}], "labels": [...]}``."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read schema {path}: {exc}") from exc
    try:
        blocks = data["blocks"]
        names = [b["name"] for b in blocks]
        cats = [list(b["categories"]) for b in blocks]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed schema {path}: missing {exc}") from exc
    labels = data.get("labels")
    schema = SurveySchema(tuple(len(c) for c in cats), names=names, categories=cats)
    return schema, (tuple(str(s) for s in labels) if labels is not None else None)


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = [h.strip() for h in rows[0]], rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names")
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        for col, value in zip(header, row):
            if value.strip() == "":
                raise DataError(f"{path}:{lineno}: missing value in column {col!r}")
    return header, body


def _encode_columns(path, header, body, schema: SurveySchema) -> np.ndarray:
    if schema.names is None or schema.categories is None:
        raise SchemaError("schema needs block names and categories to read a table")
    missing = [c for c in schema.names if c not in header]
    if missing:
        raise DataError(f"{path}: schema columns not in file: {missing}")
    codes = np.empty((len(body), schema.q), dtype=np.int64)
    for i, (name, cats) in enumerate(zip(schema.names, schema.categories)):
        pos = header.index(name)
        lookup = {c: m for m, c in enumerate(cats)}
        for j, row in enumerate(body):
            value = row[pos].strip()
            try:
                codes[j, i] = lookup[value]
            except KeyError:
                raise DataError(
                    f"{path}:{j + 2}: unknown category {value!r} in column {name!r}"
                ) from None
    return codes


def load_features(path: str | Path, schema: SurveySchema) -> np.ndarray:
    """Modality codes ``(n, q)`` of a CSV table under a fixed schema; extra columns are ignored."""
    header, body = _read_rows(path)
    return _encode_columns(path, header, body, schema)


def load_dataset(
    path: str | Path,
    schema_spec: "str | Path | SurveySchema | None" = "infer",
    label_column: str | None = None,
    label_names: Sequence[str] | None = None,
) -> LabeledDataset:
    """Load a labeled CSV table.

    Parameters
    ----------
    path : str or Path
        UTF-8 CSV with a header row; one categorical column per block plus a
        label column.
    schema_spec : str, Path or SurveySchema, optional
        A schema object, the path of a JSON schema file, or ``"infer"`` (or
        None) to build the schema from the data with categories in
        lexicographic order.
    label_column : str, optional
        Name of the label column; defaults to the last column.
    label_names : sequence of str, optional
        Label table; defaults to the schema file's ``labels`` or the sorted
        distinct labels found in the file.
    """
    header, body = _read_rows(path)
    label_col = header[-1] if label_column is None else label_column
    if label_col not in header:
        raise DataError(f"{path}: label column {label_col!r} not found")
    label_idx = header.index(label_col)

    if isinstance(schema_spec, SurveySchema):
        schema = schema_spec
    elif schema_spec is None or str(schema_spec) == "infer":
        feature_cols = [c for c in header if c != label_col]
        cats = [sorted({row[header.index(c)].strip() for row in body}) for c in feature_cols]
        for name, c in zip(feature_cols, cats):
            if len(c) < 2:
                raise DataError(
                    f"column {name!r} has a single observed category; "
                    "supply an explicit schema"
                )
        schema = SurveySchema(tuple(len(c) for c in cats), names=feature_cols, categories=cats)
    else:
        schema, file_labels = load_schema(schema_spec)
        if label_names is None:
            label_names = file_labels
    if label_names is None:
        label_names = sorted({row[label_idx].strip() for row in body})
    label_names = tuple(str(s) for s in label_names)

    codes = _encode_columns(path, header, body, schema)
    label_lookup = {s: y for y, s in enumerate(label_names)}
    labels = np.empty(len(body), dtype=np.int64)
    for j, row in enumerate(body):
        value = row[label_idx].strip()
        try:
            labels[j] = label_lookup[value]
        except KeyError:
            raise DataError(f"{path}:{j + 2}: unknown label {value!r}") from None
    return LabeledDataset(schema, codes, labels, len(label_names), label_names)
