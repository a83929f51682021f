"""Feature tables: ingestion, standardization, fold splitting and distances."""

from __future__ import annotations

import csv
import enum
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DataError

LD_THRESHOLD = 480.0
HD_THRESHOLD = 720.0


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """An n x m table of finite reals with named columns.

    ``ground_truth`` is an optional per-row categorical label that never
    takes part in clustering or modeling.
    """

    columns: tuple
    values: np.ndarray
    ground_truth: Optional[tuple] = None

    def __post_init__(self):
        columns = tuple(str(c) for c in self.columns)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError(f"values must be 2-D, got shape {values.shape}")
        n, m = values.shape
        if n < 1 or m < 1:
            raise DataError(f"dataset needs n >= 1 and m >= 1, got {n} x {m}")
        if len(columns) != m:
            raise DataError(f"{len(columns)} column names for {m} columns")
        if any(not c for c in columns):
            raise DataError("empty column name")
        if len(set(columns)) != m:
            raise DataError(f"duplicate column names: {_duplicates(columns)}")
        if not np.all(np.isfinite(values)):
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value at row {i}, column {columns[j]!r}")
        gt = self.ground_truth
        if gt is not None:
            gt = tuple(str(g) for g in gt)
            if len(gt) != n:
                raise DataError(f"ground truth has {len(gt)} entries for {n} rows")
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "ground_truth", gt)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise DataError(f"unknown feature {name!r}") from None

    def with_values(self, values) -> "Dataset":
        return Dataset(self.columns, values, self.ground_truth)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        gt = None if self.ground_truth is None else tuple(self.ground_truth[i] for i in rows)
        return Dataset(self.columns, self.values[rows], gt)


def _duplicates(names):
    seen, dup = set(), []
    for c in names:
        if c in seen and c not in dup:
            dup.append(c)
        seen.add(c)
    return dup


def load_csv(path, label_column: Optional[str] = None) -> Dataset:
    """Read a header-first, comma-separated UTF-8 feature table.

    The column named ``label_column`` (if any) becomes ``ground_truth``; every
    other cell must parse as a finite float.
    """
    if not os.path.isfile(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        dup = _duplicates(header)
        if dup:
            raise DataError(f"{path}: duplicate header names {dup}")
        if label_column is not None and label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column) if label_column is not None else None
        feature_idx = [j for j in range(len(header)) if j != label_idx]
        rows, labels = [], []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(
                    f"{path}: line {lineno} has {len(record)} fields, header has {len(header)}"
                )
            row = []
            for j in feature_idx:
                cell = record[j].strip()
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: row {lineno - 1} (line {lineno}), column {header[j]!r}: "
                        f"not a finite number: {cell!r}"
                    )
                row.append(v)
            rows.append(row)
            if label_idx is not None:
                labels.append(record[label_idx].strip())
    if not rows:
        raise DataError(f"{path}: no data rows")
    columns = [header[j] for j in feature_idx]
    return Dataset(columns, np.array(rows, dtype=float), labels if label_idx is not None else None)


def write_csv(d: Dataset, path, label_column: str = "label") -> None:
    header = list(d.columns)
    if d.ground_truth is not None:
        if label_column in header:
            raise DataError(f"label column {label_column!r} clashes with a feature name")
        header.append(label_column)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, row in enumerate(d.values):
            out = [repr(float(v)) for v in row]
            if d.ground_truth is not None:
                out.append(d.ground_truth[i])
            w.writerow(out)


@dataclass(frozen=True)
class ScalerParams:
    """Per-column z-score parameters (population standard deviation)."""

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        std = np.asarray(self.std, dtype=float)
        if mean.shape != std.shape or mean.ndim != 1:
            raise DataError("mean and std must be 1-D arrays of equal length")
        if np.any(std < 0):
            raise DataError("negative standard deviation")
        deg = std == 0 if self.degenerate is None else np.asarray(self.degenerate, dtype=bool)
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "std", _frozen(std))
        object.__setattr__(self, "degenerate", _frozen(deg))

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        scale = np.where(self.degenerate, 1.0, self.std)
        Z = (X - self.mean) / scale
        if self.degenerate.any():
            Z = np.where(self.degenerate, 0.0, Z)
        return Z

    def inverse_transform(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return np.where(self.degenerate, self.mean, Z * self.std + self.mean)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "degenerate": self.degenerate.tolist(),
        }

    @classmethod
    def from_dict(cls, obj) -> "ScalerParams":
        return cls(np.array(obj["mean"]), np.array(obj["std"]), np.array(obj["degenerate"]))

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_json(cls, path) -> "ScalerParams":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit_scaler(X) -> ScalerParams:
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise DataError(f"standardization needs at least 2 rows, got {X.shape[0]}")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # constant columns can leave a rounding-level std, so flag spreads at
    # rounding level (and stds that underflowed) rather than exact zeros
    spread = np.ptp(X, axis=0)
    degenerate = (spread <= 1e-12 * np.abs(X).max(axis=0)) | ~(std > 1e-300)
    std = np.where(degenerate, 0.0, std)
    return ScalerParams(mean, std, degenerate)


def standardize(d: Dataset):
    """Z-score every column; constant columns become all-zero and are flagged."""
    params = fit_scaler(d.values)
    return d.with_values(params.transform(d.values)), params


def kfold_split(n: int, k: int, seed: int) -> list:
    """Shuffle ``range(n)`` and cut it into ``k`` folds whose sizes differ by at most one."""
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    if k > n:
        raise DataError(f"k = {k} exceeds n = {n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def stratified_kfold_split(labels, k: int, seed: int) -> list:
    """Folds with per-class counts differing by at most one across folds.

    Each class is shuffled independently and dealt round-robin, continuing
    the deal position across classes so fold sizes also stay balanced.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    if k > n:
        raise DataError(f"k = {k} exceeds n = {n}")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    pos = 0
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        for i in idx:
            folds[pos % k].append(int(i))
            pos += 1
    return [np.array(sorted(f), dtype=int) for f in folds]


def pairwise_distances(d) -> np.ndarray:
    """Euclidean distance matrix (symmetric, zero diagonal)."""
    X = d.values if isinstance(d, Dataset) else np.asarray(d, dtype=float)
    if X.shape[0] < 2:
        return np.zeros((X.shape[0], X.shape[0]))
    D = squareform(pdist(X, metric="euclidean"))
    D.setflags(write=False)
    return D


class QualityClass(enum.IntEnum):
    LD = 0
    SD = 1
    HD = 2


def bin_quality(avgq: float) -> QualityClass:
    """Map an average video resolution to LD / SD / HD.

    The SD and HD ranges share the value 720; it is assigned to HD.
    """
    if not avgq >= 0:
        raise DataError(f"AVGQ must be non-negative, got {avgq}")
    if avgq < LD_THRESHOLD:
        return QualityClass.LD
    if avgq < HD_THRESHOLD:
        return QualityClass.SD
    return QualityClass.HD


def as_matrix(d) -> np.ndarray:
    if isinstance(d, Dataset):
        return np.asarray(d.values)
    X = np.asarray(d, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


def encode_labels(labels: Sequence):
    """Return (classes, codes) with classes sorted and codes indexing them."""
    classes, codes = np.unique(np.asarray(labels), return_inverse=True)
    return classes, codes.reshape(-1)
