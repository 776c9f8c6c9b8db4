"""Dataset container, CSV ingestion, min-max scaling, label noise and folds."""

from __future__ import annotations

import csv
import gzip
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    ConfigurationError,
    ContractViolation,
    DatasetParseError,
    EmptyDatasetError,
)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with integer class labels.

    Arrays are stored read-only; every transformation returns a new Dataset.
    ``label_names[k]`` is the original spelling of encoded label ``k``.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    normalized: bool = False
    label_names: tuple = ()
    name: str = ""

    def __post_init__(self):
        X = _frozen(self.features, np.float64)
        y = _frozen(self.labels, np.int64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ContractViolation(f"features must be a non-empty n x d matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ContractViolation("labels must have one entry per feature row")
        if self.class_count < 1:
            raise ContractViolation("class_count must be positive")
        if y.min() < 0 or y.max() >= self.class_count:
            raise ContractViolation("labels must lie in [0, class_count)")
        if not np.all(np.isfinite(X)):
            raise ContractViolation("features must be finite")
        if self.normalized and (X.min() < 0.0 or X.max() > 1.0):
            raise ContractViolation("normalized features must lie in [0, 1]")
        names = tuple(self.label_names) or tuple(str(k) for k in range(self.class_count))
        if len(names) != self.class_count:
            raise ContractViolation("label_names must have class_count entries")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "label_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def minority_class(self) -> int:
        """Least frequent class among those present; ties go to the smaller id."""
        counts = self.class_counts().astype(float)
        counts[counts == 0] = np.inf
        return int(np.argmin(counts))

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[idx],
            self.labels[idx],
            self.class_count,
            normalized=self.normalized,
            label_names=self.label_names,
            name=self.name,
        )

    def with_labels(self, labels) -> "Dataset":
        return Dataset(
            self.features,
            labels,
            self.class_count,
            normalized=self.normalized,
            label_names=self.label_names,
            name=self.name,
        )


@dataclass(frozen=True, eq=False)
class FoldPlan:
    fold_count: int
    assignments: np.ndarray
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def splits(self):
        for k in range(self.fold_count):
            yield self.train_indices(k), self.test_indices(k)


def _open_text(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt", newline="")
    return open(path, newline="")


def load_csv(path, has_header: bool = False, name: Optional[str] = None) -> Dataset:
    """Read ``features..., label`` rows from a comma-separated file.

    Labels may be any token; they are re-encoded to 0..k-1 in order of first
    appearance. Blank lines are ignored. ``.gz`` files are decompressed.
    """
    path = Path(path)
    rows, raw_labels = [], []
    width = None
    with _open_text(path) as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if has_header and lineno == 1:
                continue
            rec = [v.strip() for v in rec]
            if not rec or all(v == "" for v in rec):
                continue
            if width is None:
                if len(rec) < 2:
                    raise DatasetParseError(path, lineno, "need at least one feature and a label")
                width = len(rec)
            elif len(rec) != width:
                raise DatasetParseError(path, lineno, f"expected {width} fields, found {len(rec)}")
            try:
                rows.append([float(v) for v in rec[:-1]])
            except ValueError:
                bad = next(v for v in rec[:-1] if not _is_float(v))
                raise DatasetParseError(path, lineno, f"non-numeric feature value {bad!r}") from None
            if not all(math.isfinite(v) for v in rows[-1]):
                raise DatasetParseError(path, lineno, "non-finite feature value")
            raw_labels.append(rec[-1])
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")

    codes: dict = {}
    labels = [codes.setdefault(lab, len(codes)) for lab in raw_labels]
    return Dataset(
        np.asarray(rows),
        np.asarray(labels),
        class_count=len(codes),
        label_names=tuple(codes),
        name=name if name is not None else path.name.split(".")[0],
    )


def _is_float(v: str) -> bool:
    try:
        float(v)
    except ValueError:
        return False
    return True


@dataclass(frozen=True, eq=False)
class MinMaxScaling:
    """Per-column affine map ``(v - low) / span``; constant columns map to 0."""

    low: np.ndarray
    span: np.ndarray

    @classmethod
    def fit(cls, features) -> "MinMaxScaling":
        X = np.asarray(features, dtype=np.float64)
        low = X.min(axis=0)
        span = X.max(axis=0) - low
        return cls(low, span)

    def apply(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        out = np.zeros_like(X)
        live = self.span > 0
        out[..., live] = (X[..., live] - self.low[live]) / self.span[live]
        return out

    def to_dict(self) -> dict:
        return {"low": self.low.tolist(), "span": self.span.tolist()}

    @classmethod
    def from_dict(cls, doc) -> "MinMaxScaling":
        return cls(np.asarray(doc["low"], dtype=float), np.asarray(doc["span"], dtype=float))


def normalize_min_max(ds: Dataset) -> Dataset:
    if ds.normalized:
        return ds
    scaling = MinMaxScaling.fit(ds.features)
    return Dataset(
        scaling.apply(ds.features),
        ds.labels,
        ds.class_count,
        normalized=True,
        label_names=ds.label_names,
        name=ds.name,
    )


def round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def noise_flip_count(noise_rate: float, n: int) -> int:
    # Fraction(str(.)) keeps 0.1 * 775 at exactly 77.5 so the half-up rule applies
    return round_half_up(Fraction(str(noise_rate)) * n)


def inject_label_noise(ds: Dataset, noise_rate: float, seed: int):
    """Flip ``round(noise_rate * n)`` distinct labels to a different class.

    Returns ``(noisy_dataset, flipped_indices)``; indices are sorted.
    """
    if not 0.0 <= noise_rate <= 1.0:
        raise ConfigurationError(f"noise_rate must lie in [0, 1], got {noise_rate}")
    count = noise_flip_count(noise_rate, ds.n)
    if count == 0:
        return ds, np.zeros(0, dtype=np.int64)
    if ds.class_count < 2:
        raise ConfigurationError("label noise needs at least two classes")
    rng = np.random.default_rng(seed)
    flipped = np.sort(rng.choice(ds.n, size=count, replace=False))
    labels = ds.labels.copy()
    # offset in 1..k-1 picks uniformly among the other k-1 labels
    offsets = rng.integers(1, ds.class_count, size=count)
    labels[flipped] = (labels[flipped] + offsets) % ds.class_count
    return ds.with_labels(labels), flipped


def flipped_to_json(flipped) -> str:
    return json.dumps([int(i) for i in flipped])


def make_folds(ds: Dataset, fold_count: int = 10, seed: int = 0) -> FoldPlan:
    """Stratified fold assignment.

    Each class is shuffled with the seeded generator and dealt round-robin,
    continuing from where the previous class stopped so fold sizes also
    differ by at most one.
    """
    if fold_count < 2:
        raise ConfigurationError(f"fold_count must be at least 2, got {fold_count}")
    if fold_count > ds.n:
        raise ConfigurationError(f"fold_count {fold_count} exceeds dataset size {ds.n}")
    rng = np.random.default_rng(seed)
    assignments = np.empty(ds.n, dtype=np.int64)
    start = 0
    for k in range(ds.class_count):
        members = np.flatnonzero(ds.labels == k)
        members = members[rng.permutation(members.size)]
        assignments[members] = (start + np.arange(members.size)) % fold_count
        start = (start + members.size) % fold_count
    return FoldPlan(fold_count, _frozen(assignments, np.int64), seed)
