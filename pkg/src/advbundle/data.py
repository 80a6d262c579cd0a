"""Datasets of unit-interval feature vectors with integer labels.

CSV layout: d feature columns followed by one integer label column. A
header row is optional on read and always written on save.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, DataError
from .seeding import make_rng


@dataclass(frozen=True)
class Example:
    """One labelled input; every feature must lie in [0, 1]."""

    features: np.ndarray
    label: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", feats)
        if feats.ndim != 1:
            raise ContractError(f"features must be a vector, got shape {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise ContractError("features must be finite")
        if np.any(feats < 0.0) or np.any(feats > 1.0):
            raise ContractError("features must lie in [0, 1]")
        if self.label < 0:
            raise ContractError(f"label must be non-negative, got {self.label}")


@dataclass
class Dataset:
    examples: list[Example]
    num_classes: int
    dimension: int = field(default=-1)

    def __post_init__(self):
        if self.num_classes < 2:
            raise ContractError(f"need at least 2 classes, got {self.num_classes}")
        if self.dimension < 0:
            if not self.examples:
                raise ContractError("empty dataset needs an explicit dimension")
            self.dimension = self.examples[0].features.shape[0]
        for i, ex in enumerate(self.examples):
            if ex.features.shape[0] != self.dimension:
                raise ContractError(
                    f"example {i} has dimension {ex.features.shape[0]}, "
                    f"expected {self.dimension}"
                )
            if ex.label >= self.num_classes:
                raise ContractError(f"example {i} label {ex.label} >= k={self.num_classes}")

    def __len__(self) -> int:
        return len(self.examples)

    def features_matrix(self) -> np.ndarray:
        return np.stack([ex.features for ex in self.examples])

    def labels(self) -> np.ndarray:
        return np.array([ex.label for ex in self.examples], dtype=np.int64)


def synth_dataset(n: int, d: int, k: int, seed: int) -> Dataset:
    """Draw k Gaussian blobs and squash each coordinate into [0, 1].

    Class means sit on a circle in the first two coordinates (or are spread
    along the axis for d=1), so a linear model separates them easily. Labels
    round-robin over classes, which keeps them balanced up to rounding.
    """
    if k < 2 or n < k or d < 1:
        raise ContractError(f"need n >= k >= 2 and d >= 1, got n={n}, d={d}, k={k}")
    rng = make_rng(seed)
    sep = 3.0
    means = np.zeros((k, d))
    if d == 1:
        means[:, 0] = sep * np.arange(k)
    else:
        angles = 2.0 * np.pi * np.arange(k) / k
        means[:, 0] = sep * np.cos(angles)
        means[:, 1] = sep * np.sin(angles)
    labels = np.arange(n) % k
    raw = means[labels] + rng.normal(0.0, 1.0, size=(n, d))
    lo = raw.min(axis=0)
    span = raw.max(axis=0) - lo
    span[span == 0.0] = 1.0
    feats = (raw - lo) / span
    examples = [Example(feats[i], int(labels[i])) for i in range(n)]
    return Dataset(examples, num_classes=k)


def load_dataset_csv(path: str | Path) -> Dataset:
    """Read a dataset, inferring k from the largest label seen (at least 2)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    rows: list[tuple[np.ndarray, int]] = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            try:
                values = [float(c) for c in cells]
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise DataError(f"{path}:{lineno}: non-numeric value")
            feats, label_val = np.array(values[:-1]), values[-1]
            if label_val != int(label_val):
                raise DataError(f"{path}:{lineno}: label must be an integer, got {label_val}")
            if feats.size == 0:
                raise DataError(f"{path}:{lineno}: need at least one feature column")
            if np.any(feats < 0.0) or np.any(feats > 1.0) or not np.all(np.isfinite(feats)):
                raise DataError(f"{path}:{lineno}: feature outside [0, 1]")
            rows.append((feats, int(label_val)))
    if not rows:
        raise DataError(f"{path}: no data rows")
    d = rows[0][0].shape[0]
    for i, (feats, _) in enumerate(rows):
        if feats.shape[0] != d:
            raise DataError(f"{path}: row {i + 1} has {feats.shape[0]} features, expected {d}")
    if min(label for _, label in rows) < 0:
        raise DataError(f"{path}: negative label")
    k = max(2, max(label for _, label in rows) + 1)
    try:
        return Dataset([Example(f, y) for f, y in rows], num_classes=k)
    except ContractError as exc:
        raise DataError(str(exc)) from exc


def save_dataset_csv(path: str | Path, dataset: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join([f"f{j}" for j in range(dataset.dimension)] + ["label"]) + "\n")
        for ex in dataset.examples:
            fh.write(",".join(repr(float(v)) for v in ex.features) + f",{ex.label}\n")
