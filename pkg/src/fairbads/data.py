"""Dataset ingestion, group partitioning, meta-set carving and label-bias injection."""
from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np


class DataError(ValueError):
    """Raised for malformed input data."""


def rng_for(seed: int, op: str) -> np.random.Generator:
    """Independent, reproducible stream keyed by (seed, operation name)."""
    return np.random.default_rng([int(seed), zlib.crc32(op.encode())])


@dataclass(frozen=True)
class LabeledExample:
    x: np.ndarray
    y: int
    s: int
    y_clean: int


@dataclass(frozen=True)
class GroupData:
    """Feature matrix and labels of one slice of a dataset."""

    X: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled dataset stored column-wise.

    ``X`` is (n, d); ``y``, ``s`` and ``y_clean`` are integer vectors of length n.
    """

    X: np.ndarray
    y: np.ndarray
    s: np.ndarray
    y_clean: np.ndarray
    n_groups: int | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise DataError("X must be a 2-D array")
        n = X.shape[0]
        y = np.asarray(self.y, dtype=int)
        s = np.asarray(self.s, dtype=int)
        yc = np.asarray(self.y_clean, dtype=int)
        if not (len(y) == len(s) == len(yc) == n):
            raise DataError("column lengths differ")
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite feature value")
        if np.any((y != 0) & (y != 1)) or np.any((yc != 0) & (yc != 1)):
            raise DataError("labels must be 0 or 1")
        if np.any(s < 0):
            raise DataError("group index must be nonnegative")
        S = self.n_groups if self.n_groups is not None else (int(s.max()) + 1 if n else 0)
        if n and s.max() >= S:
            raise DataError(f"group index {int(s.max())} >= n_groups {S}")
        for name, arr in (("X", X), ("y", y), ("s", s), ("y_clean", yc)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n_groups", S)

    def __len__(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def group_sizes(self) -> list[int]:
        return np.bincount(self.s, minlength=self.n_groups).tolist()

    @property
    def n_max(self) -> int:
        return max(self.group_sizes) if len(self) else 0

    @property
    def examples(self) -> Iterator[LabeledExample]:
        for i in range(len(self)):
            yield LabeledExample(self.X[i], int(self.y[i]), int(self.s[i]), int(self.y_clean[i]))

    def group(self, s: int) -> GroupData:
        mask = self.s == s
        return GroupData(self.X[mask], self.y[mask])

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.s[idx], self.y_clean[idx], self.n_groups)

    def replace_labels(self, y) -> "Dataset":
        return Dataset(self.X, y, self.s, self.y_clean, self.n_groups)


@dataclass(frozen=True)
class MetaSet:
    """Clean meta examples; ``soft_labels`` rows are (P(y=0), P(y=1))."""

    X: np.ndarray
    y: np.ndarray
    soft_labels: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            X = X.reshape(len(self.y), -1)
        if X.shape[0] != len(self.y):
            raise DataError("meta features and labels differ in length")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", np.asarray(self.y, dtype=int))
        if self.soft_labels is not None:
            q = np.asarray(self.soft_labels, dtype=float)
            if q.shape != (len(self.y), 2):
                raise DataError("soft_labels must have shape (n, 2)")
            if np.any(q < 0) or np.any(np.abs(q.sum(axis=1) - 1.0) > 1e-9):
                raise DataError("soft_labels rows must be probability vectors")
            object.__setattr__(self, "soft_labels", q)

    def __len__(self) -> int:
        return len(self.y)

    @classmethod
    def empty(cls, d: int) -> "MetaSet":
        return cls(np.zeros((0, d)), np.zeros(0, dtype=int))

    @property
    def examples(self) -> Iterator[LabeledExample]:
        for i in range(len(self)):
            yield LabeledExample(self.X[i], int(self.y[i]), -1, int(self.y[i]))


def load_dataset(path, n_groups: int | None = None) -> Dataset:
    """Read a CSV with header ``f0..f{d-1}, y, s``.

    An optional ``y_clean`` column is honoured; otherwise ``y_clean = y``.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        feats = [h for h in header if h.startswith("f") and h[1:].isdigit()]
        d = len(feats)
        for col in ["y", "s"] + [f"f{j}" for j in range(d)]:
            if col not in header:
                raise DataError(f"{path}: missing column '{col}'")
        fidx = [header.index(f"f{j}") for j in range(d)]
        iy, is_ = header.index("y"), header.index("s")
        iyc = header.index("y_clean") if "y_clean" in header else None

        X, y, s, yc = [], [], [], []
        # row numbers count the header as row 1
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {rowno}: expected {len(header)} fields, got {len(row)}")
            try:
                X.append([float(row[j]) for j in fidx])
            except ValueError:
                raise DataError(f"{path}: row {rowno}: non-numeric feature") from None
            if not all(np.isfinite(X[-1])):
                raise DataError(f"{path}: row {rowno}: non-finite feature")
            lab = _parse_binary(row[iy], path, rowno, "y")
            y.append(lab)
            yc.append(_parse_binary(row[iyc], path, rowno, "y_clean") if iyc is not None else lab)
            try:
                g = int(row[is_])
            except ValueError:
                raise DataError(f"{path}: row {rowno}: column 's' is not an integer") from None
            if g < 0:
                raise DataError(f"{path}: row {rowno}: column 's' is negative")
            s.append(g)
    if not y:
        raise DataError(f"{path}: no examples")
    return Dataset(np.array(X).reshape(len(y), d), y, s, yc, n_groups)


def _parse_binary(text: str, path, rowno: int, col: str) -> int:
    try:
        val = float(text)
    except ValueError:
        raise DataError(f"{path}: row {rowno}: column '{col}' is not numeric") from None
    if val not in (0.0, 1.0):
        raise DataError(f"{path}: row {rowno}: column '{col}' must be 0 or 1, got {text.strip()}")
    return int(val)


def write_dataset(ds: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{j}" for j in range(ds.d)] + ["y", "s", "y_clean"])
        for i in range(len(ds)):
            w.writerow([repr(float(v)) for v in ds.X[i]] + [int(ds.y[i]), int(ds.s[i]), int(ds.y_clean[i])])


def inject_label_bias(ds: Dataset, bias_amount: float, target_group: int, rng_seed: int,
                      symmetric: bool = False) -> Dataset:
    """Flip clean positives of ``target_group`` to 0 with probability ``bias_amount``.

    With ``symmetric=True`` clean negatives are also flipped to 1 (ablation only).
    """
    if not 0.0 <= bias_amount <= 1.0:
        raise ValueError("bias_amount must lie in [0, 1]")
    if not 0 <= target_group < ds.n_groups:
        raise ValueError(f"target_group {target_group} out of range")
    u = rng_for(rng_seed, "inject_label_bias").random(len(ds))
    in_group = ds.s == target_group
    flip = in_group & (u < bias_amount)
    if symmetric:
        y = np.where(flip, 1 - ds.y_clean, ds.y)
    else:
        y = np.where(flip & (ds.y_clean == 1), 0, ds.y)
    return ds.replace_labels(y)


def carve_meta(ds: Dataset, fraction: float, rng_seed: int) -> tuple[Dataset, MetaSet]:
    """Split off ``round(fraction * n)`` examples as a meta set labelled by ``y_clean``."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    n = len(ds)
    n_meta = int(round(fraction * n))
    if n_meta == 0:
        raise ValueError(f"meta fraction {fraction} leaves an empty meta set for {n} examples")
    perm = rng_for(rng_seed, "carve_meta").permutation(n)
    meta_idx = np.sort(perm[:n_meta])
    train_idx = np.sort(perm[n_meta:])
    meta = MetaSet(ds.X[meta_idx], ds.y_clean[meta_idx])
    return ds.subset(train_idx), meta


def make_synthetic(n: int, d: int, minority_frac: float, seed: int, group_shift: float = 0.0,
                   noise: float = 1.0) -> Dataset:
    """Two-group logistic data with a shared labelling rule ``p(y | x)``.

    Group 1 is the minority. ``group_shift`` offsets the first feature of the minority
    group; with the default 0 the feature law is identical across groups, so any
    disparity in predictions comes from the labels seen during training.
    """
    rng = rng_for(seed, "make_synthetic")
    coef = rng.normal(size=d)
    coef *= 2.0 / np.linalg.norm(coef)
    s = np.zeros(n, dtype=int)
    s[rng.permutation(n)[: int(round(minority_frac * n))]] = 1
    X = rng.normal(size=(n, d))
    X[:, 0] += group_shift * s
    logits = (X @ coef) / noise
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logits))).astype(int)
    return Dataset(X, y, s, y, n_groups=2)
